#include "adcs/estimation.hpp"

#include <cmath>
#include <sstream>

namespace adcs {

using detail::require;

EstimatorState EstimatorState::from_prior(const Vector& mean, const Matrix& cov, double gamma) {
    detail::require_dims(cov, mean.size(), mean.size(), "prior covariance");
    require(gamma > 0.0 && gamma <= 1.0, "forgetting factor must lie in (0, 1]");
    return EstimatorState{mean, 0.5 * (cov + cov.transpose()), gamma};
}

EstimatorState rls_update(const EstimatorState& state, const Matrix& gamma_mat, const Vector& residual,
                          double* min_pivot) {
    const auto np = state.p_hat.size();
    const auto nx = residual.size();
    detail::require_dims(state.P, np, np, "estimator covariance");
    detail::require_dims(gamma_mat, nx, np, "regressor");
    require(state.gamma > 0.0 && state.gamma <= 1.0, "forgetting factor must lie in (0, 1]");
    require(gamma_mat.allFinite() && residual.allFinite() && state.p_hat.allFinite() && state.P.allFinite(),
            "rls_update: non-finite input");

    const double g = state.gamma;
    const Matrix gp = gamma_mat * state.P;  // nx x np
    Matrix inner = gp * gamma_mat.transpose();
    inner.diagonal().array() += g;

    Eigen::LDLT<Matrix> ldlt(inner);
    const double pivot = nx > 0 ? ldlt.vectorD().cwiseAbs().minCoeff() : g;
    if (min_pivot != nullptr) *min_pivot = pivot;
    const double scale = nx > 0 ? std::max(1.0, inner.cwiseAbs().maxCoeff()) : 1.0;
    if (ldlt.info() != Eigen::Success || !(pivot > 1e-14 * scale)) {
        std::ostringstream os;
        os << "rls_update: gamma I + G P G^T is numerically singular (gamma=" << g << ", min pivot=" << pivot << ")";
        throw NumericalError(os.str());
    }

    EstimatorState next;
    next.gamma = g;
    next.P = (state.P - gp.transpose() * ldlt.solve(gp)) / g;
    next.P = (0.5 * (next.P + next.P.transpose())).eval();
    if (np > 0) {
        const double tol = -1e-10 * std::max(1.0, next.P.cwiseAbs().maxCoeff());
        const double lmin = np == 1 ? next.P(0, 0) : detail::min_eigenvalue(next.P);
        if (lmin < tol) {
            std::ostringstream os;
            os << "rls_update: covariance lost positive semidefiniteness (min eigenvalue " << lmin << ")";
            throw NumericalError(os.str());
        }
    }
    next.p_hat = state.p_hat + next.P * (gamma_mat.transpose() * (residual - gamma_mat * state.p_hat));
    return next;
}

Vector batch_wls(const std::vector<RegressionSample>& history, const Vector& prior_mean, const Matrix& prior_cov,
                 double gamma) {
    const auto np = prior_mean.size();
    detail::require_dims(prior_cov, np, np, "prior covariance");
    require(gamma > 0.0 && gamma <= 1.0, "forgetting factor must lie in (0, 1]");

    Eigen::LLT<Matrix> prior_llt(0.5 * (prior_cov + prior_cov.transpose()));
    if (prior_llt.info() != Eigen::Success) {
        throw ContractViolation(
            "batch_wls: prior covariance is not positive definite; regularize it (e.g. regularized_prior_cov)");
    }
    const Matrix prior_info = prior_llt.solve(Matrix::Identity(np, np));

    const auto k = static_cast<int>(history.size());
    const double prior_weight = std::pow(gamma, k);
    Matrix normal = prior_weight * prior_info;
    Vector rhs = prior_weight * (prior_info * prior_mean);
    for (int t = 0; t < k; ++t) {
        const auto& s = history[static_cast<std::size_t>(t)];
        detail::require_dims(s.gamma, s.residual.size(), np, "history regressor");
        const double w = std::pow(gamma, k - t - 1);
        normal.noalias() += w * s.gamma.transpose() * s.gamma;
        rhs.noalias() += w * s.gamma.transpose() * s.residual;
    }
    Eigen::LLT<Matrix> llt(0.5 * (normal + normal.transpose()));
    if (llt.info() != Eigen::Success) throw NumericalError("batch_wls: normal equations not positive definite");
    return llt.solve(rhs);
}

Matrix regularized_prior_cov(const Matrix& prior_cov, double ridge) {
    Matrix out = prior_cov;
    out.diagonal().array() += ridge;
    return out;
}

}  // namespace adcs
