#include "adcs/model.hpp"

#include <cmath>
#include <numeric>

namespace adcs {

using detail::require;
using detail::require_dims;
using detail::require_size;

ParametricAffineSystem ParametricAffineSystem::zeros(int horizon, int nx, int nu, int np, int nw) {
    require(horizon >= 1 && nx >= 1 && nu >= 1 && np >= 0 && nw >= 1, "ParametricAffineSystem: invalid dimensions");
    ParametricAffineSystem sys;
    sys.horizon = horizon;
    sys.nx = nx;
    sys.nu = nu;
    sys.np = np;
    sys.nw = nw;
    const auto blocks = static_cast<std::size_t>(np + 1);
    sys.A.assign(horizon, std::vector<Matrix>(blocks, Matrix::Zero(nx, nx)));
    sys.B.assign(horizon, std::vector<Matrix>(blocks, Matrix::Zero(nx, nu)));
    sys.r.assign(horizon, std::vector<Vector>(blocks, Vector::Zero(nx)));
    sys.D.assign(horizon, Matrix::Zero(nx, nw));
    return sys;
}

void ParametricAffineSystem::validate() const {
    require(horizon >= 1, "ParametricAffineSystem: horizon must be >= 1");
    require(nx >= 1 && nu >= 1 && np >= 0 && nw >= 1, "ParametricAffineSystem: invalid dimensions");
    const auto n = static_cast<std::size_t>(horizon);
    require(A.size() == n && B.size() == n && r.size() == n && D.size() == n,
            "ParametricAffineSystem: block lists must have one entry per step");
    for (int k = 0; k < horizon; ++k) {
        const auto blocks = static_cast<std::size_t>(np + 1);
        require(A[k].size() == blocks && B[k].size() == blocks && r[k].size() == blocks,
                "ParametricAffineSystem: expected np + 1 blocks at step " + std::to_string(k));
        for (int j = 0; j <= np; ++j) {
            const std::string tag = "[" + std::to_string(k) + "][" + std::to_string(j) + "]";
            require_dims(A[k][j], nx, nx, "A" + tag);
            require_dims(B[k][j], nx, nu, "B" + tag);
            require_size(r[k][j], nx, "r" + tag);
            detail::require_finite(A[k][j], "A" + tag);
            detail::require_finite(B[k][j], "B" + tag);
            detail::require_finite(r[k][j], "r" + tag);
        }
        require_dims(D[k], nx, nw, "D[" + std::to_string(k) + "]");
        detail::require_finite(D[k], "D[" + std::to_string(k) + "]");
    }
}

namespace {

void check_step_args(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u) {
    if (k < 0 || k >= sys.horizon) {
        throw ContractViolation("step index " + std::to_string(k) + " outside [0, horizon)");
    }
    require_size(x, sys.nx, "state");
    require_size(u, sys.nu, "control");
}

}  // namespace

Matrix assemble_gamma(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u) {
    check_step_args(sys, k, x, u);
    Matrix gamma(sys.nx, sys.np);
    for (int j = 1; j <= sys.np; ++j) {
        gamma.col(j - 1) = sys.A[k][j] * x + sys.B[k][j] * u + sys.r[k][j];
    }
    return gamma;
}

Vector known_part(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u) {
    check_step_args(sys, k, x, u);
    return sys.A[k][0] * x + sys.B[k][0] * u + sys.r[k][0];
}

Vector step(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u, const Vector& p,
            const Vector& w) {
    check_step_args(sys, k, x, u);
    require_size(p, sys.np, "parameter");
    require_size(w, sys.nw, "noise");
    require(x.allFinite() && u.allFinite() && p.allFinite() && w.allFinite(), "step: non-finite input");
    return known_part(sys, k, x, u) + assemble_gamma(sys, k, x, u) * p + sys.D[k] * w;
}

std::string to_string(PriorFamily f) {
    switch (f) {
        case PriorFamily::gaussian: return "gaussian";
        case PriorFamily::uniform: return "uniform";
        case PriorFamily::beta: return "beta";
        case PriorFamily::gaussian_mixture: return "gaussian_mixture";
    }
    return "unknown";
}

PriorFamily prior_family_from_string(const std::string& s) {
    if (s == "gaussian") return PriorFamily::gaussian;
    if (s == "uniform") return PriorFamily::uniform;
    if (s == "beta") return PriorFamily::beta;
    if (s == "gaussian_mixture" || s == "mixture") return PriorFamily::gaussian_mixture;
    throw ContractViolation("unknown prior family '" + s + "'");
}

ParameterPrior ParameterPrior::gaussian(const Vector& mean, const Matrix& cov) {
    return gaussian_mixture({1.0}, {mean}, {cov}).with_family_gaussian();
}

ParameterPrior ParameterPrior::point_mass(const Vector& value) {
    return gaussian(value, Matrix::Zero(value.size(), value.size()));
}

ParameterPrior ParameterPrior::uniform(const Vector& lower, const Vector& upper) {
    require(lower.size() == upper.size(), "uniform prior: bound lengths differ");
    require(((upper - lower).array() >= 0.0).all(), "uniform prior: upper < lower");
    detail::require_finite(lower, "uniform prior lower");
    detail::require_finite(upper, "uniform prior upper");
    ParameterPrior prior;
    prior.family_ = PriorFamily::uniform;
    prior.lower_ = lower;
    prior.upper_ = upper;
    prior.mean_ = 0.5 * (lower + upper);
    const Vector width = upper - lower;
    prior.cov_ = (width.array().square() / 12.0).matrix().asDiagonal();
    return prior;
}

ParameterPrior ParameterPrior::beta(const Vector& alpha, const Vector& beta, const Vector& lower,
                                   const Vector& upper) {
    const auto n = lower.size();
    require(alpha.size() == n && beta.size() == n && upper.size() == n, "beta prior: parameter lengths differ");
    require((alpha.array() > 0.0).all() && (beta.array() > 0.0).all(), "beta prior: shapes must be positive");
    require(((upper - lower).array() >= 0.0).all(), "beta prior: upper < lower");
    ParameterPrior prior;
    prior.family_ = PriorFamily::beta;
    prior.alpha_ = alpha;
    prior.beta_ = beta;
    prior.lower_ = lower;
    prior.upper_ = upper;
    const Vector width = upper - lower;
    const Eigen::ArrayXd s = alpha.array() + beta.array();
    prior.mean_ = lower.array() + width.array() * alpha.array() / s;
    const Eigen::ArrayXd var = width.array().square() * alpha.array() * beta.array() / (s.square() * (s + 1.0));
    prior.cov_ = var.matrix().asDiagonal();
    return prior;
}

ParameterPrior ParameterPrior::gaussian_mixture(const std::vector<double>& weights, const std::vector<Vector>& means,
                                                const std::vector<Matrix>& covs) {
    require(!weights.empty(), "gaussian mixture: no components");
    require(weights.size() == means.size() && weights.size() == covs.size(),
            "gaussian mixture: component lists differ in length");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(total > 0.0, "gaussian mixture: weights must sum to a positive value");
    const auto n = means.front().size();
    ParameterPrior prior;
    prior.family_ = PriorFamily::gaussian_mixture;
    prior.mean_ = Vector::Zero(n);
    Matrix second = Matrix::Zero(n, n);
    for (std::size_t c = 0; c < weights.size(); ++c) {
        require(weights[c] >= 0.0, "gaussian mixture: negative weight");
        require_size(means[c], n, "gaussian mixture mean");
        require_dims(covs[c], n, n, "gaussian mixture covariance");
        require(detail::is_symmetric(covs[c]), "gaussian mixture: covariance not symmetric");
        require(n == 0 || detail::min_eigenvalue(covs[c]) >= -1e-12, "gaussian mixture: covariance not PSD");
        const double w = weights[c] / total;
        prior.weights_.push_back(w);
        prior.comp_means_.push_back(means[c]);
        prior.comp_covs_.push_back(covs[c]);
        prior.comp_sqrt_.push_back(n == 0 ? Matrix(0, 0) : detail::sqrt_psd(covs[c]));
        prior.mean_ += w * means[c];
        second += w * (covs[c] + means[c] * means[c].transpose());
    }
    prior.cov_ = second - prior.mean_ * prior.mean_.transpose();
    prior.cov_ = (0.5 * (prior.cov_ + prior.cov_.transpose())).eval();
    return prior;
}

ParameterPrior ParameterPrior::with_family_gaussian() && {
    family_ = PriorFamily::gaussian;
    // Single component: use its covariance verbatim rather than E[pp^T] - mm^T.
    cov_ = comp_covs_.front();
    mean_ = comp_means_.front();
    return std::move(*this);
}

Vector ParameterPrior::sample(RngStream& rng) const {
    const auto n = mean_.size();
    switch (family_) {
        case PriorFamily::uniform: {
            Vector p(n);
            for (Eigen::Index j = 0; j < n; ++j) p[j] = lower_[j] + (upper_[j] - lower_[j]) * rng.uniform();
            return p;
        }
        case PriorFamily::beta: {
            Vector p(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                std::gamma_distribution<double> ga(alpha_[j], 1.0);
                std::gamma_distribution<double> gb(beta_[j], 1.0);
                const double a = ga(rng.engine());
                const double b = gb(rng.engine());
                const double t = (a + b) > 0.0 ? a / (a + b) : 0.5;
                p[j] = lower_[j] + (upper_[j] - lower_[j]) * t;
            }
            return p;
        }
        case PriorFamily::gaussian:
        case PriorFamily::gaussian_mixture: {
            std::size_t c = 0;
            if (weights_.size() > 1) {
                const double t = rng.uniform();
                double acc = 0.0;
                for (c = 0; c + 1 < weights_.size(); ++c) {
                    acc += weights_[c];
                    if (t < acc) break;
                }
            }
            Vector z(n);
            for (Eigen::Index j = 0; j < n; ++j) z[j] = rng.normal();
            return comp_means_[c] + comp_sqrt_[c] * z;
        }
    }
    return mean_;
}

InitialStateDistribution::InitialStateDistribution(Vector mean_in, Matrix cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    require_dims(cov, mean.size(), mean.size(), "initial-state covariance");
    require(detail::is_symmetric(cov), "initial-state covariance not symmetric");
    require(detail::min_eigenvalue(cov) >= -1e-12, "initial-state covariance not PSD");
    sqrt_cov_ = detail::sqrt_psd(cov);
}

Vector InitialStateDistribution::sample(RngStream& rng) const {
    require(sqrt_cov_.rows() == mean.size(), "InitialStateDistribution: not initialized");
    Vector z(mean.size());
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = rng.normal();
    return mean + sqrt_cov_ * z;
}

Vector NoiseModel::sample(RngStream& rng) const {
    Vector w(dim);
    if (family == NoiseFamily::gaussian) {
        for (int j = 0; j < dim; ++j) w[j] = rng.normal();
    } else {
        // U[-sqrt(3), sqrt(3)] has unit variance.
        const double half = std::sqrt(3.0);
        for (int j = 0; j < dim; ++j) w[j] = half * (2.0 * rng.uniform() - 1.0);
    }
    return w;
}

}  // namespace adcs
