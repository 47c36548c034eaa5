#include "adcs/scenario.hpp"

#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "adcs/estimation.hpp"
#include "adcs/parallel.hpp"

namespace adcs {

using detail::require;

ScenarioSet ScenarioSet::with_parameter(const Vector& value) const {
    ScenarioSet out = *this;
    for (auto& p_i : out.p) p_i = value;
    return out;
}

ScenarioSet ScenarioSet::repeated(int times) const {
    require(times >= 1, "ScenarioSet::repeated: times must be >= 1");
    ScenarioSet out;
    out.seed = seed;
    out.prior_mean = prior_mean;
    out.prior_cov = prior_cov;
    for (int i = 0; i < size(); ++i) {
        for (int t = 0; t < times; ++t) {
            out.x0.push_back(x0[i]);
            out.p.push_back(p[i]);
            out.w.push_back(w[i]);
        }
    }
    return out;
}

ScenarioSet draw_scenarios(const ParametricAffineSystem& sys, const ParameterPrior& prior,
                           const InitialStateDistribution& init, const NoiseModel& noise, int M, std::uint64_t seed) {
    require(M >= 1, "draw_scenarios: M must be >= 1");
    require(prior.dim() == sys.np, "draw_scenarios: prior dimension differs from system np");
    require(init.mean.size() == sys.nx, "draw_scenarios: initial-state dimension differs from system nx");
    require(noise.dim == sys.nw, "draw_scenarios: noise dimension differs from system nw");

    ScenarioSet set;
    set.seed = seed;
    set.prior_mean = prior.mean();
    set.prior_cov = prior.covariance();
    set.x0.resize(M);
    set.p.resize(M);
    set.w.resize(M);
    parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
        auto rx = RngStream::derive(seed, i, StreamSource::initial_state);
        auto rp = RngStream::derive(seed, i, StreamSource::parameter);
        auto rw = RngStream::derive(seed, i, StreamSource::noise);
        set.x0[i] = sample_initial_state(init, rx);
        set.p[i] = sample_parameter(prior, rp);
        set.w[i].resize(sys.horizon);
        for (int k = 0; k < sys.horizon; ++k) set.w[i][k] = sample_noise(noise, rw);
    });
    return set;
}

namespace {

template <typename ControlFn>
TrajectoryBatch rollout(const ParametricAffineSystem& sys, const ScenarioSet& scen, double gamma, ControlFn&& control) {
    require(gamma > 0.0 && gamma <= 1.0, "rollout: forgetting factor must lie in (0, 1]");
    require(scen.prior_mean.size() == sys.np, "rollout: scenario prior dimension differs from system np");
    const int M = scen.size();
    const int N = sys.horizon;
    TrajectoryBatch traj;
    traj.x.resize(M);
    traj.u.resize(M);
    traj.p_hat.resize(M);
    traj.P.resize(M);
    std::vector<double> pivots(M, std::numeric_limits<double>::infinity());

    parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
        require(static_cast<int>(scen.w[i].size()) == N, "rollout: scenario noise length differs from horizon");
        auto& xs = traj.x[i];
        auto& us = traj.u[i];
        auto& ps = traj.p_hat[i];
        auto& Ps = traj.P[i];
        xs.reserve(N + 1);
        us.reserve(N);
        ps.reserve(N + 1);
        Ps.reserve(N + 1);
        xs.push_back(scen.x0[i]);
        EstimatorState est = EstimatorState::from_prior(scen.prior_mean, scen.prior_cov, gamma);
        ps.push_back(est.p_hat);
        Ps.push_back(est.P);
        for (int k = 0; k < N; ++k) {
            const Vector& x = xs.back();
            Vector u = control(k, x, est.p_hat);
            Vector next = step(sys, k, x, u, scen.p[i], scen.w[i][k]);
            if (!next.allFinite()) {
                std::ostringstream os;
                os << "rollout: non-finite state in scenario " << i << " at step " << k;
                throw NumericalError(os.str());
            }
            if (sys.np > 0) {
                try {
                    double pivot = 0.0;
                    const Vector residual = next - known_part(sys, k, x, u);
                    est = rls_update(est, assemble_gamma(sys, k, x, u), residual, &pivot);
                    pivots[i] = std::min(pivots[i], pivot);
                } catch (const NumericalError& e) {
                    std::ostringstream os;
                    os << e.what() << " [scenario " << i << ", step " << k << "]";
                    throw NumericalError(os.str());
                }
            }
            us.push_back(std::move(u));
            xs.push_back(std::move(next));
            ps.push_back(est.p_hat);
            Ps.push_back(est.P);
        }
    });
    traj.min_pivot = std::numeric_limits<double>::infinity();
    for (double p : pivots) traj.min_pivot = std::min(traj.min_pivot, p);
    return traj;
}

}  // namespace

TrajectoryBatch rollout_dual(const ParametricAffineSystem& sys, const DualAffinePolicy& pol, const ScenarioSet& scen,
                             double gamma) {
    require(pol.horizon() == sys.horizon && pol.np() == sys.np, "rollout_dual: policy shape differs from system");
    return rollout(sys, scen, gamma,
                   [&](int k, const Vector& x, const Vector& p_hat) { return eval_dual(pol, k, x, p_hat); });
}

TrajectoryBatch rollout_static(const ParametricAffineSystem& sys, const StaticAffinePolicy& pol,
                               const ScenarioSet& scen, double gamma) {
    require(pol.horizon() == sys.horizon, "rollout_static: policy horizon differs from system");
    return rollout(sys, scen, gamma, [&](int k, const Vector& x, const Vector&) { return eval_static(pol, k, x); });
}

CostWeights CostWeights::constant(int horizon, const Matrix& Q, const Matrix& R) {
    CostWeights w;
    w.Q.assign(horizon, Q);
    w.R.assign(horizon, R);
    return w;
}

void CostWeights::validate(int horizon, int nx, int nu) const {
    require(static_cast<int>(Q.size()) == horizon && static_cast<int>(R.size()) == horizon,
            "CostWeights: one Q and R per step required");
    for (int k = 0; k < horizon; ++k) {
        detail::require_dims(Q[k], nx, nx, "Q[" + std::to_string(k) + "]");
        detail::require_dims(R[k], nu, nu, "R[" + std::to_string(k) + "]");
        require(detail::is_symmetric(Q[k]) && detail::is_symmetric(R[k]), "CostWeights: Q and R must be symmetric");
        require(detail::min_eigenvalue(Q[k]) >= -1e-12, "CostWeights: Q must be positive semidefinite");
        require(detail::min_eigenvalue(R[k]) > 0.0, "CostWeights: R must be positive definite");
    }
}

std::vector<double> scenario_costs(const TrajectoryBatch& traj, const CostWeights& w) {
    const int N = traj.horizon();
    require(static_cast<int>(w.Q.size()) >= N && static_cast<int>(w.R.size()) >= N,
            "scenario_costs: cost schedule shorter than horizon");
    std::vector<double> costs(traj.size(), 0.0);
    for (int i = 0; i < traj.size(); ++i) {
        double c = 0.0;
        for (int k = 0; k < N; ++k) {
            const Vector& x = traj.x[i][k];
            const Vector& u = traj.u[i][k];
            c += x.dot(w.Q[k] * x) + u.dot(w.R[k] * u);
        }
        costs[i] = c;
    }
    return costs;
}

double saa_cost(const TrajectoryBatch& traj, const CostWeights& w, bool normalize) {
    double total = 0.0;
    for (double c : scenario_costs(traj, w)) total += c;
    return normalize && traj.size() > 0 ? total / traj.size() : total;
}

TerminalErrors terminal_errors(const TrajectoryBatch& traj, const Matrix& V, const Vector& mu_F,
                               const Matrix& Sigma_F) {
    const auto nx = mu_F.size();
    detail::require_dims(Sigma_F, nx, nx, "Sigma_F");
    detail::require_dims(V, nx, nx, "slack V");
    require(traj.size() >= 1, "terminal_errors: empty batch");
    const int M = traj.size();
    const int N = traj.horizon();
    Vector mean = Vector::Zero(nx);
    Matrix second = Matrix::Zero(nx, nx);
    for (int i = 0; i < M; ++i) {
        const Vector d = traj.x[i][N] - mu_F;
        mean += traj.x[i][N];
        second.noalias() += d * d.transpose();
    }
    TerminalErrors out;
    out.mean_error = mean / M - mu_F;
    const Matrix cov_err = second / M + V * V.transpose() - Sigma_F;
    out.cov_error = Eigen::Map<const Vector>(cov_err.data(), cov_err.size());
    return out;
}

TerminalResiduals terminal_residuals(const TrajectoryBatch& traj, const Matrix& V, const Vector& mu_F,
                                     const Matrix& Sigma_F) {
    const TerminalErrors e = terminal_errors(traj, V, mu_F, Sigma_F);
    return {e.mean_error.cwiseAbs(), e.cov_error.cwiseAbs()};
}

void write_trajectory_csv(std::ostream& os, const TrajectoryBatch& traj, const std::vector<int>& subset) {
    if (traj.size() == 0) return;
    const auto nx = traj.x[0][0].size();
    const auto nu = traj.horizon() > 0 ? traj.u[0][0].size() : 0;
    const auto np = traj.p_hat[0][0].size();
    os << "scenario,k";
    for (Eigen::Index j = 0; j < nx; ++j) os << ",x" << j;
    for (Eigen::Index j = 0; j < nu; ++j) os << ",u" << j;
    for (Eigen::Index j = 0; j < np; ++j) os << ",p_hat" << j;
    for (Eigen::Index j = 0; j < np; ++j) os << ",P" << j << j;
    os << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    std::vector<int> rows = subset;
    if (rows.empty()) {
        for (int i = 0; i < traj.size(); ++i) rows.push_back(i);
    }
    const int N = traj.horizon();
    for (int i : rows) {
        require(i >= 0 && i < traj.size(), "write_trajectory_csv: scenario index out of range");
        for (int k = 0; k <= N; ++k) {
            os << i << ',' << k;
            for (Eigen::Index j = 0; j < nx; ++j) os << ',' << traj.x[i][k][j];
            for (Eigen::Index j = 0; j < nu; ++j) {
                os << ',';
                if (k < N) os << traj.u[i][k][j];
            }
            for (Eigen::Index j = 0; j < np; ++j) os << ',' << traj.p_hat[i][k][j];
            for (Eigen::Index j = 0; j < np; ++j) os << ',' << traj.P[i][k](j, j);
            os << '\n';
        }
    }
}

}  // namespace adcs
