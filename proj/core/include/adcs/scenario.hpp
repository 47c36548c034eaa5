#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "adcs/model.hpp"
#include "adcs/policy.hpp"

namespace adcs {

/// Frozen Monte Carlo draws shared by every policy evaluated on them.
struct ScenarioSet {
    std::uint64_t seed = 0;
    std::vector<Vector> x0;              ///< [i]
    std::vector<Vector> p;               ///< [i], realized parameter
    std::vector<std::vector<Vector>> w;  ///< [i][k]
    Vector prior_mean;                   ///< estimator initialization p_hat_0
    Matrix prior_cov;                    ///< estimator initialization P_0

    int size() const { return static_cast<int>(x0.size()); }

    /// Copy with every realized parameter replaced by `value`.
    ScenarioSet with_parameter(const Vector& value) const;
    /// Copy with each scenario repeated `times` times in place (i -> i, i, ...).
    ScenarioSet repeated(int times) const;
};

/**
 * Draws M scenarios. Scenario i uses its own streams for x0, p and w derived
 * from (seed, i, source), so the first M' < M scenarios equal a draw of M'.
 */
ScenarioSet draw_scenarios(const ParametricAffineSystem& sys, const ParameterPrior& prior,
                           const InitialStateDistribution& init, const NoiseModel& noise, int M, std::uint64_t seed);

/// Closed-loop states, controls and estimator history for every scenario.
struct TrajectoryBatch {
    std::vector<std::vector<Vector>> x;      ///< [i][0..N]
    std::vector<std::vector<Vector>> u;      ///< [i][0..N-1]
    std::vector<std::vector<Vector>> p_hat;  ///< [i][0..N]
    std::vector<std::vector<Matrix>> P;      ///< [i][0..N]
    double min_pivot = 0.0;  ///< smallest LDL^T pivot met in the estimator updates

    int size() const { return static_cast<int>(x.size()); }
    int horizon() const { return x.empty() ? 0 : static_cast<int>(x.front().size()) - 1; }
};

/// Coupled state / estimator rollout under the parameter-scheduled policy.
TrajectoryBatch rollout_dual(const ParametricAffineSystem& sys, const DualAffinePolicy& pol, const ScenarioSet& scen,
                             double gamma = 1.0);

/// As rollout_dual with u = eval_static; the estimator still runs for diagnostics.
TrajectoryBatch rollout_static(const ParametricAffineSystem& sys, const StaticAffinePolicy& pol,
                               const ScenarioSet& scen, double gamma = 1.0);

/// Quadratic stage-cost schedule: Q[k] (nx x nx, PSD) and R[k] (nu x nu, PD).
struct CostWeights {
    std::vector<Matrix> Q;
    std::vector<Matrix> R;

    static CostWeights constant(int horizon, const Matrix& Q, const Matrix& R);
    void validate(int horizon, int nx, int nu) const;
};

/// Mean over scenarios of sum_k x'Qx + u'Ru; with normalize = false the plain sum.
double saa_cost(const TrajectoryBatch& traj, const CostWeights& w, bool normalize = true);

/// Per-scenario stage-cost sums.
std::vector<double> scenario_costs(const TrajectoryBatch& traj, const CostWeights& w);

/// Signed terminal moment errors (before taking absolute values).
struct TerminalErrors {
    Vector mean_error;  ///< sum_i x_N^i / M - mu_F
    Vector cov_error;   ///< vec(sum_i (x_N^i - mu_F)(x_N^i - mu_F)^T / M + V V^T - Sigma_F), column-major
};

TerminalErrors terminal_errors(const TrajectoryBatch& traj, const Matrix& V, const Vector& mu_F, const Matrix& Sigma_F);

/// Elementwise absolute terminal residuals (mean, vec covariance).
struct TerminalResiduals {
    Vector mean_residual;
    Vector cov_residual;
};

TerminalResiduals terminal_residuals(const TrajectoryBatch& traj, const Matrix& V, const Vector& mu_F,
                                     const Matrix& Sigma_F);

/// CSV: scenario,k,x*,u*,p_hat*,P_diag*. The u cells at k = N are empty.
/// Only scenarios listed in `subset` are written (all when empty).
void write_trajectory_csv(std::ostream& os, const TrajectoryBatch& traj, const std::vector<int>& subset = {});

}  // namespace adcs
