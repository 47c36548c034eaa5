#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adcs/config.hpp"
#include "adcs/steering.hpp"

namespace adcs {

/// Out-of-sample statistics of one policy on a fresh scenario set.
struct PolicyEvaluation {
    std::vector<double> costs;  ///< per trial, un-normalized stage-cost sum
    std::vector<Vector> x_final;
    std::vector<Vector> p_true;
    std::vector<Vector> p_hat_final;
    std::vector<bool> trial_satisfied;  ///< |x_N - mu_F| <= 3 sqrt(diag Sigma_F) componentwise

    double cost_mean = 0.0;
    double cost_stderr = 0.0;
    Vector terminal_mean;
    Vector mean_error;      ///< terminal_mean - mu_F
    Vector mean_stderr;     ///< sqrt(diag(terminal_cov) / M)
    Matrix terminal_cov;    ///< centered, divided by M
    double cov_excess = 0.0;  ///< max eigenvalue of (terminal_cov - Sigma_F)
    double eps_eval = 0.0;
    bool cov_ok = false;

    TrajectoryBatch trajectories;  ///< kept only when requested
};

PolicyEvaluation evaluate_policy(const DualAffinePolicy& pol, const SteeringSpec& spec, int M, std::uint64_t seed,
                                 double eps_eval, bool keep_trajectories = false);
PolicyEvaluation evaluate_policy(const StaticAffinePolicy& pol, const SteeringSpec& spec, int M,
                                 std::uint64_t seed, double eps_eval, bool keep_trajectories = false);

/**
 * Componentwise out-of-sample mean test: |mean_error| <= Delta_mu + 3 SE, with
 * SE combining the design-sample and evaluation-sample errors of the mean,
 * sqrt(s^2 / M_design + s^2 / M_eval).
 */
Vector mean_tolerance(const PolicyEvaluation& ev, const Vector& delta_mu, int design_samples);
bool mean_ok(const PolicyEvaluation& ev, const Vector& delta_mu, int design_samples);

struct FormulationReport {
    Formulation formulation = Formulation::adaptive_dual;
    std::string status;  ///< solver status, or "error"
    std::string error;
    std::optional<SteeringSolution> solution;
    std::optional<PolicyEvaluation> evaluation;  ///< absent when infeasible or failed
    std::optional<double> cost_norm;
    /// Solved without an infeasibility declaration and the returned point meets the
    /// design constraints within the solver tolerance (iteration_limit included).
    bool design_feasible = false;
    bool satisfied = false;  ///< mean and covariance out-of-sample checks both pass
    double solve_seconds = 0.0;
    double eval_seconds = 0.0;
};

struct CellReport {
    std::string prior;
    double sigma_f_theta = 0.0;
    SteeringSpec spec;
    double eps_eval = 0.0;
    int eval_samples = 0;
    std::vector<FormulationReport> formulations;

    std::string name() const { return cell_name(prior, sigma_f_theta); }
    const FormulationReport* find(Formulation f) const;
};

struct ComparisonReport {
    std::vector<CellReport> cells;
    bool any_infeasible() const;
};

/**
 * Solves every configured formulation in every grid cell on the cell's shared
 * design scenarios, evaluates each policy on one shared evaluation set, and
 * normalizes mean costs by the adaptive-dual mean cost. Solver failures are
 * recorded per formulation. When log_dir is non-empty, solver iteration logs
 * go to log_dir/<cell>/solver_<formulation>.log.
 */
ComparisonReport run_comparison(const ExperimentConfig& cfg, const std::filesystem::path& log_dir = {});

/// Runs one cell (used by run_comparison).
CellReport run_cell(const ExperimentConfig& cfg, const std::string& prior, double sigma_f_theta,
                    const std::filesystem::path& log_dir = {});

/// Per-cell summary object: formulation -> {status, cost_mean, cost_norm, ...}, as JSON text.
std::string cell_summary_json(const CellReport& cell);
/// Grid summary: cell name -> cell summary, as JSON text (sorted keys, no timings).
std::string summary_json(const ComparisonReport& report);

/// Writes summary.json, timing.json and table.csv at the top of dir and, per
/// cell, summary.json, trials.csv, trajectories_<f>.csv and policy_<f>.json.
void emit_outputs(const ComparisonReport& report, const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Per-trial CSV: formulation, trial, cost, x_N*, p_true*, p_hat_N*, satisfied.
void write_trials_csv(std::ostream& os, const CellReport& cell);

/// Policy file: header (formulation, N, nx, nu, np) and the flat decision vector
/// in DecisionLayout order.
void write_policy_json(const std::filesystem::path& path, const SteeringSolution& sol);
SteeringSolution read_policy_json(const std::filesystem::path& path);

/// Statistics of one evaluation as JSON text (used by the CLI evaluate command).
std::string evaluation_json(const PolicyEvaluation& ev, const SteeringSpec& spec, int design_samples);

}  // namespace adcs
