#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adcs/model.hpp"
#include "adcs/saa_nlp.hpp"
#include "adcs/scenario.hpp"
#include "adcs/solver.hpp"
#include "adcs/steering.hpp"
#include "adcs/vehicle.hpp"

namespace adcs {

/// Terminal covariance target Sigma_F = diag(base) with the entries listed in
/// theta_indices replaced by theta.
struct TerminalCovariance {
    Vector base;
    std::vector<int> theta_indices;

    Matrix build(double theta) const;
};

/**
 * One experiment: a system, a table of named priors, and the settings shared
 * by every grid cell. The grid is priors x sigma_f_theta.
 */
struct ExperimentConfig {
    ParametricAffineSystem sys;
    std::optional<VehicleParams> vehicle;  ///< set when the system came from vehicle parameters

    std::map<std::string, ParameterPrior> priors;
    std::vector<std::string> grid_priors;  ///< names into `priors`, in run order
    std::vector<double> grid_sigma_f_theta;

    InitialStateDistribution init;
    NoiseModel noise;
    CostWeights cost;
    Vector mu_F;
    TerminalCovariance sigma_f;
    Vector delta_mu;     ///< empty: default_delta_mu
    Vector delta_sigma;  ///< empty: default_delta_sigma
    /// When set, Delta_Sigma(i,j) = c * sqrt(Sigma_F(i,i) Sigma_F(j,j)); overrides delta_sigma.
    std::optional<double> delta_sigma_relative;
    double gamma = 1.0;

    std::vector<Formulation> formulations;
    int design_samples = 64;
    std::uint64_t design_seed = 1;
    int eval_samples = 1000;
    std::uint64_t eval_seed = 2;
    std::optional<double> eps_eval;  ///< default 0.05 * max|Sigma_F|
    Vector p_star;                   ///< full-information realization; empty: prior mean
    SolverOptions solver;
    int trajectory_trials = 20;
    std::string output_dir = "out";

    void validate() const;

    /// Steering specification for one grid cell.
    SteeringSpec spec(const std::string& prior_name, double sigma_f_theta) const;
    double eps_eval_for(const Matrix& Sigma_F) const;
};

/// Parses the JSON config format documented in docs/config.md. Relative
/// output directories are kept as written.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Cell label used for directory names and summary keys, e.g. "uniform_theta_0.001".
std::string cell_name(const std::string& prior_name, double sigma_f_theta);

}  // namespace adcs
