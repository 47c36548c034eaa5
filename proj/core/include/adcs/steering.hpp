#pragma once

#include <cstdint>
#include <iosfwd>

#include "adcs/model.hpp"
#include "adcs/policy.hpp"
#include "adcs/saa_nlp.hpp"
#include "adcs/scenario.hpp"
#include "adcs/solver.hpp"

namespace adcs {

/// Everything needed to pose any of the steering formulations.
struct SteeringSpec {
    ParametricAffineSystem sys;
    ParameterPrior prior;
    InitialStateDistribution init;
    NoiseModel noise;
    CostWeights cost;
    Vector mu_F;
    Matrix Sigma_F;
    Vector delta_mu;     ///< empty: default_delta_mu(Sigma_F)
    Vector delta_sigma;  ///< empty: default_delta_sigma(Sigma_F)
    double gamma = 1.0;
    int design_samples = 64;
    std::uint64_t design_seed = 1;
    bool normalize_cost = true;
    SolverOptions solver;

    void validate() const;
    Vector effective_delta_mu() const;
    Vector effective_delta_sigma() const;
};

/// Design scenarios drawn from the spec (shared by every formulation).
ScenarioSet design_scenarios(const SteeringSpec& spec);

/// SAA problem for a formulation on the shared design scenarios, specialized.
SaaProblem make_problem(const SteeringSpec& spec, Formulation f, const Vector& p_star = Vector());

struct SteeringSolution {
    Formulation formulation = Formulation::adaptive_dual;
    DualAffinePolicy policy;  ///< adaptive blocks are zero for the static classes
    Matrix V;
    SolverResult result;
    double raw_max_violation = 0.0;  ///< max_i c_i re-evaluated at the returned point

    StaticAffinePolicy static_policy() const { return policy.static_part(); }
    Vector decision() const;
};

/// Solves a specialized problem from z0. Constraint rows reach the solver in
/// problem units.
SteeringSolution solve_problem(const SaaProblem& prob, const Vector& z0, const SolverOptions& opts,
                               const Vector& multipliers0 = Vector(), std::ostream* log = nullptr);

/// Zero gains, V = chol(Sigma_F).
Vector cold_start(const SaaProblem& prob);

SteeringSolution solve_certainty_equivalence(const SteeringSpec& spec, std::ostream* log = nullptr);

/// Warm-started from `warm` (a certainty-equivalence solution) or, when null,
/// from a certainty-equivalence solve.
SteeringSolution solve_static_robust(const SteeringSpec& spec, const SteeringSolution* warm = nullptr,
                                     std::ostream* log = nullptr);

/// Warm-started from `warm` (a static-robust solution, embedded) or, when
/// null, from a static-robust solve.
SteeringSolution solve_adaptive_dual(const SteeringSpec& spec, const SteeringSolution* warm = nullptr,
                                     std::ostream* log = nullptr);

/// Static policy designed with the parameter revealed as p_star.
SteeringSolution solve_full_information(const SteeringSpec& spec, const Vector& p_star, std::ostream* log = nullptr);

}  // namespace adcs
