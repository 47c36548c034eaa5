#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adcs/model.hpp"
#include "adcs/policy.hpp"
#include "adcs/scenario.hpp"

namespace adcs {

/**
 * Bijection between (DualAffinePolicy, V) and a flat decision vector.
 *
 * Order: k-major, then j = 0..np; inside each (k, j) block the nu entries of
 * v[k][j] followed by L[k][j] in row-major order. The nx x nx slack V is
 * appended last, row-major.
 */
struct DecisionLayout {
    int horizon = 0;
    int nx = 0;
    int nu = 0;
    int np = 0;

    int block_size() const { return nu + nu * nx; }
    int gains_size() const { return horizon * (np + 1) * block_size(); }
    int size() const { return gains_size() + nx * nx; }

    int v_index(int k, int j, int a) const { return (k * (np + 1) + j) * block_size() + a; }
    int L_index(int k, int j, int row, int col) const { return (k * (np + 1) + j) * block_size() + nu + row * nx + col; }
    int V_index(int row, int col) const { return gains_size() + row * nx + col; }
};

Vector pack(const DecisionLayout& layout, const DualAffinePolicy& pol, const Matrix& V);
std::pair<DualAffinePolicy, Matrix> unpack(const DecisionLayout& layout, const Vector& z);

enum class Formulation { certainty_equivalence, static_robust, adaptive_dual, full_information };

std::string to_string(Formulation f);
Formulation formulation_from_string(const std::string& s);

/// Delta_mu default: 0.02 * sqrt(diag(Sigma_F)).
Vector default_delta_mu(const Matrix& Sigma_F);
/// Delta_Sigma default: 0.05 * max|Sigma_F| in every entry.
Vector default_delta_sigma(const Matrix& Sigma_F);

/// Sample-average steering NLP on a frozen scenario set.
struct SaaProblem {
    ParametricAffineSystem sys;
    CostWeights cost;
    Vector mu_F;
    Matrix Sigma_F;
    Vector delta_mu;     ///< nx, > 0
    Vector delta_sigma;  ///< nx * nx (column-major vec), > 0
    double gamma = 1.0;
    ScenarioSet scenarios;
    Formulation formulation = Formulation::adaptive_dual;
    Vector p_star;  ///< realized parameter for full_information
    bool normalize_cost = true;

    DecisionLayout layout() const { return {sys.horizon, sys.nx, sys.nu, sys.np}; }
    int num_constraints() const { return 2 * sys.nx + 2 * sys.nx * sys.nx; }

    void validate() const;
};

/**
 * Applies the formulation tag: certainty_equivalence sets every p^i to the
 * prior mean, full_information sets it to p_star, and both static classes
 * (and full_information) freeze the adaptive blocks at zero.
 */
SaaProblem specialize(const SaaProblem& prob);

/// true for coordinates the formulation optimizes over.
std::vector<bool> free_mask(const SaaProblem& prob);

/// Zeroes the coordinates frozen by the formulation.
Vector apply_mask(const SaaProblem& prob, const Vector& z);

struct ObjectiveEval {
    double value = 0.0;
    Vector gradient;
};

struct ConstraintEval {
    Vector values;    ///< c(z) <= 0 convention
    Matrix jacobian;  ///< rows x z.size()
};

/// Objective, constraints, and (optionally) their exact derivatives at one point.
struct NlpEval {
    double objective = 0.0;
    Vector gradient;
    Vector constraints;
    Matrix jacobian;
    double min_pivot = 0.0;  ///< estimator conditioning diagnostic
};

/**
 * Evaluates everything from a single rollout. Derivatives come from a reverse
 * sweep through the closed loop, including the estimator recursion.
 * Frozen coordinates are zeroed before evaluation and have zero derivative.
 */
NlpEval evaluate(const SaaProblem& prob, const Vector& z, bool with_derivatives = true);

ObjectiveEval eval_objective(const SaaProblem& prob, const Vector& z);
ConstraintEval eval_constraints(const SaaProblem& prob, const Vector& z);

/// Closed-loop rollout of decision vector z on the problem's scenarios.
TrajectoryBatch rollout_decision(const SaaProblem& prob, const Vector& z);

}  // namespace adcs
