#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "adcs/common.hpp"

namespace adcs {

struct SolverOptions {
    int max_outer_iterations = 30;
    int max_inner_iterations = 500;
    double initial_penalty = 10.0;
    double penalty_growth = 5.0;
    double max_penalty = 1e6;
    double constraint_tolerance = 1e-6;  ///< on max_i c_i(z)
    double gradient_tolerance = 1e-6;    ///< on |grad f + J' lambda|_inf
    double max_multiplier = 1e10;
    int lbfgs_memory = 100;
    int stagnation_window = 5;        ///< outer iterations at max penalty
    double stagnation_decrease = 0.01;  ///< relative violation decrease regarded as progress

    void validate() const;
};

enum class SolverStatus { optimal, infeasible, iteration_limit };

std::string to_string(SolverStatus s);

struct SolverResult {
    Vector z;
    Vector multipliers;
    SolverStatus status = SolverStatus::iteration_limit;
    double objective = 0.0;
    double max_violation = 0.0;
    double kkt_residual = 0.0;
    double penalty = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    int evaluations = 0;
    double seconds = 0.0;
};

/// Values and first derivatives of min f(z) s.t. c(z) <= 0 at one point.
struct NlpValues {
    double f = 0.0;
    Vector grad;
    Vector c;
    Matrix jac;
};

using NlpCallback = std::function<NlpValues(const Vector& z)>;

/// max(0, max_i c_i); 0 for an empty constraint vector.
double max_violation(const Vector& c);

/**
 * Augmented-Lagrangian method for inequality-constrained smooth problems,
 * with a limited-memory BFGS inner minimizer and Armijo backtracking.
 *
 * The returned point is the last accepted outer iterate; an outer iterate is
 * accepted only when it does not increase the max violation. `status` is
 * optimal only when the returned point meets both tolerances, and infeasible
 * when the violation stalls at the penalty cap.
 *
 * If `log` is non-null one line per outer iteration is written to it.
 */
SolverResult solve(const NlpCallback& nlp, const Vector& z0, const SolverOptions& opts = {},
                   const Vector& multipliers0 = Vector(), std::ostream* log = nullptr);

/// Unconstrained L-BFGS (used by solve for the inner problems).
struct LbfgsResult {
    Vector x;
    double value = 0.0;
    double grad_norm = 0.0;  ///< inf-norm at x
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

LbfgsResult minimize_lbfgs(const std::function<double(const Vector&, Vector&)>& fg, const Vector& x0,
                           double gradient_tolerance, int max_iterations, int memory = 10);

}  // namespace adcs
