#pragma once

#include <vector>

#include "adcs/common.hpp"

namespace adcs {

/// Running recursive-least-squares estimate.
struct EstimatorState {
    Vector p_hat;  ///< current estimate
    Matrix P;      ///< current (information-weighted) covariance, symmetric PSD
    double gamma = 1.0;  ///< forgetting factor in (0, 1]

    /// Initial state at the prior moments.
    static EstimatorState from_prior(const Vector& mean, const Matrix& cov, double gamma = 1.0);
};

/// One regression sample: x_{t+1} - known_part = Gamma_t p + noise.
struct RegressionSample {
    Matrix gamma;    ///< nx x np regressor
    Vector residual; ///< nx
};

/**
 * Forgetting-factor RLS update:
 *
 *   P+ = (P - P G^T (gamma I + G P G^T)^{-1} G P) / gamma
 *   p+ = p + P+ G^T (residual - G p)
 *
 * The inner system is solved with an LDL^T factorization. If `min_pivot` is
 * non-null it receives the smallest |pivot| of that factorization.
 *
 * Throws NumericalError when the inner matrix is numerically singular or the
 * updated covariance has an eigenvalue below -1e-10 (relative to its scale).
 */
EstimatorState rls_update(const EstimatorState& state, const Matrix& gamma_mat, const Vector& residual,
                          double* min_pivot = nullptr);

/**
 * Minimizer of
 *   gamma^k (p - mean)^T cov^{-1} (p - mean) + sum_t gamma^{k-t-1} |residual_t - Gamma_t p|^2
 * over the k = history.size() samples, via the normal equations.
 *
 * Throws ContractViolation when `prior_cov` is not positive definite; add a
 * ridge with regularized_prior_cov() first.
 */
Vector batch_wls(const std::vector<RegressionSample>& history, const Vector& prior_mean, const Matrix& prior_cov,
                 double gamma);

/// prior_cov + ridge * I.
Matrix regularized_prior_cov(const Matrix& prior_cov, double ridge = 1e-10);

}  // namespace adcs
