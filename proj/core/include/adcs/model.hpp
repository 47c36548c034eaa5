#pragma once

#include <string>
#include <vector>

#include "adcs/common.hpp"
#include "adcs/rng.hpp"

namespace adcs {

/**
 * Linear time-varying system whose matrices are affine in an unknown
 * parameter vector p:
 *
 *   x_{k+1} = sum_{j=0}^{n_p} (A[k][j] x + B[k][j] u + r[k][j]) p^j + D[k] w
 *
 * with the pseudo-parameter p^0 fixed at 1. Block j = 0 is the known,
 * parameter-independent part; blocks j >= 1 multiply the unknown entries.
 */
struct ParametricAffineSystem {
    int horizon = 0;
    int nx = 0;
    int nu = 0;
    int np = 0;
    int nw = 0;

    std::vector<std::vector<Matrix>> A;  ///< [k][j], nx x nx
    std::vector<std::vector<Matrix>> B;  ///< [k][j], nx x nu
    std::vector<std::vector<Vector>> r;  ///< [k][j], nx
    std::vector<Matrix> D;               ///< [k], nx x nw

    /// All-zero system of the given shape.
    static ParametricAffineSystem zeros(int horizon, int nx, int nu, int np, int nw);

    /// Throws ContractViolation on inconsistent shapes or non-finite entries.
    void validate() const;
};

/// Regressor Gamma_k(x, u): column j-1 is A[k][j] x + B[k][j] u + r[k][j] for j = 1..np.
Matrix assemble_gamma(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u);

/// A[k][0] x + B[k][0] u + r[k][0].
Vector known_part(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u);

Vector step(const ParametricAffineSystem& sys, int k, const Vector& x, const Vector& u, const Vector& p,
            const Vector& w);

enum class PriorFamily { gaussian, uniform, beta, gaussian_mixture };

std::string to_string(PriorFamily f);
PriorFamily prior_family_from_string(const std::string& s);

/**
 * Distribution of the unknown parameter. Each family is built from its own
 * shape parameters; mean() and covariance() are the analytic moments.
 */
class ParameterPrior {
public:
    /// Gaussian N(mean, cov); cov may be singular (a zero cov is a point mass).
    static ParameterPrior gaussian(const Vector& mean, const Matrix& cov);
    /// Independent components, U[lower_j, upper_j].
    static ParameterPrior uniform(const Vector& lower, const Vector& upper);
    /// Independent components, lower_j + (upper_j - lower_j) * Beta(alpha_j, beta_j).
    static ParameterPrior beta(const Vector& alpha, const Vector& beta, const Vector& lower, const Vector& upper);
    static ParameterPrior gaussian_mixture(const std::vector<double>& weights, const std::vector<Vector>& means,
                                           const std::vector<Matrix>& covs);
    /// Degenerate prior concentrated at `value`.
    static ParameterPrior point_mass(const Vector& value);

    PriorFamily family() const { return family_; }
    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Matrix& covariance() const { return cov_; }

    Vector sample(RngStream& rng) const;

    // Shape parameters, exposed for serialization.
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    const Vector& alpha() const { return alpha_; }
    const Vector& beta_shape() const { return beta_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<Vector>& component_means() const { return comp_means_; }
    const std::vector<Matrix>& component_covs() const { return comp_covs_; }

private:
    ParameterPrior with_family_gaussian() &&;

    PriorFamily family_ = PriorFamily::gaussian;
    Vector mean_;
    Matrix cov_;

    Vector lower_, upper_;
    Vector alpha_, beta_;
    std::vector<double> weights_;
    std::vector<Vector> comp_means_;
    std::vector<Matrix> comp_covs_;
    std::vector<Matrix> comp_sqrt_;
};

struct InitialStateDistribution {
    Vector mean;
    Matrix cov;

    InitialStateDistribution() = default;
    InitialStateDistribution(Vector mean, Matrix cov);

    Vector sample(RngStream& rng) const;

private:
    Matrix sqrt_cov_;
};

enum class NoiseFamily { gaussian, uniform_scaled };

/// Zero-mean, identity-covariance, i.i.d. per step.
struct NoiseModel {
    int dim = 0;
    NoiseFamily family = NoiseFamily::gaussian;

    Vector sample(RngStream& rng) const;
};

inline Vector sample_parameter(const ParameterPrior& prior, RngStream& rng) { return prior.sample(rng); }
inline Vector sample_initial_state(const InitialStateDistribution& dist, RngStream& rng) { return dist.sample(rng); }
inline Vector sample_noise(const NoiseModel& model, RngStream& rng) { return model.sample(rng); }

}  // namespace adcs
