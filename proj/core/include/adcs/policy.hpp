#pragma once

#include <vector>

#include "adcs/common.hpp"

namespace adcs {

/// u_k = v[k] + L[k] x.
struct StaticAffinePolicy {
    std::vector<Vector> v;  ///< [k], nu
    std::vector<Matrix> L;  ///< [k], nu x nx

    static StaticAffinePolicy zeros(int horizon, int nx, int nu);

    int horizon() const { return static_cast<int>(v.size()); }
};

/**
 * Parameter-scheduled affine policy
 *
 *   u_k = v[k][0] + L[k][0] x + sum_{j>=1} p_hat^j (v[k][j] + L[k][j] x).
 *
 * Block j = 0 is the static part; blocks j >= 1 adapt to the estimate.
 */
struct DualAffinePolicy {
    std::vector<std::vector<Vector>> v;  ///< [k][j], nu
    std::vector<std::vector<Matrix>> L;  ///< [k][j], nu x nx

    static DualAffinePolicy zeros(int horizon, int nx, int nu, int np);

    int horizon() const { return static_cast<int>(v.size()); }
    int np() const { return v.empty() ? 0 : static_cast<int>(v.front().size()) - 1; }

    /// Static part (j = 0 blocks).
    StaticAffinePolicy static_part() const;
};

Vector eval_static(const StaticAffinePolicy& pol, int k, const Vector& x);
Vector eval_dual(const DualAffinePolicy& pol, int k, const Vector& x, const Vector& p_hat);

/// Copies the static gains into block 0 and zeros all adaptive blocks.
DualAffinePolicy embed_static_as_dual(const StaticAffinePolicy& pol, int np);

}  // namespace adcs
