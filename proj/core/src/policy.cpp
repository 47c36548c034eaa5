#include "adcs/policy.hpp"

namespace adcs {

using detail::require;

StaticAffinePolicy StaticAffinePolicy::zeros(int horizon, int nx, int nu) {
    require(horizon >= 1 && nx >= 1 && nu >= 1, "StaticAffinePolicy: invalid dimensions");
    StaticAffinePolicy pol;
    pol.v.assign(horizon, Vector::Zero(nu));
    pol.L.assign(horizon, Matrix::Zero(nu, nx));
    return pol;
}

DualAffinePolicy DualAffinePolicy::zeros(int horizon, int nx, int nu, int np) {
    require(horizon >= 1 && nx >= 1 && nu >= 1 && np >= 0, "DualAffinePolicy: invalid dimensions");
    DualAffinePolicy pol;
    const auto blocks = static_cast<std::size_t>(np + 1);
    pol.v.assign(horizon, std::vector<Vector>(blocks, Vector::Zero(nu)));
    pol.L.assign(horizon, std::vector<Matrix>(blocks, Matrix::Zero(nu, nx)));
    return pol;
}

StaticAffinePolicy DualAffinePolicy::static_part() const {
    StaticAffinePolicy pol;
    for (int k = 0; k < horizon(); ++k) {
        pol.v.push_back(v[k][0]);
        pol.L.push_back(L[k][0]);
    }
    return pol;
}

Vector eval_static(const StaticAffinePolicy& pol, int k, const Vector& x) {
    require(k >= 0 && k < pol.horizon(), "eval_static: step index out of range");
    require(pol.L[k].cols() == x.size(), "eval_static: state dimension mismatch");
    return pol.v[k] + pol.L[k] * x;
}

Vector eval_dual(const DualAffinePolicy& pol, int k, const Vector& x, const Vector& p_hat) {
    require(k >= 0 && k < pol.horizon(), "eval_dual: step index out of range");
    require(pol.L[k][0].cols() == x.size(), "eval_dual: state dimension mismatch");
    require(p_hat.size() == pol.np(), "eval_dual: estimate dimension mismatch");
    Vector u = pol.v[k][0] + pol.L[k][0] * x;
    for (int j = 1; j <= pol.np(); ++j) {
        u += p_hat[j - 1] * (pol.v[k][j] + pol.L[k][j] * x);
    }
    return u;
}

DualAffinePolicy embed_static_as_dual(const StaticAffinePolicy& pol, int np) {
    require(pol.horizon() >= 1, "embed_static_as_dual: empty policy");
    const auto nu = static_cast<int>(pol.L.front().rows());
    const auto nx = static_cast<int>(pol.L.front().cols());
    DualAffinePolicy out = DualAffinePolicy::zeros(pol.horizon(), nx, nu, np);
    for (int k = 0; k < pol.horizon(); ++k) {
        out.v[k][0] = pol.v[k];
        out.L[k][0] = pol.L[k];
    }
    return out;
}

}  // namespace adcs
