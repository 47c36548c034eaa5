#include "adcs/vehicle.hpp"

namespace adcs {

using detail::require;

void VehicleParams::validate() const {
    require(speed > 0.0, "VehicleParams: speed must be positive");
    require(l_front + l_rear > 0.0, "VehicleParams: wheelbase must be positive");
    require(dt > 0.0, "VehicleParams: dt must be positive");
    require(noise_delta >= 0.0 && noise_psi >= 0.0 && noise_y >= 0.0, "VehicleParams: noise intensities must be >= 0");
    require(horizon >= 1, "VehicleParams: horizon must be >= 1");
}

ParametricAffineSystem build_vehicle_system(const VehicleParams& vp) {
    vp.validate();
    const double wheelbase = vp.l_front + vp.l_rear;
    const double rear_ratio = vp.l_rear / wheelbase;

    Matrix A = Matrix::Identity(3, 3);
    A(1, 0) = vp.speed * vp.dt / wheelbase;
    A(2, 0) = rear_ratio * vp.speed * vp.dt;
    A(2, 1) = vp.speed * vp.dt;

    Vector r(3);
    r << 0.0, -vp.curvature * vp.speed * vp.dt, 0.0;

    Matrix B_gain(3, 1);
    B_gain << vp.dt, rear_ratio * vp.dt, 0.0;

    Matrix D = Matrix::Zero(3, 3);
    D(0, 0) = vp.noise_delta * vp.dt;
    D(1, 1) = vp.noise_psi * vp.dt;
    D(2, 2) = vp.noise_y * vp.dt;

    ParametricAffineSystem sys = ParametricAffineSystem::zeros(vp.horizon, 3, 1, 1, 3);
    for (int k = 0; k < vp.horizon; ++k) {
        sys.A[k][0] = A;
        sys.r[k][0] = r;
        sys.B[k][1] = B_gain;
        sys.D[k] = D;
    }
    return sys;
}

}  // namespace adcs
