#pragma once

#include "adcs/model.hpp"

namespace adcs {

/// Lateral path-tracking model constants. State x = [delta, e_psi, e_y],
/// control u = delta_dot / p, with p the unknown steering gain.
struct VehicleParams {
    double speed = 10.0;       ///< longitudinal speed nu_x [m/s]
    double l_front = 1.5;      ///< CoM to front axle [m]
    double l_rear = 1.5;       ///< CoM to rear axle [m]
    double curvature = 0.02;   ///< reference path curvature sigma [1/m]
    double dt = 0.2;           ///< Euler step [s]
    double noise_delta = 0.01;
    double noise_psi = 0.005;
    double noise_y = 0.02;
    int horizon = 20;

    void validate() const;
};

/// Euler-discretized linear lateral model (nx = 3, nu = 1, np = 1, nw = 3),
/// identical at every step.
ParametricAffineSystem build_vehicle_system(const VehicleParams& vp);

}  // namespace adcs
