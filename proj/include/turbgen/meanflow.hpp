#pragma once

#include <limits>
#include <vector>

#include "turbgen/flowfield.hpp"

namespace turb {

// Fixed-step classical RK4 for the mean-flow trajectory
//   d phi / ds = uBar(phi, s),  phi(t) = x,
// integrated forward or backward in s. Fixed steps keep results
// deterministic and bit-reproducible.
struct TrajectoryConfig {
    // RK4 time step; <= 0 selects |s-t|/32
    double step = 0.0;
    // guard for callers that promise short spans only
    double maxSpan = std::numeric_limits<double>::infinity();
};

Vec3 trajectory(const FlowProvider& flow, const Vec3& x, double t, double s,
                const TrajectoryConfig& cfg = {});

struct TrajectoryState {
    Vec3 phi;
    Mat3 jacobian;  // D_x phi: jacobian(l,j) = d phi_l / d x_j
};

// Trajectory and its spatial Jacobian, co-integrated through the variational
// equation d(D phi)/ds = (D uBar)(phi,s) . D phi, D phi(t) = I.
TrajectoryState trajectory_gradient(const FlowProvider& flow, const Vec3& x, double t, double s,
                                    const TrajectoryConfig& cfg = {});

// || phi(t; phi(s;x,t), s) - x ||: the forward-backward closure residual
double inverse_check(const FlowProvider& flow, const Vec3& x, double t, double s,
                     const TrajectoryConfig& cfg = {});

// Trajectory states at a batch of times, integrated outward from t in one
// pass per direction (the sampler's slice sweep). `times` must be sorted
// ascending. withJacobian toggles co-integration of D_x phi.
std::vector<TrajectoryState> trajectory_sweep(const FlowProvider& flow, const Vec3& x, double t,
                                              const std::vector<double>& times, bool withJacobian,
                                              const TrajectoryConfig& cfg = {});

}  // namespace turb
