#include "turbgen/meanflow.hpp"

#include <cmath>

namespace turb {

namespace {

struct PhiJac {
    Vec3 phi;
    Mat3 jac;
};

// RHS of the coupled system. The variational equation uses the Jacobian
// D uBar (l,j) = d uBar_l / d x_j, the transpose of FlowState::gradUBar.
PhiJac rhs(const FlowProvider& flow, const PhiJac& y, double s, bool withJac) {
    FlowState st = flow.state(y.phi, s);
    PhiJac out;
    out.phi = st.uBar;
    if (withJac) out.jac = matmul(transpose(st.gradUBar), y.jac);
    return out;
}

PhiJac rk4_span(const FlowProvider& flow, PhiJac y, double t0, double t1, double step,
                bool withJac) {
    const double span = t1 - t0;
    if (span == 0.0) return y;
    const double h0 = step > 0.0 ? step : std::abs(span) / 32.0;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(span) / h0 - 1e-12)));
    const double h = span / n;
    double s = t0;
    for (int i = 0; i < n; ++i) {
        PhiJac k1 = rhs(flow, y, s, withJac);
        PhiJac y2{y.phi + 0.5 * h * k1.phi, y.jac + 0.5 * h * k1.jac};
        PhiJac k2 = rhs(flow, y2, s + 0.5 * h, withJac);
        PhiJac y3{y.phi + 0.5 * h * k2.phi, y.jac + 0.5 * h * k2.jac};
        PhiJac k3 = rhs(flow, y3, s + 0.5 * h, withJac);
        PhiJac y4{y.phi + h * k3.phi, y.jac + h * k3.jac};
        PhiJac k4 = rhs(flow, y4, s + h, withJac);
        y.phi += (h / 6.0) * (k1.phi + 2.0 * k2.phi + 2.0 * k3.phi + k4.phi);
        if (withJac) y.jac += (h / 6.0) * (k1.jac + 2.0 * k2.jac + 2.0 * k3.jac + k4.jac);
        s = t0 + (i + 1) * h;
    }
    return y;
}

void check_span(double t, double s, const TrajectoryConfig& cfg) {
    if (std::abs(s - t) > cfg.maxSpan)
        throw DomainError("trajectory: |s - t| exceeds the configured maxSpan");
}

}  // namespace

Vec3 trajectory(const FlowProvider& flow, const Vec3& x, double t, double s,
                const TrajectoryConfig& cfg) {
    check_span(t, s, cfg);
    PhiJac y{x, Mat3::identity()};
    return rk4_span(flow, y, t, s, cfg.step, false).phi;
}

TrajectoryState trajectory_gradient(const FlowProvider& flow, const Vec3& x, double t, double s,
                                    const TrajectoryConfig& cfg) {
    check_span(t, s, cfg);
    PhiJac y{x, Mat3::identity()};
    y = rk4_span(flow, y, t, s, cfg.step, true);
    return {y.phi, y.jac};
}

double inverse_check(const FlowProvider& flow, const Vec3& x, double t, double s,
                     const TrajectoryConfig& cfg) {
    Vec3 fwd = trajectory(flow, x, t, s, cfg);
    Vec3 back = trajectory(flow, fwd, s, t, cfg);
    return norm(back - x);
}

std::vector<TrajectoryState> trajectory_sweep(const FlowProvider& flow, const Vec3& x, double t,
                                              const std::vector<double>& times, bool withJacobian,
                                              const TrajectoryConfig& cfg) {
    std::vector<TrajectoryState> out(times.size());
    // split at t, walk each side outward continuing from the previous state
    std::size_t firstAbove = times.size();
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= t) { firstAbove = i; break; }

    PhiJac y{x, Mat3::identity()};
    double cur = t;
    for (std::size_t i = firstAbove; i < times.size(); ++i) {
        check_span(t, times[i], cfg);
        y = rk4_span(flow, y, cur, times[i], cfg.step, withJacobian);
        cur = times[i];
        out[i] = {y.phi, y.jac};
    }
    y = PhiJac{x, Mat3::identity()};
    cur = t;
    for (std::size_t ii = firstAbove; ii-- > 0;) {
        check_span(t, times[ii], cfg);
        y = rk4_span(flow, y, cur, times[ii], cfg.step, withJacobian);
        cur = times[ii];
        out[ii] = {y.phi, y.jac};
    }
    return out;
}

}  // namespace turb
