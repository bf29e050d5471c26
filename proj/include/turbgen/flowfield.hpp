#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "turbgen/error.hpp"
#include "turbgen/math.hpp"

namespace turb {

// Dimensional reference values (SI): macro length x0, viscosity nu0,
// kinetic energy k0, dissipation eps0. The derived velocity u0 = sqrt(k0)
// balances mean flow and fluctuations: u0 = x0/t0 = x_mu/t_mu.
struct ReferenceScales {
    double x0 = 1.0;
    double nu0 = 1.0;
    double k0 = 1.0;
    double eps0 = 1.0;

    double u0() const { return std::sqrt(k0); }
    double t0() const { return x0 / std::sqrt(k0); }
    double xMicro() const { return std::sqrt(k0) * k0 / eps0; }  // sqrt(k0)^3/eps0
    double tMicro() const { return k0 / eps0; }

    void validate() const;
};

// z = eps0 nu0 / k0^2 (inverse turbulent viscosity ratio),
// delta = sqrt(k0)^3 / (eps0 x0) (turbulence scale ratio)
struct CharacteristicNumbers {
    double z = 0.0;
    double delta = 0.0;
};

CharacteristicNumbers characteristic_numbers(const ReferenceScales& s);

// Dimensionless macroscopic flow data at one (x,t).
// Gradient convention: gradUBar(j,l) = d uBar_l / d x_j; the vector
// gradients are d(.)/d x_j in component j.
struct FlowState {
    Vec3 uBar;
    double k = 1.0, eps = 1.0, nu = 1.0;
    Mat3 gradUBar;
    Vec3 gradK, gradEps, gradNu;
    std::optional<Mat3> reynolds;
};

// Scaling functions sigma_x = k^{3/2}/eps, sigma_t = k/eps, sigma_u = sqrt(k),
// sigma_z = eps nu / k^2, with spatial gradients by the chain rule.
struct ScalingEval {
    double sigmaX = 1.0, sigmaT = 1.0, sigmaU = 1.0, sigmaZ = 1.0;
    Vec3 gradSigmaX, gradSigmaT, gradSigmaU, gradSigmaZ;
};

ScalingEval scaling_at(const FlowState& s);

// Anisotropy factor L with L L^T = (15/7) k^-1 R - (3/7) I. The trace
// identity tr R = 2k makes ||L||^2 = 3 automatic. Lower-triangular Cholesky
// when possible; symmetric PSD square root (eigenvalue clamp at -1e-12)
// when the factorization fails marginally. Throws NotRealizable otherwise.
Mat3 anisotropy_from_reynolds(const Mat3& reynolds, double k);

enum class DomainPolicy { Error, Clamp };

// Immutable supplier of dimensionless flow states; thread-safe to query.
class FlowProvider {
public:
    virtual ~FlowProvider() = default;
    virtual FlowState state(const Vec3& x, double t) const = 0;
    // sup-norm bound on gradUBar if known (Gronwall estimates); inf otherwise
    virtual double grad_ubar_bound() const = 0;
    // true when the state is the same at every (x,t)
    virtual bool spatially_constant() const { return false; }
};

class ConstantFlow final : public FlowProvider {
public:
    ConstantFlow(Vec3 uBar, double k, double eps, double nu,
                 std::optional<Mat3> reynolds = std::nullopt);
    FlowState state(const Vec3&, double) const override { return state_; }
    double grad_ubar_bound() const override { return 0.0; }
    bool spatially_constant() const override { return true; }

private:
    FlowState state_;
};

// uBar = (gamma x2, 0, 0); k, eps, nu constant
class UniformShearFlow final : public FlowProvider {
public:
    UniformShearFlow(double gamma, double k, double eps, double nu,
                     std::optional<Mat3> reynolds = std::nullopt);
    FlowState state(const Vec3& x, double) const override;
    double grad_ubar_bound() const override { return std::abs(gamma_); }
    double gamma() const { return gamma_; }

private:
    double gamma_;
    FlowState base_;
};

// user-defined closed form; gradBound must be supplied by the caller
class CallableFlow final : public FlowProvider {
public:
    CallableFlow(std::function<FlowState(const Vec3&, double)> fn, double gradBound)
        : fn_(std::move(fn)), gradBound_(gradBound) {}
    FlowState state(const Vec3& x, double t) const override { return fn_(x, t); }
    double grad_ubar_bound() const override { return gradBound_; }

private:
    std::function<FlowState(const Vec3&, double)> fn_;
    double gradBound_;
};

// Regular-lattice node data for a gridded provider. Node index order is
// lexicographic with t slowest and x3 fastest:
//   idx = ((it*n1 + i1)*n2 + i2)*n3 + i3.
// Reynolds components, when present, are stored r11 r22 r33 r12 r13 r23.
struct FlowGridData {
    int n1 = 0, n2 = 0, n3 = 0, nt = 1;
    Vec3 origin;
    double t0 = 0.0;
    Vec3 spacing{1.0, 1.0, 1.0};
    double dt = 1.0;
    std::vector<Vec3> uBar;
    std::vector<double> k, eps, nu;
    std::vector<std::array<double, 6>> reynolds;  // empty when absent

    std::size_t node_count() const {
        return static_cast<std::size_t>(n1) * n2 * n3 * nt;
    }
    void validate() const;
};

// Plain-text self-describing column format; grammar documented in README.
FlowGridData read_flow_grid(const std::string& path);
void write_flow_grid(const std::string& path, const FlowGridData& grid);

// Trilinear interpolation of node values; node gradients are precomputed by
// central differences and themselves trilinearly interpolated. Piecewise
// linear in t between snapshots.
class GriddedFlow final : public FlowProvider {
public:
    GriddedFlow(FlowGridData data, DomainPolicy policy);
    FlowState state(const Vec3& x, double t) const override;
    double grad_ubar_bound() const override { return gradBound_; }
    const FlowGridData& data() const { return data_; }

private:
    FlowGridData data_;
    DomainPolicy policy_;
    double gradBound_ = 0.0;
    // node gradients: per field, 3 components per node
    std::vector<std::array<Vec3, 3>> gradU_;
    std::vector<Vec3> gradK_, gradEps_, gradNu_;
};

struct NondimensionalFlow {
    std::shared_ptr<const FlowProvider> flow;
    CharacteristicNumbers numbers;
};

// Divides dimensional node data by u0/k0/eps0/nu0, rescales coordinates by
// x0/t0, and reports the characteristic numbers. Throws NonPositiveField
// when any k, eps or nu sample is <= 0.
NondimensionalFlow nondimensionalize(const FlowGridData& rawSI, const ReferenceScales& scales,
                                     DomainPolicy policy = DomainPolicy::Error);

// Same reduction for a spatially constant dimensional state.
NondimensionalFlow nondimensionalize_constant(const Vec3& uBarSI, double kSI, double epsSI,
                                              double nuSI, const ReferenceScales& scales,
                                              std::optional<Mat3> reynoldsSI = std::nullopt);

}  // namespace turb
