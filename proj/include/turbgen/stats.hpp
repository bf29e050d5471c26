#pragma once

#include <functional>
#include <string>
#include <vector>

#include "turbgen/sampler.hpp"

namespace turb {

// Monte Carlo estimate with standard errors; scalar (1x1), vector (3x1) or
// tensor (3x3) shaped, stored row-major.
struct EstimatorReport {
    std::string name;
    int rows = 1, cols = 1;
    std::vector<double> estimate;
    std::vector<double> stdError;  // sample standard deviation / sqrt(n)
    std::vector<double> target;    // empty when no reference value
    std::vector<double> zScore;    // (estimate - target) / max(SE, noiseFloor)
    long long nSamples = 0;

    double scalar() const { return estimate.at(0); }
    double max_abs_z() const;
};

using RealizationFactory = std::function<FieldRealization(std::uint64_t seed)>;

struct EstimatorOptions {
    int threads = 1;
    // SE floor for z-scores against identically-zero targets, where the
    // sample scatter is pure rounding noise
    double noiseFloor = 0.0;
};

struct OnePointStats {
    EstimatorReport mean;    // target 0
    EstimatorReport energy;  // target k(x,t)
    EstimatorReport tensor;  // target k [ (7/15) L L^T + (1/5) I ]
};

// Ensemble statistics of u'(x,t) over nSeeds realizations seeded
// seed0, seed0+1, ... Reductions run in seed order regardless of thread
// count, so reports are bit-identical for any `threads`.
OnePointStats one_point_stats(const RealizationFactory& make, const Vec3& x, double t,
                              int nSeeds, std::uint64_t seed0, const EstimatorOptions& = {});

// (delta^2 z / 2) E|| grad u' + grad u'^T ||^2, target eps(x,t)/nu(x,t)
EstimatorReport dissipation_stats(const RealizationFactory& make, const Vec3& x, double t,
                                  int nSeeds, std::uint64_t seed0, const EstimatorOptions& = {});

// E| delta div u' |^2, target 0
EstimatorReport divergence_stats(const RealizationFactory& make, const Vec3& x, double t,
                                 int nSeeds, std::uint64_t seed0, const EstimatorOptions& = {});

// E[ u'(x,t) (x) u'(x2,t2) ]; optional 3x3 reference (row-major, size 9)
EstimatorReport two_point_cov(const RealizationFactory& make, const Vec3& x, double t,
                              const Vec3& x2, double t2, int nSeeds, std::uint64_t seed0,
                              const std::vector<double>* target = nullptr,
                              const EstimatorOptions& = {});

// sigma_u^2 C_x(lag) C_t(lag) for the homogeneous model with L = I; C_x by
// 1-D radial quadrature of the isotropic spectral representation.
Mat3 covariance_target_homogeneous(const FieldRealization& r, const Vec3& x, double t,
                                   const Vec3& x2, double t2);

// Direct numeric evaluation of the inhomogeneous covariance integral
// (s-integral over the kernel overlap, spherical wave-vector quadrature).
// Valid for moving-average variants; exact up to quadrature error.
Mat3 covariance_target_inhomogeneous(const FieldRealization& r, const Vec3& x, double t,
                                     const Vec3& x2, double t2);

// Space-time ball average following the mean flow (Prop. 4.1 / Thm. 5.5
// style): midpoint tensor quadrature, spherical nodes kept by rejection.
struct ErgodicAverageSpec {
    Vec3 x;
    double t = 0.0;
    double timeRadius = 0.0;   // R  (0 = point evaluation in time)
    double spaceRadius = 0.0;  // R' (0 = point evaluation in space)
    int nTimeNodes = 9;
    int nSpaceNodes = 5;       // per axis
    bool followMeanFlow = true;
};

enum class ErgodicQuantity { Mean, Energy, Dissipation, Tensor };

EstimatorReport ergodic_average(const FieldRealization& r, const ErgodicAverageSpec& spec,
                                ErgodicQuantity quantity, const EstimatorOptions& = {});

// Lagrangian integral time scale from fluid-particle paths dx/ds = v(x,s)
// integrated by RK2; T_L = (E||v||^2)^-1 int_0^H <v(0,0).v(x(s),s)> ds with
// the correlogram truncated at its first crossing below 2 SE. Standard
// error by batch means. frozenParticle freezes x(s)=x0 (the Eulerian T_E).
struct LagrangianOptions {
    int nParticles = 2000;
    double horizon = 3.0;
    double dt = 0.015;
    int batches = 20;
    bool frozenParticle = false;
};

EstimatorReport lagrangian_timescale(const RealizationFactory& make,
                                     const LagrangianOptions& opt, std::uint64_t seed0,
                                     const EstimatorOptions& = {});

// deterministic parallel map: fn(i) for i in [0,n), results independent of
// the thread count
void parallel_for(long long n, int threads, const std::function<void(long long)>& fn);

}  // namespace turb
