#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "turbgen/flowfield.hpp"
#include "turbgen/meanflow.hpp"
#include "turbgen/spectrum.hpp"
#include "turbgen/temporal.hpp"

namespace turb {

// Frozen draws of the frequency-domain homogeneous sampler: wave magnitudes
// ~ E, directions uniform on S^2, frequencies ~ f_t, complex Gaussian
// weights with independent real/imaginary parts of variance 1/2 each.
struct HomogeneousModeSet {
    int n = 0;
    std::uint64_t seed = 0;
    std::vector<double> kappa;
    std::vector<Vec3> theta;
    std::vector<double> omega;
    std::vector<CVec3> xi;
};

// Mode m's draws come from the counter stream (seed, m): reproducible from
// the seed alone, independent of evaluation order.
HomogeneousModeSet draw_homogeneous_modes(const WaveNumberTable& wavenumbers,
                                          const FrequencyTable& frequencies, int n,
                                          std::uint64_t seed);

// Importance proposal for 3-D wave vectors: radius ~ E(.;zeta_ref) truncated
// at the radial table's coverage, direction uniform on the sphere.
// density() is the exact Lebesgue density of sample().
class WaveVectorProposal {
public:
    explicit WaveVectorProposal(std::shared_ptr<const WaveNumberTable> radial);
    // draw a wave vector and the exact 3-D Lebesgue density of the draw
    Vec3 sample(Rng& rng, double* density3) const;
    // idealized density f_x(r;zeta_ref)/Z; the sampler's actual density
    // agrees with it to the inverse-table resolution
    double density(double radius) const;
    const WaveNumberTable& radial() const { return *radial_; }

private:
    std::shared_ptr<const WaveNumberTable> radial_;
    double invCoverage_;
};

struct SliceDraws {
    std::vector<Vec3> kappa;
    std::vector<double> radius;   // |kappa|
    std::vector<double> weight;   // sqrt(2 / (N q(kappa)))
    std::vector<CVec3> zeta;      // complex Gaussian weights
};

// Lazily materialized per-slice draws of the moving-average samplers.
// Slice j's draws depend only on (seed, j); the memoizing fill is
// idempotent, so concurrent queries are race-free.
class SliceModeSet {
public:
    SliceModeSet(WaveVectorProposal proposal, double ds, int modesPerSlice, std::uint64_t seed);
    ~SliceModeSet();
    SliceModeSet(const SliceModeSet&) = delete;
    SliceModeSet& operator=(const SliceModeSet&) = delete;

    const SliceDraws& slice(long long j) const;

    double ds() const { return ds_; }
    int modes_per_slice() const { return modesPerSlice_; }
    std::uint64_t seed() const { return seed_; }
    const WaveVectorProposal& proposal() const { return proposal_; }

private:
    struct Impl;
    WaveVectorProposal proposal_;
    double ds_;
    int modesPerSlice_;
    std::uint64_t seed_;
    std::unique_ptr<Impl> impl_;
};

std::unique_ptr<SliceModeSet> draw_slice_modes(WaveVectorProposal proposal, double ds,
                                               int modesPerSlice, std::uint64_t seed);

// Shared immutable numeric tables: per-zeta spectrum solves, inverse-CDF
// wave-number tables and frequency tables. One instance serves any number
// of realizations concurrently; constructing realizations without it
// rebuilds tables per realization.
class SamplerResources {
public:
    SamplerResources();
    ~SamplerResources();
    SamplerResources(const SamplerResources&) = delete;
    SamplerResources& operator=(const SamplerResources&) = delete;

    const SpectrumModel& spectrum(double zeta) const;
    double zeta_crit() const;
    std::shared_ptr<const WaveNumberTable> wavenumbers(double zeta, int nodes) const;
    std::shared_ptr<const FrequencyTable> frequencies(const TemporalKernel& kernel,
                                                      int nodes) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

enum class Variant { HomogeneousFrequency, HomogeneousMovingAverage, Inhomogeneous };

// How the anisotropy factor L(x,t) is supplied.
enum class AnisotropySource { Identity, Fixed, FromReynolds };

struct SamplerConfig {
    int modes = 1024;             // N, frequency-domain sampler
    int modesPerSlice = 256;      // N_kappa, moving-average samplers
    double sliceSpacing = 0.0;    // Delta s; <= 0 selects delta*sigma_t(ref)*s_c/16
    double zetaRef = 0.0;         // proposal zeta; <= 0 selects sigma_z(ref)*z
    int tableNodes = 2048;        // inverse-CDF table resolution
    Vec3 refPoint{};              // where the defaults above are measured
    double refTime = 0.0;
    TrajectoryConfig trajectory;  // step <= 0 selects (slice window)/32
    double reynoldsGradStep = 1e-4;  // FD step for grad L with FromReynolds
};

// One realization of the velocity fluctuation field. Immutable and
// shareable: concurrent evaluations at distinct (x,t) are race-free, and
// (seed, config) determines every evaluation bit-exactly.
class FieldRealization {
public:
    static FieldRealization homogeneous_frequency(std::shared_ptr<const FlowProvider> flow,
                                                  CharacteristicNumbers numbers,
                                                  TemporalKernel kernel, SamplerConfig cfg,
                                                  std::uint64_t seed,
                                                  AnisotropySource aniso = AnisotropySource::Identity,
                                                  Mat3 fixedL = Mat3::identity(),
                                                  std::shared_ptr<SamplerResources> shared = nullptr);
    static FieldRealization homogeneous_moving_average(
        std::shared_ptr<const FlowProvider> flow, CharacteristicNumbers numbers,
        TemporalKernel kernel, SamplerConfig cfg, std::uint64_t seed,
        AnisotropySource aniso = AnisotropySource::Identity, Mat3 fixedL = Mat3::identity(),
        std::shared_ptr<SamplerResources> shared = nullptr);
    static FieldRealization inhomogeneous(std::shared_ptr<const FlowProvider> flow,
                                          CharacteristicNumbers numbers, TemporalKernel kernel,
                                          SamplerConfig cfg, std::uint64_t seed,
                                          AnisotropySource aniso = AnisotropySource::Identity,
                                          Mat3 fixedL = Mat3::identity(),
                                          std::shared_ptr<SamplerResources> shared = nullptr);

    FieldRealization(FieldRealization&&) noexcept;
    FieldRealization& operator=(FieldRealization&&) noexcept;
    ~FieldRealization();

    Vec3 velocity(const Vec3& x, double t) const;
    // gradient(j,l) = d u'_l / d x_j, by the exact product rule over every
    // x-dependent factor of the mode sum
    Mat3 gradient(const Vec3& x, double t) const;
    void velocity_and_gradient(const Vec3& x, double t, Vec3& u, Mat3& grad) const;

    Variant variant() const;
    std::uint64_t seed() const;
    const CharacteristicNumbers& numbers() const;
    const FlowProvider& flow() const;
    const TemporalKernel& kernel() const;
    const SamplerConfig& config() const;
    double slice_spacing() const;   // resolved Delta s (moving-average variants)
    Mat3 anisotropy(const FlowState& state) const;
    const SliceModeSet* slices() const;  // null for the frequency variant
    const HomogeneousModeSet* modes() const;

    struct Impl;  // opaque; defined in sampler.cpp

private:
    explicit FieldRealization(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

// Spec-named entry points; these check the variant and throw
// VariantMismatch when called on the wrong one.
Vec3 eval_homogeneous(const FieldRealization& r, const Vec3& x, double t);
Vec3 eval_homogeneous_ma(const FieldRealization& r, const Vec3& x, double t);
Vec3 eval_inhomogeneous(const FieldRealization& r, const Vec3& x, double t);
Mat3 eval_gradient(const FieldRealization& r, const Vec3& x, double t);

}  // namespace turb
