#include "turbgen/sampler.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

namespace turb {

namespace {

// P(k^) applied to a complex vector, componentwise on re/im
inline CVec3 project(const Vec3& khat, const CVec3& v) {
    CVec3 out;
    out.re = v.re - khat * dot(khat, v.re);
    out.im = v.im - khat * dot(khat, v.im);
    return out;
}

inline CVec3 apply(const Mat3& m, const CVec3& v) {
    return {matvec(m, v.re), matvec(m, v.im)};
}

}  // namespace

HomogeneousModeSet draw_homogeneous_modes(const WaveNumberTable& wavenumbers,
                                          const FrequencyTable& frequencies, int n,
                                          std::uint64_t seed) {
    if (n < 1) throw DomainError("draw_homogeneous_modes: need at least one mode");
    HomogeneousModeSet set;
    set.n = n;
    set.seed = seed;
    set.kappa.resize(n);
    set.theta.resize(n);
    set.omega.resize(n);
    set.xi.resize(n);
    for (int m = 0; m < n; ++m) {
        Rng rng(seed, static_cast<std::uint64_t>(m));
        set.kappa[m] = wavenumbers.quantile(rng.u01());
        set.theta[m] = rng.sphere();
        set.omega[m] = frequencies.quantile(rng.u01());
        set.xi[m] = rng.complex_gauss3();
    }
    return set;
}

// --- WaveVectorProposal -----------------------------------------------------

WaveVectorProposal::WaveVectorProposal(std::shared_ptr<const WaveNumberTable> radial)
    : radial_(std::move(radial)) {
    invCoverage_ = 1.0 / radial_->coverage();
}

Vec3 WaveVectorProposal::sample(Rng& rng, double* density3) const {
    // radius from the tabulated inverse of the truncated radial CDF,
    // direction uniform
    double radialDensity = 0.0;
    const double r = radial_->proposal_quantile(rng.u01(), &radialDensity);
    if (density3) *density3 = radialDensity / (4.0 * kPi * r * r);
    return rng.sphere() * r;
}

double WaveVectorProposal::density(double radius) const {
    return radial_->model().spatial_density(radius) * invCoverage_;
}

// --- SliceModeSet -----------------------------------------------------------

struct SliceModeSet::Impl {
    mutable std::shared_mutex mutex;
    mutable std::unordered_map<long long, std::unique_ptr<SliceDraws>> cache;
};

SliceModeSet::SliceModeSet(WaveVectorProposal proposal, double ds, int modesPerSlice,
                           std::uint64_t seed)
    : proposal_(std::move(proposal)), ds_(ds), modesPerSlice_(modesPerSlice), seed_(seed),
      impl_(new Impl) {
    if (!(ds > 0.0)) throw DomainError("SliceModeSet: slice spacing must be positive");
    if (modesPerSlice < 1) throw DomainError("SliceModeSet: need at least one mode per slice");
}

SliceModeSet::~SliceModeSet() = default;

const SliceDraws& SliceModeSet::slice(long long j) const {
    {
        std::shared_lock lock(impl_->mutex);
        auto it = impl_->cache.find(j);
        if (it != impl_->cache.end()) return *it->second;
    }
    // generated from (seed, j) alone: a duplicate fill is bit-identical
    auto draws = std::make_unique<SliceDraws>();
    draws->kappa.resize(modesPerSlice_);
    draws->radius.resize(modesPerSlice_);
    draws->weight.resize(modesPerSlice_);
    draws->zeta.resize(modesPerSlice_);
    Rng rng(seed_, stream_of_index(j) ^ 0x5A1CE000ull);
    for (int m = 0; m < modesPerSlice_; ++m) {
        double q3 = 0.0;
        Vec3 kap = proposal_.sample(rng, &q3);
        draws->kappa[m] = kap;
        draws->radius[m] = norm(kap);
        draws->weight[m] =
            q3 > 0.0 ? std::sqrt(2.0 / (modesPerSlice_ * q3)) : 0.0;
        draws->zeta[m] = rng.complex_gauss3();
    }
    std::unique_lock lock(impl_->mutex);
    auto [it, inserted] = impl_->cache.try_emplace(j, std::move(draws));
    return *it->second;
}

std::unique_ptr<SliceModeSet> draw_slice_modes(WaveVectorProposal proposal, double ds,
                                               int modesPerSlice, std::uint64_t seed) {
    return std::make_unique<SliceModeSet>(std::move(proposal), ds, modesPerSlice, seed);
}

// --- SamplerResources --------------------------------------------------------

struct SamplerResources::Impl {
    SpectrumCache spectra;
    mutable std::shared_mutex mutex;
    // wavenumber tables keyed by (quantized zeta, nodes); frequency tables by (tE bits, nodes)
    mutable std::map<std::pair<long long, int>, std::shared_ptr<const WaveNumberTable>> wtabs;
    mutable std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const FrequencyTable>> ftabs;
};

SamplerResources::SamplerResources() : impl_(new Impl) {}
SamplerResources::~SamplerResources() = default;

const SpectrumModel& SamplerResources::spectrum(double zeta) const {
    return impl_->spectra.at(zeta);
}

double SamplerResources::zeta_crit() const { return impl_->spectra.zeta_crit(); }

std::shared_ptr<const WaveNumberTable> SamplerResources::wavenumbers(double zeta,
                                                                     int nodes) const {
    const SpectrumModel& model = impl_->spectra.at(zeta);
    // the cache key reuses the spectrum cache's quantization via the solved zeta bits
    std::uint64_t bits;
    static_assert(sizeof bits == sizeof(double));
    const double zq = model.zeta();
    std::memcpy(&bits, &zq, sizeof bits);
    const auto key = std::make_pair(static_cast<long long>(bits), nodes);
    {
        std::shared_lock lock(impl_->mutex);
        auto it = impl_->wtabs.find(key);
        if (it != impl_->wtabs.end()) return it->second;
    }
    auto table = std::make_shared<const WaveNumberTable>(model, nodes);
    std::unique_lock lock(impl_->mutex);
    return impl_->wtabs.try_emplace(key, std::move(table)).first->second;
}

std::shared_ptr<const FrequencyTable> SamplerResources::frequencies(const TemporalKernel& kernel,
                                                                    int nodes) const {
    std::uint64_t bits;
    const double tE = kernel.tE();
    std::memcpy(&bits, &tE, sizeof bits);
    const auto key = std::make_pair(bits, nodes);
    {
        std::shared_lock lock(impl_->mutex);
        auto it = impl_->ftabs.find(key);
        if (it != impl_->ftabs.end()) return it->second;
    }
    auto table = std::make_shared<const FrequencyTable>(kernel, nodes);
    std::unique_lock lock(impl_->mutex);
    return impl_->ftabs.try_emplace(key, std::move(table)).first->second;
}

// --- FieldRealization --------------------------------------------------------

namespace {

// per-mode precomputation of the frequency-domain sampler
struct FreqMode {
    Vec3 a;       // kappa theta / (sigma_x delta)
    double b;     // omega / (sigma_t delta)
    CVec3 c;      // sigma_u sqrt(2/N) P(theta) L xi
};

// per-slice precomputation shared by the moving-average variants
struct SliceProjected {
    std::vector<CVec3> pc;  // P(k^) L zeta (no amplitude)
};

// fully baked per-slice modes of the *homogeneous* moving-average sampler
struct SliceBaked {
    std::vector<Vec3> a;   // kappa / delta
    std::vector<CVec3> c;  // sigma_u f w P(k^) L zeta
};

}  // namespace

struct FieldRealization::Impl {
    Variant variant;
    std::uint64_t seed = 0;
    std::shared_ptr<const FlowProvider> flow;
    CharacteristicNumbers numbers;
    TemporalKernel kernel{0.3};
    SamplerConfig cfg;
    AnisotropySource aniso = AnisotropySource::Identity;
    Mat3 fixedL = Mat3::identity();

    std::shared_ptr<SamplerResources> resources;

    // frequency variant
    HomogeneousModeSet modes;
    std::vector<FreqMode> freq;
    Vec3 uBar0;  // constant mean velocity of the homogeneous variants

    // moving-average variants
    std::unique_ptr<SliceModeSet> slices;
    double ds = 0.0;
    mutable std::shared_mutex bakedMutex;
    mutable std::unordered_map<long long, std::unique_ptr<SliceBaked>> baked;
    mutable std::unordered_map<long long, std::unique_ptr<SliceProjected>> projected;
    // frozen homogeneous scaling (homogeneous variants only)
    ScalingEval sigma0;
    double zeta0 = 0.0;

    Mat3 anisotropy_at(const FlowState& st) const {
        switch (aniso) {
            case AnisotropySource::Identity: return Mat3::identity();
            case AnisotropySource::Fixed: return fixedL;
            case AnisotropySource::FromReynolds:
                if (!st.reynolds)
                    throw DomainError("FieldRealization: provider supplies no Reynolds tensor");
                return anisotropy_from_reynolds(*st.reynolds, st.k);
        }
        return Mat3::identity();
    }

    const SliceProjected& projected_slice(long long j, const Mat3& l, bool lIsIdentity) const {
        {
            std::shared_lock lock(bakedMutex);
            auto it = projected.find(j);
            if (it != projected.end()) return *it->second;
        }
        const SliceDraws& d = slices->slice(j);
        auto out = std::make_unique<SliceProjected>();
        out->pc.resize(d.kappa.size());
        for (std::size_t m = 0; m < d.kappa.size(); ++m) {
            const Vec3 khat = d.kappa[m] / d.radius[m];
            CVec3 v = lIsIdentity ? d.zeta[m] : apply(l, d.zeta[m]);
            out->pc[m] = project(khat, v);
        }
        std::unique_lock lock(bakedMutex);
        auto [it, inserted] = projected.try_emplace(j, std::move(out));
        return *it->second;
    }
};

namespace {

bool is_identity(const Mat3& m) {
    Mat3 d = m - Mat3::identity();
    return frobenius2(d) == 0.0;
}

}  // namespace

FieldRealization::FieldRealization(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
FieldRealization::FieldRealization(FieldRealization&&) noexcept = default;
FieldRealization& FieldRealization::operator=(FieldRealization&&) noexcept = default;
FieldRealization::~FieldRealization() = default;

Variant FieldRealization::variant() const { return impl_->variant; }
std::uint64_t FieldRealization::seed() const { return impl_->seed; }
const CharacteristicNumbers& FieldRealization::numbers() const { return impl_->numbers; }
const FlowProvider& FieldRealization::flow() const { return *impl_->flow; }
const TemporalKernel& FieldRealization::kernel() const { return impl_->kernel; }
const SamplerConfig& FieldRealization::config() const { return impl_->cfg; }
double FieldRealization::slice_spacing() const { return impl_->ds; }
Mat3 FieldRealization::anisotropy(const FlowState& st) const { return impl_->anisotropy_at(st); }
const SliceModeSet* FieldRealization::slices() const { return impl_->slices.get(); }
const HomogeneousModeSet* FieldRealization::modes() const {
    return impl_->variant == Variant::HomogeneousFrequency ? &impl_->modes : nullptr;
}

namespace {

std::unique_ptr<FieldRealization::Impl> common_impl(Variant variant,
                                                    std::shared_ptr<const FlowProvider> flow,
                                                    CharacteristicNumbers numbers,
                                                    TemporalKernel kernel, SamplerConfig cfg,
                                                    std::uint64_t seed, AnisotropySource aniso,
                                                    Mat3 fixedL,
                                                    std::shared_ptr<SamplerResources> shared) {
    if (!(numbers.z > 0.0) || !(numbers.delta > 0.0))
        throw DomainError("FieldRealization: characteristic numbers must be positive");
    auto impl = std::make_unique<FieldRealization::Impl>();
    impl->variant = variant;
    impl->flow = std::move(flow);
    impl->numbers = numbers;
    impl->kernel = kernel;
    impl->cfg = cfg;
    impl->seed = seed;
    impl->aniso = aniso;
    impl->fixedL = fixedL;
    impl->resources = shared ? std::move(shared) : std::make_shared<SamplerResources>();
    return impl;
}

}  // namespace

FieldRealization FieldRealization::homogeneous_frequency(
    std::shared_ptr<const FlowProvider> flow, CharacteristicNumbers numbers,
    TemporalKernel kernel, SamplerConfig cfg, std::uint64_t seed, AnisotropySource aniso,
    Mat3 fixedL, std::shared_ptr<SamplerResources> shared) {
    if (!flow->spatially_constant())
        throw VariantMismatch("homogeneous sampler requires a spatially constant flow");
    auto impl = common_impl(Variant::HomogeneousFrequency, std::move(flow), numbers, kernel, cfg,
                            seed, aniso, fixedL, std::move(shared));

    const FlowState st = impl->flow->state(cfg.refPoint, cfg.refTime);
    impl->sigma0 = scaling_at(st);
    impl->uBar0 = st.uBar;
    impl->zeta0 = impl->sigma0.sigmaZ * numbers.z;

    auto wtab = impl->resources->wavenumbers(impl->zeta0, cfg.tableNodes);
    auto ftab = impl->resources->frequencies(kernel, cfg.tableNodes);
    impl->modes = draw_homogeneous_modes(*wtab, *ftab, cfg.modes, seed);

    const Mat3 l = impl->anisotropy_at(st);
    const bool lId = is_identity(l);
    const double delta = numbers.delta;
    const double ax = 1.0 / (impl->sigma0.sigmaX * delta);
    const double at = 1.0 / (impl->sigma0.sigmaT * delta);
    const double amp = impl->sigma0.sigmaU * std::sqrt(2.0 / impl->modes.n);
    impl->freq.resize(impl->modes.n);
    for (int m = 0; m < impl->modes.n; ++m) {
        FreqMode& f = impl->freq[m];
        f.a = impl->modes.theta[m] * (impl->modes.kappa[m] * ax);
        f.b = impl->modes.omega[m] * at;
        CVec3 v = lId ? impl->modes.xi[m] : apply(l, impl->modes.xi[m]);
        f.c = project(impl->modes.theta[m], v);
        f.c.re *= amp;
        f.c.im *= amp;
    }
    return FieldRealization(std::move(impl));
}

namespace {

void init_moving_average(FieldRealization::Impl& impl) {
    auto& cfg = impl.cfg;
    const FlowState st = impl.flow->state(cfg.refPoint, cfg.refTime);
    impl.sigma0 = scaling_at(st);
    impl.zeta0 = impl.sigma0.sigmaZ * impl.numbers.z;

    const double sc = impl.kernel.support();
    impl.ds = cfg.sliceSpacing > 0.0
                  ? cfg.sliceSpacing
                  : impl.numbers.delta * impl.sigma0.sigmaT * sc / 16.0;

    double zetaRef = cfg.zetaRef > 0.0 ? cfg.zetaRef : impl.zeta0;
    auto radial = impl.resources->wavenumbers(zetaRef, cfg.tableNodes);
    impl.slices = std::make_unique<SliceModeSet>(WaveVectorProposal(std::move(radial)), impl.ds,
                                                 cfg.modesPerSlice, impl.seed);
}

}  // namespace

FieldRealization FieldRealization::homogeneous_moving_average(
    std::shared_ptr<const FlowProvider> flow, CharacteristicNumbers numbers,
    TemporalKernel kernel, SamplerConfig cfg, std::uint64_t seed, AnisotropySource aniso,
    Mat3 fixedL, std::shared_ptr<SamplerResources> shared) {
    if (!flow->spatially_constant())
        throw VariantMismatch("homogeneous sampler requires a spatially constant flow");
    auto impl = common_impl(Variant::HomogeneousMovingAverage, std::move(flow), numbers, kernel,
                            cfg, seed, aniso, fixedL, std::move(shared));
    init_moving_average(*impl);
    const FlowState st = impl->flow->state(cfg.refPoint, cfg.refTime);
    impl->uBar0 = st.uBar;
    return FieldRealization(std::move(impl));
}

FieldRealization FieldRealization::inhomogeneous(std::shared_ptr<const FlowProvider> flow,
                                                 CharacteristicNumbers numbers,
                                                 TemporalKernel kernel, SamplerConfig cfg,
                                                 std::uint64_t seed, AnisotropySource aniso,
                                                 Mat3 fixedL,
                                                 std::shared_ptr<SamplerResources> shared) {
    auto impl = common_impl(Variant::Inhomogeneous, std::move(flow), numbers, kernel, cfg, seed,
                            aniso, fixedL, std::move(shared));
    init_moving_average(*impl);
    return FieldRealization(std::move(impl));
}

// --- evaluation: frequency-domain homogeneous -------------------------------

namespace {

void eval_frequency(const FieldRealization::Impl& impl, const Vec3& x, double t, Vec3* u,
                    Mat3* grad) {
    const Vec3 y = x - t * impl.uBar0;
    Vec3 acc{};
    Mat3 gacc = Mat3::zero();
    for (const FreqMode& f : impl.freq) {
        const double phase = dot(f.a, y) + f.b * t;
        const double cs = std::cos(phase);
        const double sn = std::sin(phase);
        const Vec3 re = cs * f.c.re - sn * f.c.im;  // Re[e^{i phase} c]
        if (u) acc += re;
        if (grad) {
            const Vec3 im = sn * f.c.re + cs * f.c.im;
            gacc += outer(f.a, -1.0 * im);  // d/dx Re[...] = -(grad phase) Im[...]
        }
    }
    if (u) *u = acc;
    if (grad) *grad = gacc;
}

// --- evaluation: homogeneous moving average ---------------------------------

const SliceBaked& baked_slice(const FieldRealization::Impl& impl, long long j) {
    {
        std::shared_lock lock(impl.bakedMutex);
        auto it = impl.baked.find(j);
        if (it != impl.baked.end()) return *it->second;
    }
    const SliceDraws& d = impl.slices->slice(j);
    const FlowState st = impl.flow->state(impl.cfg.refPoint, impl.cfg.refTime);
    const Mat3 l = impl.anisotropy_at(st);
    const bool lId = is_identity(l);
    const SpectrumModel& model = impl.resources->spectrum(impl.zeta0);
    const double sx = impl.sigma0.sigmaX;
    const double su = impl.sigma0.sigmaU;
    const double invDelta = 1.0 / impl.numbers.delta;
    const double sx32 = sx * std::sqrt(sx);

    auto out = std::make_unique<SliceBaked>();
    const std::size_t n = d.kappa.size();
    out->a.resize(n);
    out->c.resize(n);
    for (std::size_t m = 0; m < n; ++m) {
        out->a[m] = d.kappa[m] * invDelta;
        const double amp =
            su * sx32 * std::sqrt(model.spatial_density(sx * d.radius[m])) * d.weight[m];
        const Vec3 khat = d.kappa[m] / d.radius[m];
        CVec3 v = lId ? d.zeta[m] : apply(l, d.zeta[m]);
        CVec3 pc = project(khat, v);
        out->c[m] = {pc.re * amp, pc.im * amp};
    }
    std::unique_lock lock(impl.bakedMutex);
    auto [it, inserted] = impl.baked.try_emplace(j, std::move(out));
    return *it->second;
}

void eval_moving_average(const FieldRealization::Impl& impl, const Vec3& x, double t, Vec3* u,
                         Mat3* grad) {
    const double tau = impl.numbers.delta * impl.sigma0.sigmaT;
    const double window = tau * impl.kernel.support();
    const double ds = impl.ds;
    const long long jLo = static_cast<long long>(std::ceil((t - window) / ds));
    const long long jHi = static_cast<long long>(std::floor((t + window) / ds));
    const double sqrtDs = std::sqrt(ds);
    const double invSqrtTau = 1.0 / std::sqrt(tau);

    Vec3 acc{};
    Mat3 gacc = Mat3::zero();
    for (long long j = jLo; j <= jHi; ++j) {
        const double sj = ds * static_cast<double>(j);
        const double beta = impl.kernel.eta((t - sj) / tau) * invSqrtTau;
        if (beta == 0.0) continue;
        const SliceBaked& b = baked_slice(impl, j);
        const Vec3 y = x - (t - sj) * impl.uBar0;
        const double w = beta * sqrtDs;
        for (std::size_t m = 0; m < b.a.size(); ++m) {
            const double phase = dot(b.a[m], y);
            const double cs = std::cos(phase);
            const double sn = std::sin(phase);
            if (u) acc += w * (cs * b.c[m].re - sn * b.c[m].im);
            if (grad) {
                const Vec3 im = sn * b.c[m].re + cs * b.c[m].im;
                gacc += outer(b.a[m], (-w) * im);
            }
        }
    }
    if (u) *u = acc;
    if (grad) *grad = gacc;
}

// --- evaluation: inhomogeneous ----------------------------------------------

void eval_inhomogeneous_impl(const FieldRealization::Impl& impl, const Vec3& x, double t, Vec3* u,
                             Mat3* grad) {
    const FlowState st = impl.flow->state(x, t);
    const ScalingEval sg = scaling_at(st);
    const double z = impl.numbers.z;
    const double delta = impl.numbers.delta;
    const double zeta = sg.sigmaZ * z;
    if (!(zeta > 0.0) || !(zeta < impl.resources->zeta_crit()))
        throw UnsolvableZeta("eval_inhomogeneous: sigma_z(x,t)*z outside (0, zeta_crit)");
    const SpectrumModel& model = impl.resources->spectrum(zeta);

    const Mat3 l = impl.anisotropy_at(st);
    const bool lId = impl.aniso == AnisotropySource::Identity;
    const bool lVaries = impl.aniso == AnisotropySource::FromReynolds &&
                         !impl.flow->spatially_constant();

    const double tau = delta * sg.sigmaT;
    const double window = tau * impl.kernel.support();
    const double ds = impl.ds;
    const long long jLo = static_cast<long long>(std::ceil((t - window) / ds));
    const long long jHi = static_cast<long long>(std::floor((t + window) / ds));
    if (jHi < jLo) {
        if (u) *u = Vec3{};
        if (grad) *grad = Mat3::zero();
        return;
    }

    // mean-flow trajectory (and Jacobian for gradients) at every slice time
    std::vector<double> times(static_cast<std::size_t>(jHi - jLo + 1));
    for (long long j = jLo; j <= jHi; ++j)
        times[static_cast<std::size_t>(j - jLo)] = ds * static_cast<double>(j);
    TrajectoryConfig tcfg = impl.cfg.trajectory;
    if (tcfg.step <= 0.0) tcfg.step = std::max(window, ds) / 32.0;
    const std::vector<TrajectoryState> traj =
        trajectory_sweep(*impl.flow, x, t, times, grad != nullptr, tcfg);

    // gradient of L by central differences when it varies with x
    Mat3 dL[3];
    if (grad && lVaries) {
        const double h = impl.cfg.reynoldsGradStep;
        for (int i = 0; i < 3; ++i) {
            Vec3 xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            const Mat3 lp = impl.anisotropy_at(impl.flow->state(xp, t));
            const Mat3 lm = impl.anisotropy_at(impl.flow->state(xm, t));
            dL[i] = (lp - lm) * (0.5 / h);
        }
    }

    const double sqrtDs = std::sqrt(ds);
    const double invSqrtTau = 1.0 / std::sqrt(tau);
    const double sx = sg.sigmaX;
    const double su = sg.sigmaU;
    const double sx32 = sx * std::sqrt(sx);
    const double invDelta = 1.0 / delta;
    // relative spatial log-derivatives entering the coefficient gradients
    const Vec3 gsx = sg.gradSigmaX;
    const Vec3 relSigmaT = sg.gradSigmaT / sg.sigmaT;
    const Vec3 relSigmaU = sg.gradSigmaU / su;

    Vec3 acc{};
    Mat3 gacc = Mat3::zero();
    for (long long j = jLo; j <= jHi; ++j) {
        const std::size_t idx = static_cast<std::size_t>(j - jLo);
        const double sj = times[idx];
        const double e = (t - sj) / tau;
        const double etaVal = impl.kernel.eta(e);
        const double beta = etaVal * invSqrtTau;
        const double wWeight = beta * sqrtDs;
        Vec3 gradBeta{};
        if (grad) {
            const double etaPrime = impl.kernel.eta_prime(e);
            const double bracket = 0.5 * beta + (t - sj) / (tau * std::sqrt(tau)) * etaPrime;
            gradBeta = -1.0 * relSigmaT * bracket;
        }
        if (etaVal == 0.0 && (!grad || (gradBeta.x == 0.0 && gradBeta.y == 0.0 &&
                                        gradBeta.z == 0.0)))
            continue;

        const SliceDraws& d = impl.slices->slice(j);
        const SliceProjected* proj = nullptr;
        if (!lVaries) proj = &impl.projected_slice(j, l, lId);
        const Vec3 phi = traj[idx].phi;
        const Mat3& jac = traj[idx].jacobian;

        for (std::size_t m = 0; m < d.kappa.size(); ++m) {
            const double r = d.radius[m];
            const double rs = sx * r;
            const double energy = model.energy(rs);
            const double fx = energy / (4.0 * kPi * rs * rs);
            const double famp = sx32 * std::sqrt(fx);
            const double amp = famp * d.weight[m];

            CVec3 pc;
            if (proj) {
                pc = proj->pc[m];
            } else {
                const Vec3 khat = d.kappa[m] / r;
                pc = project(khat, apply(l, d.zeta[m]));
            }

            const double phase = dot(d.kappa[m], phi) * invDelta;
            const double cs = std::cos(phase);
            const double sn = std::sin(phase);
            const Vec3 re = cs * pc.re - sn * pc.im;
            const double scale = wWeight * amp * su;
            if (u) acc += scale * re;
            if (grad) {
                const Vec3 im = sn * pc.re + cs * pc.im;
                // phase gradient: (J^T kappa)/delta
                const Vec3 pg = matTvec(jac, d.kappa[m]) * invDelta;
                gacc += outer(pg, (-scale) * im);

                // coefficient gradients: beta, f and sigma_u P L factors
                if (energy > 0.0) {
                    const double dEdK = model.energy_dkappa(rs);
                    const double dEdZ = model.energy_dzeta(rs);
                    for (int i = 0; i < 3; ++i) {
                        // d_i log f = 1/2 d_i log sigma_x + (E' r d_i sigma_x + dE/dzeta z d_i sigma_z)/(2E)
                        const double ratio =
                            0.5 * gsx[i] / sx +
                            (dEdK * r * gsx[i] + dEdZ * z * sg.gradSigmaZ[i]) / (2.0 * energy);
                        const double coef =
                            (gradBeta[i] + beta * (ratio + relSigmaU[i])) * sqrtDs * amp * su;
                        for (int lcomp = 0; lcomp < 3; ++lcomp)
                            gacc(i, lcomp) += coef * re[lcomp];
                    }
                }
                if (lVaries) {
                    const Vec3 khat = d.kappa[m] / r;
                    for (int i = 0; i < 3; ++i) {
                        const CVec3 dlz = project(khat, apply(dL[i], d.zeta[m]));
                        const Vec3 reDl = cs * dlz.re - sn * dlz.im;
                        for (int lcomp = 0; lcomp < 3; ++lcomp)
                            gacc(i, lcomp) += scale * reDl[lcomp];
                    }
                }
            }
        }
    }
    if (u) *u = acc;
    if (grad) *grad = gacc;
}

void dispatch(const FieldRealization::Impl& impl, const Vec3& x, double t, Vec3* u, Mat3* grad) {
    switch (impl.variant) {
        case Variant::HomogeneousFrequency: eval_frequency(impl, x, t, u, grad); return;
        case Variant::HomogeneousMovingAverage: eval_moving_average(impl, x, t, u, grad); return;
        case Variant::Inhomogeneous: eval_inhomogeneous_impl(impl, x, t, u, grad); return;
    }
}

}  // namespace

Vec3 FieldRealization::velocity(const Vec3& x, double t) const {
    Vec3 u;
    dispatch(*impl_, x, t, &u, nullptr);
    return u;
}

Mat3 FieldRealization::gradient(const Vec3& x, double t) const {
    Mat3 g;
    dispatch(*impl_, x, t, nullptr, &g);
    return g;
}

void FieldRealization::velocity_and_gradient(const Vec3& x, double t, Vec3& u, Mat3& grad) const {
    dispatch(*impl_, x, t, &u, &grad);
}

Vec3 eval_homogeneous(const FieldRealization& r, const Vec3& x, double t) {
    if (r.variant() != Variant::HomogeneousFrequency)
        throw VariantMismatch("eval_homogeneous: realization is not the frequency variant");
    return r.velocity(x, t);
}

Vec3 eval_homogeneous_ma(const FieldRealization& r, const Vec3& x, double t) {
    if (r.variant() != Variant::HomogeneousMovingAverage)
        throw VariantMismatch("eval_homogeneous_ma: realization is not the moving-average variant");
    return r.velocity(x, t);
}

Vec3 eval_inhomogeneous(const FieldRealization& r, const Vec3& x, double t) {
    if (r.variant() != Variant::Inhomogeneous)
        throw VariantMismatch("eval_inhomogeneous: realization is not the inhomogeneous variant");
    return r.velocity(x, t);
}

Mat3 eval_gradient(const FieldRealization& r, const Vec3& x, double t) {
    return r.gradient(x, t);
}

}  // namespace turb
