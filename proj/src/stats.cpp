#include "turbgen/stats.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "turbgen/quadrature.hpp"

namespace turb {

double EstimatorReport::max_abs_z() const {
    double m = 0.0;
    for (double z : zScore) m = std::max(m, std::abs(z));
    return m;
}

void parallel_for(long long n, int threads, const std::function<void(long long)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n < 2) {
        for (long long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long long> next{0};
    auto worker = [&]() {
        for (;;) {
            long long i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads - 1);
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

namespace {

// mean/SE over per-sample rows laid out sample-major; reduction in sample
// order keeps the result independent of the thread count
EstimatorReport reduce(std::string name, int rows, int cols,
                       const std::vector<double>& samples, long long n,
                       const std::vector<double>& target, double noiseFloor) {
    const int m = rows * cols;
    EstimatorReport rep;
    rep.name = std::move(name);
    rep.rows = rows;
    rep.cols = cols;
    rep.nSamples = n;
    rep.estimate.assign(m, 0.0);
    rep.stdError.assign(m, 0.0);
    for (long long i = 0; i < n; ++i)
        for (int c = 0; c < m; ++c) rep.estimate[c] += samples[i * m + c];
    for (int c = 0; c < m; ++c) rep.estimate[c] /= n;
    if (n > 1) {
        for (long long i = 0; i < n; ++i)
            for (int c = 0; c < m; ++c) {
                const double d = samples[i * m + c] - rep.estimate[c];
                rep.stdError[c] += d * d;
            }
        for (int c = 0; c < m; ++c)
            rep.stdError[c] = std::sqrt(rep.stdError[c] / (n - 1) / n);
    }
    if (!target.empty()) {
        rep.target = target;
        rep.zScore.assign(m, 0.0);
        for (int c = 0; c < m; ++c) {
            const double se = std::max(rep.stdError[c], noiseFloor);
            rep.zScore[c] = se > 0.0 ? (rep.estimate[c] - rep.target[c]) / se : 0.0;
        }
    }
    return rep;
}

std::vector<double> flat(const Mat3& m) {
    std::vector<double> v(9);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v[r * 3 + c] = m(r, c);
    return v;
}

}  // namespace

OnePointStats one_point_stats(const RealizationFactory& make, const Vec3& x, double t,
                              int nSeeds, std::uint64_t seed0, const EstimatorOptions& opt) {
    if (nSeeds < 2) throw DomainError("one_point_stats: need at least two seeds");
    std::vector<double> su(nSeeds * 3), se(nSeeds), st(nSeeds * 9);
    parallel_for(nSeeds, opt.threads, [&](long long i) {
        FieldRealization r = make(seed0 + static_cast<std::uint64_t>(i));
        const Vec3 u = r.velocity(x, t);
        su[i * 3 + 0] = u.x;
        su[i * 3 + 1] = u.y;
        su[i * 3 + 2] = u.z;
        se[i] = 0.5 * norm2(u);
        const Mat3 uu = outer(u, u);
        for (int c = 0; c < 9; ++c) st[i * 9 + c] = uu(c / 3, c % 3);
    });

    // targets from the flow data and anisotropy factor of a probe realization
    FieldRealization probe = make(seed0);
    const FlowState fs = probe.flow().state(x, t);
    const Mat3 l = probe.anisotropy(fs);
    const Mat3 tensorTarget =
        fs.k * ((7.0 / 15.0) * matmul(l, transpose(l)) + (1.0 / 5.0) * Mat3::identity());

    OnePointStats out;
    out.mean = reduce("one_point_mean", 3, 1, su, nSeeds, {0.0, 0.0, 0.0}, opt.noiseFloor);
    out.energy = reduce("one_point_energy", 1, 1, se, nSeeds, {fs.k}, opt.noiseFloor);
    out.tensor = reduce("one_point_tensor", 3, 3, st, nSeeds, flat(tensorTarget), opt.noiseFloor);
    return out;
}

EstimatorReport dissipation_stats(const RealizationFactory& make, const Vec3& x, double t,
                                  int nSeeds, std::uint64_t seed0, const EstimatorOptions& opt) {
    if (nSeeds < 2) throw DomainError("dissipation_stats: need at least two seeds");
    std::vector<double> samples(nSeeds);
    std::vector<double> pref(1);
    parallel_for(nSeeds, opt.threads, [&](long long i) {
        FieldRealization r = make(seed0 + static_cast<std::uint64_t>(i));
        const Mat3 g = r.gradient(x, t);
        const Mat3 sym = g + transpose(g);
        const auto& num = r.numbers();
        samples[i] = 0.5 * num.delta * num.delta * num.z * frobenius2(sym);
    });
    FieldRealization probe = make(seed0);
    const FlowState fs = probe.flow().state(x, t);
    return reduce("dissipation", 1, 1, samples, nSeeds, {fs.eps / fs.nu}, opt.noiseFloor);
}

EstimatorReport divergence_stats(const RealizationFactory& make, const Vec3& x, double t,
                                 int nSeeds, std::uint64_t seed0, const EstimatorOptions& opt) {
    if (nSeeds < 2) throw DomainError("divergence_stats: need at least two seeds");
    std::vector<double> samples(nSeeds);
    parallel_for(nSeeds, opt.threads, [&](long long i) {
        FieldRealization r = make(seed0 + static_cast<std::uint64_t>(i));
        const Mat3 g = r.gradient(x, t);
        const double div = r.numbers().delta * trace(g);
        samples[i] = div * div;
    });
    return reduce("divergence", 1, 1, samples, nSeeds, {0.0}, opt.noiseFloor);
}

EstimatorReport two_point_cov(const RealizationFactory& make, const Vec3& x, double t,
                              const Vec3& x2, double t2, int nSeeds, std::uint64_t seed0,
                              const std::vector<double>* target, const EstimatorOptions& opt) {
    if (nSeeds < 2) throw DomainError("two_point_cov: need at least two seeds");
    std::vector<double> samples(nSeeds * 9);
    parallel_for(nSeeds, opt.threads, [&](long long i) {
        FieldRealization r = make(seed0 + static_cast<std::uint64_t>(i));
        const Mat3 c = outer(r.velocity(x, t), r.velocity(x2, t2));
        for (int q = 0; q < 9; ++q) samples[i * 9 + q] = c(q / 3, q % 3);
    });
    return reduce("two_point_cov", 3, 3, samples, nSeeds, target ? *target : std::vector<double>{},
                  opt.noiseFloor);
}

// --- covariance targets ------------------------------------------------------

namespace {

// spherical means: m(z) = sinc z and its second derivative
double sinc_m(double z) {
    if (std::abs(z) < 1e-4) {
        const double z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

double sinc_m2(double z) {
    if (std::abs(z) < 1e-3) {
        const double z2 = z * z;
        return -1.0 / 3.0 + z2 / 10.0 - z2 * z2 / 168.0;
    }
    return std::sin(z) * (2.0 / (z * z * z) - 1.0 / z) - 2.0 * std::cos(z) / (z * z);
}

// C_x(y) = int E(k) [ g1(k r) I + g2(k r) yhat yhat ] dk for L = I
Mat3 cx_isotropic(const SpectrumModel& model, const Vec3& y) {
    const double r = norm(y);
    const double k1 = model.transitions().kappa1;
    const double k2 = model.transitions().kappa2;
    // truncate where the remaining tail is negligible
    double kHi = k2 * 2.0;
    while (model.tail_mass(kHi) > 1e-11) kHi *= 2.0;

    auto radial = [&](const std::function<double(double)>& g) {
        auto f = [&](double k) { return model.energy(k) * g(k * r); };
        return integrate(f, 0.0, k1, 1e-11) + integrate(f, k1, k2, 1e-11) +
               integrate(f, k2, kHi, 1e-11);
    };
    const double i1 = radial([](double z) { return 0.5 * (sinc_m(z) - sinc_m2(z)); });
    if (r == 0.0) return i1 * Mat3::identity();
    const double i2 = radial([](double z) { return 0.5 * (sinc_m(z) + 3.0 * sinc_m2(z)); });
    const Vec3 yhat = y / r;
    return i1 * Mat3::identity() + i2 * outer(yhat, yhat);
}

}  // namespace

Mat3 covariance_target_homogeneous(const FieldRealization& r, const Vec3& x, double t,
                                   const Vec3& x2, double t2) {
    const FlowState fs = r.flow().state(r.config().refPoint, r.config().refTime);
    if (!is_identity_matrix(r.anisotropy(fs)))
        throw DomainError("covariance_target_homogeneous: only the isotropic case (L = I)");
    const ScalingEval sg = scaling_at(fs);
    const auto& num = r.numbers();
    const double zeta = sg.sigmaZ * num.z;
    SpectrumModel model = SpectrumModel::solve(zeta);
    const Vec3 lag = (x - x2 - (t - t2) * fs.uBar) / (num.delta * sg.sigmaX);
    const double tlag = (t - t2) / (num.delta * sg.sigmaT);
    return (sg.sigmaU * sg.sigmaU * r.kernel().correlation(tlag)) * cx_isotropic(model, lag);
}

Mat3 covariance_target_inhomogeneous(const FieldRealization& r, const Vec3& xa, double ta,
                                     const Vec3& xb, double tb) {
    if (r.variant() == Variant::HomogeneousFrequency)
        throw VariantMismatch("covariance_target_inhomogeneous: needs a moving-average variant");
    const auto& num = r.numbers();
    const double delta = num.delta;
    const TemporalKernel& kern = r.kernel();
    const double sc = kern.support();

    struct PointCtx {
        ScalingEval sg;
        double tau, zeta, su;
        Mat3 l;
        SpectrumModel model{SpectrumConstants{}, TransitionWaveNumbers{}};
    };
    auto ctx = [&](const Vec3& x, double t) {
        const FlowState fs = r.flow().state(x, t);
        PointCtx c;
        c.sg = scaling_at(fs);
        c.tau = delta * c.sg.sigmaT;
        c.zeta = c.sg.sigmaZ * num.z;
        c.su = c.sg.sigmaU;
        c.l = r.anisotropy(fs);
        c.model = SpectrumModel::solve(c.zeta);
        return c;
    };
    const PointCtx ca = ctx(xa, ta);
    const PointCtx cb = ctx(xb, tb);

    const double sLo = std::max(ta - ca.tau * sc, tb - cb.tau * sc);
    const double sHi = std::min(ta + ca.tau * sc, tb + cb.tau * sc);
    if (sHi <= sLo) return Mat3::zero();

    // s-nodes: Gauss-Legendre across the kernel overlap
    const int nS = 48;
    std::vector<double> sx(nS), sw(nS);
    gauss_legendre_nodes(nS, sLo, sHi, sx.data(), sw.data());

    // wave-vector radius nodes: adaptive composite panels per spectrum piece
    // of the *geometric mean* spectrum; both spectra are smooth on the panels
    const double kap1 = std::min(ca.model.transitions().kappa1, cb.model.transitions().kappa1);
    const double kap2 = std::max(ca.model.transitions().kappa2, cb.model.transitions().kappa2);
    double kHi = kap2 * 2.0;
    while (ca.model.tail_mass(kHi) + cb.model.tail_mass(kHi) > 1e-9) kHi *= 2.0;

    Mat3 acc = Mat3::zero();
    const int nPolar = 48, nAzim = 96;
    std::vector<double> px(nPolar), pw(nPolar);
    gauss_legendre_nodes(nPolar, -1.0, 1.0, px.data(), pw.data());

    for (int is = 0; is < nS; ++is) {
        const double s = sx[is];
        const double betaA = kern.eta((ta - s) / ca.tau) / std::sqrt(ca.tau);
        const double betaB = kern.eta((tb - s) / cb.tau) / std::sqrt(cb.tau);
        if (betaA == 0.0 || betaB == 0.0) continue;
        const Vec3 phiA = trajectory(r.flow(), xa, ta, s, r.config().trajectory);
        const Vec3 phiB = trajectory(r.flow(), xb, tb, s, r.config().trajectory);
        const Vec3 dphi = (phiA - phiB) / delta;

        // radial x sphere quadrature of
        //   cos(kappa . dphi) f_a(kappa) f_b(kappa) P L_a L_b^T P
        const Mat3 mab = matmul(ca.l, transpose(cb.l));
        auto radial = [&](double kmin, double kmax) {
            Mat3 piece = Mat3::zero();
            const int nR = 64;
            std::vector<double> rx(nR), rw(nR);
            gauss_legendre_nodes(nR, kmin, kmax, rx.data(), rw.data());
            for (int ir = 0; ir < nR; ++ir) {
                const double rad = rx[ir];
                const double fa = ca.sg.sigmaX * std::sqrt(ca.sg.sigmaX) *
                                  std::sqrt(ca.model.spatial_density(ca.sg.sigmaX * rad));
                const double fb = cb.sg.sigmaX * std::sqrt(cb.sg.sigmaX) *
                                  std::sqrt(cb.model.spatial_density(cb.sg.sigmaX * rad));
                if (fa == 0.0 || fb == 0.0) continue;
                Mat3 sphere = Mat3::zero();
                for (int ip = 0; ip < nPolar; ++ip) {
                    const double cth = px[ip];
                    const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
                    for (int ia = 0; ia < nAzim; ++ia) {
                        const double phi = 2.0 * kPi * (ia + 0.5) / nAzim;
                        const Vec3 th{sth * std::cos(phi), sth * std::sin(phi), cth};
                        const Mat3 p = projector(th);
                        const double phase = rad * dot(th, dphi);
                        sphere += (pw[ip] * std::cos(phase)) * matmul(p, matmul(mab, p));
                    }
                }
                // sphere mean: GL weights sum to 2 over cos(theta), azimuth uniform
                sphere = sphere * (1.0 / (2.0 * nAzim));
                piece += (rw[ir] * rad * rad * 4.0 * kPi * fa * fb) * sphere;
            }
            return piece;
        };
        Mat3 kint = radial(0.0, kap1) + radial(kap1, kap2) + radial(kap2, kHi);
        acc += (sw[is] * betaA * betaB * ca.su * cb.su) * kint;
    }
    return acc;
}

// --- ergodic averages --------------------------------------------------------

EstimatorReport ergodic_average(const FieldRealization& r, const ErgodicAverageSpec& spec,
                                ErgodicQuantity quantity, const EstimatorOptions& opt) {
    if (spec.timeRadius < 0.0 || spec.spaceRadius < 0.0)
        throw DomainError("ergodic_average: radii must be non-negative");
    const int nT = spec.timeRadius > 0.0 ? std::max(1, spec.nTimeNodes) : 1;
    const int nX = spec.spaceRadius > 0.0 ? std::max(1, spec.nSpaceNodes) : 1;

    // midpoint nodes in time and per axis in space; spherical rejection
    std::vector<double> tNodes(nT);
    for (int i = 0; i < nT; ++i)
        tNodes[i] = spec.timeRadius > 0.0
                        ? spec.t - spec.timeRadius + (2.0 * i + 1.0) / nT * spec.timeRadius
                        : spec.t;

    std::vector<Vec3> offsets;
    for (int i1 = 0; i1 < nX; ++i1)
        for (int i2 = 0; i2 < nX; ++i2)
            for (int i3 = 0; i3 < nX; ++i3) {
                auto mid = [&](int i) {
                    return spec.spaceRadius > 0.0
                               ? -spec.spaceRadius + (2.0 * i + 1.0) / nX * spec.spaceRadius
                               : 0.0;
                };
                const Vec3 off{mid(i1), mid(i2), mid(i3)};
                if (norm(off) <= spec.spaceRadius) offsets.push_back(off);
            }
    if (offsets.empty()) offsets.push_back(Vec3{});

    // centers follow the mean flow when requested
    std::vector<Vec3> centers(nT, spec.x);
    if (spec.followMeanFlow) {
        std::vector<double> sorted = tNodes;
        const std::vector<TrajectoryState> tr =
            trajectory_sweep(r.flow(), spec.x, spec.t, sorted, false, r.config().trajectory);
        for (int i = 0; i < nT; ++i) centers[i] = tr[i].phi;
    }

    const int m = quantity == ErgodicQuantity::Mean ? 3 : (quantity == ErgodicQuantity::Tensor ? 9 : 1);
    const long long nNodes = static_cast<long long>(nT) * offsets.size();
    std::vector<double> samples(nNodes * m);
    parallel_for(nNodes, opt.threads, [&](long long i) {
        const int it = static_cast<int>(i / offsets.size());
        const Vec3 y = centers[it] + offsets[i % offsets.size()];
        const double s = tNodes[it];
        double* out = samples.data() + i * m;
        switch (quantity) {
            case ErgodicQuantity::Mean: {
                const Vec3 u = r.velocity(y, s);
                out[0] = u.x; out[1] = u.y; out[2] = u.z;
                break;
            }
            case ErgodicQuantity::Energy: {
                out[0] = 0.5 * norm2(r.velocity(y, s));
                break;
            }
            case ErgodicQuantity::Dissipation: {
                const Mat3 g = r.gradient(y, s);
                const Mat3 sym = g + transpose(g);
                const auto& num = r.numbers();
                out[0] = 0.5 * num.delta * num.delta * num.z * frobenius2(sym);
                break;
            }
            case ErgodicQuantity::Tensor: {
                const Vec3 u = r.velocity(y, s);
                const Mat3 uu = outer(u, u);
                for (int c = 0; c < 9; ++c) out[c] = uu(c / 3, c % 3);
                break;
            }
        }
    });
    const int rows = quantity == ErgodicQuantity::Tensor ? 3 : (m == 3 ? 3 : 1);
    const int cols = quantity == ErgodicQuantity::Tensor ? 3 : 1;
    EstimatorReport rep = reduce("ergodic_average", rows, cols, samples, nNodes, {}, 0.0);
    return rep;
}

// --- Lagrangian time scale ---------------------------------------------------

EstimatorReport lagrangian_timescale(const RealizationFactory& make,
                                     const LagrangianOptions& opt, std::uint64_t seed0,
                                     const EstimatorOptions& eopt) {
    if (opt.nParticles < opt.batches * 2)
        throw DomainError("lagrangian_timescale: too few particles for batching");
    const int nSteps = static_cast<int>(std::ceil(opt.horizon / opt.dt));
    const int nLag = nSteps + 1;

    // per-particle correlogram w(s) = v(0,0) . v(x(s),s) and energy ||v(0,0)||^2
    std::vector<double> corr(static_cast<std::size_t>(opt.nParticles) * nLag);
    std::vector<double> energy0(opt.nParticles);
    parallel_for(opt.nParticles, eopt.threads, [&](long long p) {
        FieldRealization r = make(seed0 + static_cast<std::uint64_t>(p));
        Vec3 x{};
        const Vec3 v0 = r.velocity(x, 0.0);
        energy0[p] = norm2(v0);
        corr[p * nLag] = norm2(v0);
        double s = 0.0;
        for (int i = 1; i <= nSteps; ++i) {
            if (!opt.frozenParticle) {
                // RK2 midpoint
                const Vec3 k1 = r.velocity(x, s);
                const Vec3 k2 = r.velocity(x + 0.5 * opt.dt * k1, s + 0.5 * opt.dt);
                x += opt.dt * k2;
            }
            s = opt.dt * i;
            corr[p * nLag + i] = dot(v0, r.velocity(x, s));
        }
    });

    // ensemble correlogram with pointwise standard errors
    std::vector<double> mean(nLag, 0.0), se(nLag, 0.0);
    for (int p = 0; p < opt.nParticles; ++p)
        for (int i = 0; i < nLag; ++i) mean[i] += corr[p * nLag + i];
    for (int i = 0; i < nLag; ++i) mean[i] /= opt.nParticles;
    for (int p = 0; p < opt.nParticles; ++p)
        for (int i = 0; i < nLag; ++i) {
            const double d = corr[p * nLag + i] - mean[i];
            se[i] += d * d;
        }
    for (int i = 0; i < nLag; ++i)
        se[i] = std::sqrt(se[i] / (opt.nParticles - 1.0) / opt.nParticles);

    // truncate at the first crossing below 2 SE
    int cut = -1;
    for (int i = 1; i < nLag; ++i)
        if (mean[i] < 2.0 * se[i]) { cut = i; break; }
    if (cut < 0)
        throw HorizonTooShort("lagrangian_timescale: correlogram did not decay below 2 SE");

    // T_L per batch: trapezoid over the batch correlogram up to the common cut
    const int perBatch = opt.nParticles / opt.batches;
    std::vector<double> batchT(opt.batches);
    for (int b = 0; b < opt.batches; ++b) {
        std::vector<double> bm(cut + 1, 0.0);
        double be = 0.0;
        for (int p = b * perBatch; p < (b + 1) * perBatch; ++p) {
            for (int i = 0; i <= cut; ++i) bm[i] += corr[p * nLag + i];
            be += energy0[p];
        }
        double integral = 0.0;
        for (int i = 0; i < cut; ++i) integral += 0.5 * (bm[i] + bm[i + 1]) * opt.dt;
        batchT[b] = integral / be;
    }
    EstimatorReport rep = reduce("lagrangian_timescale", 1, 1, batchT, opt.batches, {}, 0.0);
    // SE over batches already reflects between-particle scatter
    return rep;
}

}  // namespace turb
