#include "turbgen/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "turbgen/rootfind.hpp"

namespace turb {

namespace {

// minimal exact rational on int64, enough for the hat sums
struct Frac {
    long long num = 0, den = 1;

    static long long gcd(long long a, long long b) {
        a = a < 0 ? -a : a;
        b = b < 0 ? -b : b;
        while (b) { long long t = a % b; a = b; b = t; }
        return a == 0 ? 1 : a;
    }
    Frac reduced() const {
        long long g = gcd(num, den);
        long long s = den < 0 ? -1 : 1;
        return {s * num / g, s * den / g};
    }
    Frac operator+(const Frac& o) const {
        return Frac{num * o.den + o.num * den, den * o.den}.reduced();
    }
    Frac operator-(const Frac& o) const {
        return Frac{num * o.den - o.num * den, den * o.den}.reduced();
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

}  // namespace

SpectrumConstants derived_constants() {
    SpectrumConstants c;
    c.cK = 1.5;
    c.a4 = 230.0 / 9.0;
    c.a5 = -391.0 / 9.0;
    c.a6 = 170.0 / 9.0;
    c.b7 = 209.0 / 9.0;
    c.b8 = -352.0 / 9.0;
    c.b9 = 152.0 / 9.0;

    const Frac a4{230, 9}, a5{-391, 9}, a6{170, 9};
    const Frac b7{209, 9}, b8{-352, 9}, b9{152, 9};
    auto over = [](Frac f, long long d) { return Frac{f.num, f.den * d}.reduced(); };

    Frac aHat1 = Frac{3, 2} + over(a4, 5) + over(a5, 6) + over(a6, 7);
    Frac aHat2 = Frac{3, 4} - (over(a4, 7) + over(a5, 8) + over(a6, 9));
    Frac bHat1 = Frac{3, 2} - (over(b7, 6) + over(b8, 7) + over(b9, 8));
    Frac bHat2 = Frac{3, 4} + over(b7, 4) + over(b8, 5) + over(b9, 6);

    c.aHat1 = aHat1.value();   // 391/189
    c.aHat2 = aHat2.value();   // 1955/4536
    c.bHat1 = bHat1.value();   // 209/189
    c.bHat2 = bHat2.value();   // 209/135
    return c;
}

double critical_zeta(const SpectrumConstants& c) {
    const double d2 = c.bHat2 - c.aHat2;
    const double d1 = c.bHat1 - c.aHat1;
    const double denom = 2.0 * c.cK * c.cK * c.cK * d2 * d1 * d1;
    if (!(denom > 0.0))
        throw DomainError("critical_zeta: degenerate hat coefficients");
    return 1.0 / denom;
}

TransitionWaveNumbers solve_transitions(const SpectrumConstants& c, double zeta) {
    const double zc = critical_zeta(c);
    if (!(zeta > 0.0) || !(zeta < zc))
        throw ZetaOutOfRange("solve_transitions: zeta must lie in (0, zeta_crit)");

    const double invCk = 1.0 / c.cK;
    const double A = c.aHat1 * std::sqrt(2.0 * c.cK * c.aHat2 * zeta);
    const double B = c.bHat1 * std::sqrt(2.0 * c.cK * c.bHat2 * zeta);

    auto F = [&](double y) {
        const double u = invCk + B * y;
        return u * u * (1.0 - y * y) - A * A * y * y;
    };
    auto dF = [&](double y) {
        const double u = invCk + B * y;
        return 2.0 * B * u * (1.0 - y * y) - 2.0 * y * u * u - 2.0 * A * A * y;
    };

    // F(0) = C_K^-2 > 0 and F(1) = -A^2 < 0: unique bracketed root.
    const double y0 = solve_bracketed(F, dF, 0.0, 1.0, 1e-13, 1e-15);
    if (std::abs(F(y0)) > 1e-12)
        throw ConvergenceFailure("solve_transitions: residual above 1e-12");

    TransitionWaveNumbers t;
    t.zeta = zeta;
    t.y0 = y0;
    t.kappa1 = std::pow(c.aHat1 / (invCk + B * y0), 1.5);
    t.kappa2 = std::pow(c.bHat1 / (B * y0), 1.5);

    // Derivatives from differentiating the integral identities:
    //   aHat1 k1^{-5/3} k1' = bHat1 k2^{-5/3} k2'
    //   -aHat2 k1^{1/3} k1' + bHat2 k2^{1/3} k2' = -3/(8 C_K zeta^2)
    const double ratio = (c.bHat1 / c.aHat1) * std::pow(t.kappa1 / t.kappa2, 5.0 / 3.0);
    const double rhs = -3.0 / (8.0 * c.cK * zeta * zeta);
    t.dKappa2 = rhs / (c.bHat2 * std::cbrt(t.kappa2) - c.aHat2 * std::cbrt(t.kappa1) * ratio);
    t.dKappa1 = ratio * t.dKappa2;
    return t;
}

double SpectrumModel::energy(double kappa) const {
    if (!(kappa > 0.0)) return 0.0;
    const double k1 = t_.kappa1, k2 = t_.kappa2;
    if (kappa < k1) {
        const double z = kappa / k1;
        const double z4 = z * z * z * z;
        return c_.cK * std::pow(k1, -5.0 / 3.0) * z4 * (c_.a4 + z * (c_.a5 + z * c_.a6));
    }
    if (kappa <= k2) return c_.cK * std::pow(kappa, -5.0 / 3.0);
    const double w = k2 / kappa;
    const double w7 = std::pow(w, 7.0);
    return c_.cK * std::pow(k2, -5.0 / 3.0) * w7 * (c_.b7 + w * (c_.b8 + w * c_.b9));
}

double SpectrumModel::energy_dkappa(double kappa) const {
    if (!(kappa > 0.0)) return 0.0;
    const double k1 = t_.kappa1, k2 = t_.kappa2;
    if (kappa < k1) {
        const double z = kappa / k1;
        const double z3 = z * z * z;
        return c_.cK * std::pow(k1, -8.0 / 3.0) * z3 *
               (4.0 * c_.a4 + z * (5.0 * c_.a5 + z * 6.0 * c_.a6));
    }
    if (kappa <= k2) return -(5.0 / 3.0) * c_.cK * std::pow(kappa, -8.0 / 3.0);
    const double w = k2 / kappa;
    const double w8 = std::pow(w, 8.0);
    return -c_.cK * std::pow(k2, -8.0 / 3.0) * w8 *
           (7.0 * c_.b7 + w * (8.0 * c_.b8 + w * 9.0 * c_.b9));
}

double SpectrumModel::energy_dzeta(double kappa) const {
    if (!(kappa > 0.0)) return 0.0;
    const double k1 = t_.kappa1, k2 = t_.kappa2;
    if (kappa < k1) {
        // E = C_K sum a_j k1^{-5/3-j} kappa^j
        const double z = kappa / k1;
        const double z4 = z * z * z * z;
        const double dEdk1 = -c_.cK * std::pow(k1, -8.0 / 3.0) * z4 *
                             ((5.0 / 3.0 + 4.0) * c_.a4 +
                              z * ((5.0 / 3.0 + 5.0) * c_.a5 + z * (5.0 / 3.0 + 6.0) * c_.a6));
        return dEdk1 * t_.dKappa1;
    }
    if (kappa <= k2) return 0.0;
    // E = C_K sum b_j k2^{j-5/3} kappa^{-j}
    const double w = k2 / kappa;
    const double w7 = std::pow(w, 7.0);
    const double dEdk2 = c_.cK * std::pow(k2, -8.0 / 3.0) * w7 *
                         ((7.0 - 5.0 / 3.0) * c_.b7 +
                          w * ((8.0 - 5.0 / 3.0) * c_.b8 + w * (9.0 - 5.0 / 3.0) * c_.b9));
    return dEdk2 * t_.dKappa2;
}

double SpectrumModel::spatial_density(double kappa) const {
    if (!(kappa > 0.0)) return 0.0;  // E ~ kappa^4 dominates the 1/kappa^2: limit 0
    return energy(kappa) / (4.0 * kPi * kappa * kappa);
}

double SpectrumModel::cdf(double kappa) const {
    if (!(kappa > 0.0)) return 0.0;
    const double k1 = t_.kappa1, k2 = t_.kappa2;
    const double fK1 = c_.cK * std::pow(k1, -2.0 / 3.0) *
                       (c_.a4 / 5.0 + c_.a5 / 6.0 + c_.a6 / 7.0);
    if (kappa < k1) {
        const double z = kappa / k1;
        const double z5 = std::pow(z, 5.0);
        return c_.cK * std::pow(k1, -2.0 / 3.0) * z5 *
               (c_.a4 / 5.0 + z * (c_.a5 / 6.0 + z * c_.a6 / 7.0));
    }
    if (kappa <= k2)
        return fK1 + 1.5 * c_.cK * (std::pow(k1, -2.0 / 3.0) - std::pow(kappa, -2.0 / 3.0));
    return 1.0 - tail_mass(kappa);
}

double SpectrumModel::tail_mass(double kappa) const {
    const double k2 = t_.kappa2;
    if (kappa <= k2) return 1.0 - cdf(kappa);
    const double w = k2 / kappa;
    const double w6 = std::pow(w, 6.0);
    return c_.cK * std::pow(k2, -2.0 / 3.0) * w6 *
           (c_.b7 / 6.0 + w * (c_.b8 / 7.0 + w * c_.b9 / 8.0));
}

WaveNumberTable::WaveNumberTable(const SpectrumModel& model, int nodes)
    : model_(model) {
    if (nodes < 16) nodes = 16;
    const double k1 = model.transitions().kappa1;
    const double k2 = model.transitions().kappa2;

    // upper truncation where CDF >= 1 - 1e-10
    auto tail = [&](double k) { return model_.tail_mass(k) - 1e-10; };
    double hi = k2 * 2.0;
    while (tail(hi) > 0.0) hi *= 2.0;
    const double kMax = bisect(tail, k2, hi, 1e-12 * hi);

    const double kMin = k1 * 1e-4;
    kappa_.resize(nodes);
    cdf_.resize(nodes);
    // geometric grid, pinned to the exact truncation point at the top
    const double ratio = std::pow(kMax / kMin, 1.0 / (nodes - 1));
    double k = kMin;
    for (int i = 0; i < nodes; ++i) {
        kappa_[i] = (i == nodes - 1) ? kMax : k;
        cdf_[i] = model_.cdf(kappa_[i]);
        k *= ratio;
    }

    // dense inverse for proposal draws: exact quantiles at equispaced mass
    const int m = std::max(4096, 2 * nodes);
    std::vector<double> q(m + 1), d(m + 1);
    const double cov = coverage();
    const double du = 1.0 / m;
    for (int i = 0; i <= m; ++i) {
        q[i] = quantile(cov * (i * du));
        const double dens = model_.energy(q[i]);
        d[i] = dens > 0.0 ? cov / dens : 0.0;
    }
    inverse_ = MonotoneHermite(0.0, du, std::move(q), std::move(d));
}

double WaveNumberTable::proposal_quantile(double u01, double* radialDensity) const {
    double slope;
    const double k = inverse_.value(u01, &slope);
    if (radialDensity) *radialDensity = slope > 0.0 ? 1.0 / slope : 0.0;
    return k;
}

double WaveNumberTable::quantile(double u) const {
    if (u >= cdf_.back()) return kappa_.back();
    if (u <= cdf_.front()) {
        // leading-order inversion of the kappa^5 CDF head, floored above zero
        const auto& c = model_.constants();
        const double k1 = model_.transitions().kappa1;
        const double head = c.cK * std::pow(k1, -2.0 / 3.0) * c.a4 / 5.0;
        double k = k1 * std::pow(std::max(u, 0.0) / head, 0.2);
        return std::max(k, std::numeric_limits<double>::min());
    }
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    size_t i = static_cast<size_t>(it - cdf_.begin());
    double lo = kappa_[i - 1], hi = kappa_[i];
    auto f = [&](double k) { return model_.cdf(k) - u; };
    auto df = [&](double k) { return model_.energy(k); };
    return solve_bracketed(f, df, lo, hi, 1e-13, 1e-15 * hi);
}

// --- SpectrumCache -------------------------------------------------------

struct SpectrumCache::Impl {
    SpectrumConstants constants;
    mutable std::shared_mutex mutex;
    mutable std::map<long long, std::unique_ptr<SpectrumModel>> models;
};

SpectrumCache::SpectrumCache() : impl_(new Impl) {
    impl_->constants = derived_constants();
    zetaCrit_ = critical_zeta(impl_->constants);
}

SpectrumCache::~SpectrumCache() = default;

const SpectrumModel& SpectrumCache::at(double zeta) const {
    if (!(zeta > 0.0) || !(zeta < zetaCrit_))
        throw UnsolvableZeta("SpectrumCache: local zeta outside (0, zeta_crit)");
    // relative quantum 1e-6: quantize in log space
    long long key = std::llround(std::log(zeta) * 1e6);
    double zq = std::exp(static_cast<double>(key) * 1e-6);
    if (!(zq < zetaCrit_)) {
        key -= 1;
        zq = std::exp(static_cast<double>(key) * 1e-6);
    }
    {
        std::shared_lock lock(impl_->mutex);
        auto it = impl_->models.find(key);
        if (it != impl_->models.end()) return *it->second;
    }
    std::unique_lock lock(impl_->mutex);
    auto it = impl_->models.find(key);
    if (it == impl_->models.end()) {
        auto model = std::make_unique<SpectrumModel>(
            impl_->constants, solve_transitions(impl_->constants, zq));
        it = impl_->models.emplace(key, std::move(model)).first;
    }
    return *it->second;
}

}  // namespace turb
