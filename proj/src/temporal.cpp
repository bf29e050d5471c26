#include "turbgen/temporal.hpp"

#include <algorithm>
#include <cmath>

#include "turbgen/error.hpp"
#include "turbgen/quadrature.hpp"
#include "turbgen/rootfind.hpp"

namespace turb {

namespace {

inline double poly_p(double z) {
    // 1 - 10 z^3 + 15 z^4 - 6 z^5
    return 1.0 + z * z * z * (-10.0 + z * (15.0 - 6.0 * z));
}

inline double poly_p_prime(double z) {
    // -30 z^2 (1-z)^2
    const double om = 1.0 - z;
    return -30.0 * z * z * om * om;
}

// g(v) = int_0^1 p(u) cos(v u) du. Closed form for |v| >= 1, power series
// below (the closed form cancels catastrophically as v -> 0).
double g_of_v(double v) {
    v = std::abs(v);
    if (v < 1.0) {
        double sum = 0.0;
        double pow_v = 1.0;        // v^(2m)
        double fact = 1.0;         // (2m)!
        for (int m = 0; m <= 16; ++m) {
            if (m > 0) {
                pow_v *= v * v;
                fact *= (2.0 * m) * (2.0 * m - 1.0);
            }
            const double mom = 1.0 / (2.0 * m + 1.0) - 10.0 / (2.0 * m + 4.0) +
                               15.0 / (2.0 * m + 5.0) - 6.0 / (2.0 * m + 6.0);
            const double term = ((m % 2) ? -1.0 : 1.0) * pow_v / fact * mom;
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
        }
        return sum;
    }
    const double c = std::cos(v), s = std::sin(v);
    const double v2 = v * v, v4 = v2 * v2;
    return -60.0 * (1.0 - c) / v4 - 360.0 * s / (v4 * v) + 720.0 * (1.0 - c) / (v4 * v2);
}

}  // namespace

TemporalKernel::TemporalKernel(double tE) : tE_(tE) {
    if (!(tE > 0.0)) throw DomainError("TemporalKernel: T_E must be positive");
    a_ = std::sqrt(231.0 / 181.0);
    sc_ = (362.0 / 231.0) * tE;
}

double TemporalKernel::eta(double s) const {
    const double z = std::abs(s) / sc_;
    if (z > 1.0) return 0.0;
    return a_ / std::sqrt(sc_) * poly_p(z);
}

double TemporalKernel::eta_prime(double s) const {
    const double z = std::abs(s) / sc_;
    if (z > 1.0) return 0.0;
    const double sign = s < 0.0 ? -1.0 : 1.0;
    return sign * a_ / (sc_ * std::sqrt(sc_)) * poly_p_prime(z);
}

double TemporalKernel::correlation(double s) const {
    s = std::abs(s);
    if (s >= 2.0 * sc_) return 0.0;
    const double lo = std::max(-sc_, s - sc_);
    const double hi = sc_;
    // |r| and |s-r| switch sign at r = 0 and r = s; split there
    double breaks[4] = {lo, hi, 0.0, s};
    std::sort(breaks, breaks + 4);
    auto f = [&](double r) { return eta(s - r) * eta(r); };
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
        double a = std::clamp(breaks[i], lo, hi);
        double b = std::clamp(breaks[i + 1], lo, hi);
        if (b > a) sum += gauss_legendre(f, a, b, 7);  // degree 10 integrand: exact
    }
    return sum;
}

double TemporalKernel::spectral_density(double omega) const {
    const double g = g_of_v(omega * sc_);
    return (4.0 * tE_ / kPi) * g * g;
}

// --- FrequencyTable -------------------------------------------------------

FrequencyTable::FrequencyTable(const TemporalKernel& kernel, int nodes)
    : kernel_(kernel) {
    if (nodes < 64) nodes = 64;
    // f_t ~ omega^-8 in the far tail; v = 400 leaves half-tail mass << 1e-10
    const double omegaMax = 400.0 / kernel_.support();

    // graded grid, dense near zero where most of the mass sits
    omega_.resize(nodes);
    cdf_.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double u = static_cast<double>(i) / (nodes - 1);
        omega_[i] = omegaMax * std::pow(u, 3.0);
    }
    auto ft = [&](double w) { return kernel_.spectral_density(w); };
    cdf_[0] = 0.0;
    for (int i = 1; i < nodes; ++i)
        cdf_[i] = cdf_[i - 1] + gauss_legendre(ft, omega_[i - 1], omega_[i], 16);

    // tabulated inverse: exact solves at equispaced half-mass nodes
    const int m = std::max(4096, 2 * nodes);
    const double pMax = cdf_.back();
    std::vector<double> q(m + 1), d(m + 1);
    const double dp = pMax / m;
    for (int i = 0; i <= m; ++i) {
        q[i] = i == 0 ? 0.0 : solve_half(i * dp);
        const double dens = kernel_.spectral_density(q[i]);
        d[i] = dens > 1e-300 ? 1.0 / dens : 0.0;  // clamped by the interpolant
    }
    inverse_ = MonotoneHermite(0.0, dp, std::move(q), std::move(d));
}

double FrequencyTable::solve_half(double p) const {
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), p);
    size_t i = static_cast<size_t>(it - cdf_.begin());
    if (i == 0) return 0.0;
    if (i >= cdf_.size()) return omega_.back();
    double lo = omega_[i - 1], hi = omega_[i];
    auto f = [&](double w) { return half_cdf(w) - p; };
    auto df = [&](double w) { return kernel_.spectral_density(w); };
    // f_t has isolated zeros, so Newton may stall: the bracket fallback decides
    return solve_bracketed(f, df, lo, hi, 1e-14, 1e-13 * (hi + 1.0));
}

double FrequencyTable::half_cdf(double omega) const {
    auto it = std::upper_bound(omega_.begin(), omega_.end(), omega);
    size_t i = static_cast<size_t>(it - omega_.begin());
    if (i == 0) return 0.0;
    if (i >= omega_.size()) return cdf_.back();
    auto ft = [&](double w) { return kernel_.spectral_density(w); };
    return cdf_[i - 1] + gauss_legendre(ft, omega_[i - 1], omega, 16);
}

double FrequencyTable::quantile(double u) const {
    // fold: f_t is even, CDF(omega) = 1/2 + sign * half_cdf(|omega|)
    double p = std::abs(2.0 * u - 1.0) * 0.5;
    const double sign = u >= 0.5 ? 1.0 : -1.0;
    p = std::min(p, cdf_.back());
    return sign * inverse_.value(p);
}

double FrequencyTable::quantile_exact(double u) const {
    double p = std::abs(2.0 * u - 1.0) * 0.5;
    const double sign = u >= 0.5 ? 1.0 : -1.0;
    p = std::min(p, cdf_.back());
    return sign * solve_half(p);
}

}  // namespace turb
