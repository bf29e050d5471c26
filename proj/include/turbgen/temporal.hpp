#pragma once

#include <memory>
#include <vector>

#include "turbgen/interp.hpp"
#include "turbgen/rng.hpp"

namespace turb {

// Compact-support time integration kernel
//   eta(s) = a/sqrt(s_c) p(|s|/s_c) on [-s_c, s_c],  p(z) = 1 - 10z^3 + 15z^4 - 6z^5,
// with a^2 = 231/181 and s_c = (362/231) T_E, so that the kernel is C^2,
// integrates to a*sqrt(s_c), and satisfies int eta^2 = 1 and a^2 s_c = 2 T_E.
class TemporalKernel {
public:
    explicit TemporalKernel(double tE = 0.3);

    double tE() const { return tE_; }
    double amplitude() const { return a_; }
    double support() const { return sc_; }  // s_c: eta vanishes for |s| > s_c

    double eta(double s) const;
    double eta_prime(double s) const;

    // C_t(s) = int eta(s-r) eta(r) dr, evaluated exactly: the integrand is a
    // piecewise polynomial of degree <= 10, integrated by Gauss-Legendre on
    // the subintervals between its breakpoints.
    double correlation(double s) const;

    // f_t(w) = 2 pi |F(eta)(w)|^2 = (4 T_E / pi) g(w s_c)^2 with
    // g(v) = int_0^1 p(u) cos(v u) du in closed form (series for small |v|).
    double spectral_density(double omega) const;

private:
    double tE_, a_, sc_;
};

// Inverse-CDF sampler for frequencies distributed like f_t. The CDF is
// accumulated once with Gauss-Legendre panels on a graded grid, then the
// quantile function is tabulated densely (exact root solves at the nodes,
// monotone cubic in between). quantile_exact() bypasses the tabulation.
class FrequencyTable {
public:
    explicit FrequencyTable(const TemporalKernel& kernel, int nodes = 2048);

    double quantile(double u) const;        // u in (0,1), symmetric about u = 1/2
    double quantile_exact(double u) const;  // root solve on the panel CDF
    double sample(Rng& rng) const { return quantile(rng.u01()); }

    double omega_max() const { return omega_.back(); }
    const TemporalKernel& kernel() const { return kernel_; }

private:
    double half_cdf(double omega) const;  // int_0^omega f_t, omega >= 0
    double solve_half(double p) const;

    TemporalKernel kernel_;
    std::vector<double> omega_;  // grid on [0, omega_max]
    std::vector<double> cdf_;    // int_0^omega_i f_t
    MonotoneHermite inverse_;    // omega over half-mass p in [0, cdf_.back()]
};

inline double sample_frequency(const FrequencyTable& table, Rng& rng) {
    return table.sample(rng);
}

}  // namespace turb
