#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "turbgen/error.hpp"
#include "turbgen/interp.hpp"
#include "turbgen/rng.hpp"

namespace turb {

// Coefficients of the model energy spectrum: a piecewise form with a kappa^4
// energy-containing branch, a Kolmogorov -5/3 inertial branch and a kappa^-7
// dissipation branch, glued C2 at the transition wave numbers.
struct SpectrumConstants {
    double cK = 0.0;                       // Kolmogorov constant
    double a4 = 0.0, a5 = 0.0, a6 = 0.0;   // low-kappa polynomial
    double b7 = 0.0, b8 = 0.0, b9 = 0.0;   // high-kappa polynomial
    // Hat coefficients of the nonlinear transition system:
    //   aHat1 = 3/2 + sum a_j/(j+1),  aHat2 = 3/4 - sum a_j/(j+3),
    //   bHat1 = 3/2 - sum b_j/(j-1),  bHat2 = 3/4 + sum b_j/(j-3).
    double aHat1 = 0.0, aHat2 = 0.0, bHat1 = 0.0, bHat2 = 0.0;
};

// Paper coefficients (C_K = 3/2, a_j and b_j as ninths); the hat sums are
// evaluated in exact integer rationals before the final division.
SpectrumConstants derived_constants();

// Upper bound of the admissible zeta range,
//   zeta_crit = 1 / (2 C_K^3 (bHat2 - aHat2) (bHat1 - aHat1)^2).
// Throws DomainError when the hat differences make it degenerate.
double critical_zeta(const SpectrumConstants& c);

struct TransitionWaveNumbers {
    double zeta = 0.0;
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double y0 = 0.0;           // root of the scalar transition equation in (0,1)
    double dKappa1 = 0.0;      // d kappa1 / d zeta
    double dKappa2 = 0.0;      // d kappa2 / d zeta
};

// Solves the implicit transition wave numbers for the given zeta:
// bracketed bisection plus Newton polish on y0 in (0,1), residual <= 1e-12,
// then the closed forms for kappa1, kappa2 and their zeta-derivatives.
TransitionWaveNumbers solve_transitions(const SpectrumConstants& c, double zeta);

// The solved spectrum for one zeta. Immutable; cheap to copy.
class SpectrumModel {
public:
    SpectrumModel(SpectrumConstants c, TransitionWaveNumbers t)
        : c_(c), t_(t) {}

    static SpectrumModel solve(double zeta) {
        SpectrumConstants c = derived_constants();
        return SpectrumModel(c, solve_transitions(c, zeta));
    }

    const SpectrumConstants& constants() const { return c_; }
    const TransitionWaveNumbers& transitions() const { return t_; }
    double zeta() const { return t_.zeta; }

    double energy(double kappa) const;          // E(kappa; zeta)
    double energy_dkappa(double kappa) const;    // dE/dkappa
    double energy_dzeta(double kappa) const;     // dE/dzeta at fixed kappa

    // f_x = E/(4 pi kappa^2); kappa = 0 returns the analytic limit 0.
    double spatial_density(double kappa) const;

    // Closed-form CDF of E as a probability density on (0,inf).
    double cdf(double kappa) const;
    // Mass above kappa, computed without cancellation in the far tail.
    double tail_mass(double kappa) const;

private:
    SpectrumConstants c_;
    TransitionWaveNumbers t_;
};

// Inverse-CDF sampler for wave-number magnitudes distributed like E(.;zeta).
// A monotone lookup table brackets the quantile; safeguarded Newton on the
// closed-form CDF refines it to ~1e-13. The table is truncated where
// CDF >= 1 - 1e-10.
class WaveNumberTable {
public:
    explicit WaveNumberTable(const SpectrumModel& model, int nodes = 2048);

    double quantile(double u) const;
    double sample(Rng& rng) const { return quantile(rng.u01()); }

    // Proposal sampling for the moving-average samplers: a dense tabulated
    // inverse CDF (monotone cubic between exact nodes), with the exact
    // radial density of the interpolated sampler reported per draw so that
    // importance weights stay unbiased.
    double proposal_quantile(double u01, double* radialDensity = nullptr) const;

    double kappa_min() const { return kappa_.front(); }
    double kappa_max() const { return kappa_.back(); }
    // CDF value at the truncation point (the sampler's actual mass)
    double coverage() const { return cdf_.back(); }
    const SpectrumModel& model() const { return model_; }

private:
    SpectrumModel model_;
    std::vector<double> kappa_;
    std::vector<double> cdf_;
    MonotoneHermite inverse_;  // quantile over the unit interval
};

inline double sample_wavenumber(const WaveNumberTable& table, Rng& rng) {
    return table.sample(rng);
}

// Memoized per-zeta spectrum solves, keyed by zeta quantized to a relative
// quantum of 1e-6. Thread-safe; fills are idempotent.
class SpectrumCache {
public:
    SpectrumCache();
    ~SpectrumCache();
    SpectrumCache(const SpectrumCache&) = delete;
    SpectrumCache& operator=(const SpectrumCache&) = delete;

    // Throws UnsolvableZeta when zeta is outside (0, zeta_crit).
    const SpectrumModel& at(double zeta) const;
    double zeta_crit() const { return zetaCrit_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double zetaCrit_;
};

}  // namespace turb
