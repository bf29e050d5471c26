#pragma once

#include <cmath>
#include <functional>

#include "turbgen/error.hpp"

namespace turb {

// Safeguarded Newton on a bracketing interval [lo,hi] with f(lo)*f(hi) <= 0.
// Newton steps are taken when they stay inside the bracket, bisection
// otherwise. Converges when |f| <= fTol or the bracket width falls below
// xTol (absolute). Throws ConvergenceFailure past maxIter.
inline double solve_bracketed(const std::function<double(double)>& f,
                              const std::function<double(double)>& df,
                              double lo, double hi,
                              double fTol, double xTol, int maxIter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw ConvergenceFailure("solve_bracketed: endpoints do not bracket a root");

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < maxIter; ++it) {
        double fx = f(x);
        if (std::abs(fx) <= fTol) return x;
        if ((fx > 0.0) == (flo > 0.0)) {
            lo = x; flo = fx;
        } else {
            hi = x;
        }
        if (hi - lo <= xTol) return 0.5 * (lo + hi);
        double d = df(x);
        double xn = x - fx / d;
        if (!(d != 0.0) || !(xn > lo) || !(xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    throw ConvergenceFailure("solve_bracketed: iteration budget exhausted");
}

// Bisection-only variant for derivative-free use.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double xTol, int maxIter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw ConvergenceFailure("bisect: endpoints do not bracket a root");
    for (int it = 0; it < maxIter && hi - lo > xTol; ++it) {
        double c = 0.5 * (lo + hi);
        double fc = f(c);
        if (fc == 0.0) return c;
        if ((fc > 0.0) == (flo > 0.0)) {
            lo = c; flo = fc;
        } else {
            hi = c;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace turb
