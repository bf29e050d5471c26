#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace turb {

// Monotone cubic Hermite interpolant on an equispaced parameter grid.
// Supplied node derivatives are clamped to the Fritsch-Carlson bound
// d_i <= 3 min(secant_left, secant_right), which keeps the piecewise cubic
// monotone for monotone node data.
class MonotoneHermite {
public:
    MonotoneHermite() = default;
    MonotoneHermite(double u0, double du, std::vector<double> y, std::vector<double> d)
        : u0_(u0), du_(du), y_(std::move(y)), d_(std::move(d)) {
        const std::size_t n = y_.size();
        for (std::size_t i = 0; i < n; ++i) {
            double lim = 0.0;
            if (i > 0) lim = (y_[i] - y_[i - 1]) / du_;
            if (i + 1 < n) {
                const double s = (y_[i + 1] - y_[i]) / du_;
                lim = i > 0 ? std::min(lim, s) : s;
            }
            d_[i] = std::clamp(d_[i], 0.0, 3.0 * lim);
        }
    }

    double umin() const { return u0_; }
    double umax() const { return u0_ + du_ * (y_.size() - 1); }

    double value(double u, double* dydu = nullptr) const {
        const std::size_t n = y_.size();
        double s = (u - u0_) / du_;
        std::size_t i = 0;
        if (s > 0.0) i = std::min(static_cast<std::size_t>(s), n - 2);
        const double t = std::clamp(s - i, 0.0, 1.0);
        const double y0 = y_[i], y1 = y_[i + 1];
        const double m0 = d_[i] * du_, m1 = d_[i + 1] * du_;
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        if (dydu) {
            const double dh00 = 6 * t2 - 6 * t;
            const double dh10 = 3 * t2 - 4 * t + 1;
            const double dh01 = -dh00;
            const double dh11 = 3 * t2 - 2 * t;
            *dydu = (dh00 * y0 + dh10 * m0 + dh01 * y1 + dh11 * m1) / du_;
        }
        return h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
    }

private:
    double u0_ = 0.0, du_ = 1.0;
    std::vector<double> y_, d_;
};

}  // namespace turb
