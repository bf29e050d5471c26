#include "turbgen/quadrature.hpp"

#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <queue>
#include <vector>

#include "turbgen/error.hpp"

namespace turb {
namespace {

// 15-point Kronrod nodes on [-1,1] with the embedded 7-point Gauss rule.
const double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
const double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
const double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fc = f(c);
    double resG = fc * kWg[3];
    double resK = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        double x = h * kXgk[j];
        double f1 = f(c - x);
        double f2 = f(c + x);
        resK += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resG += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, resK * h, std::abs((resK - resG) * h)};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double relTol, double absTol, int maxDepth) {
    if (a == b) return 0.0;
    // worst-segment-first refinement with global error accounting
    const int budget = 1 << std::min(maxDepth, 13);
    std::priority_queue<Segment> queue;
    Segment s0 = gk15(f, a, b);
    double sum = s0.value;
    double err = s0.error;
    queue.push(s0);
    while (static_cast<int>(queue.size()) < budget) {
        const double tol = std::max({absTol, relTol * std::abs(sum),
                                     32.0 * 1e-17 * std::abs(sum)});
        if (err <= tol) break;
        Segment worst = queue.top();
        queue.pop();
        // stop when the worst segment sits at the roundoff floor
        if (worst.error <= 1e-17 * std::abs(sum) || worst.b - worst.a < 1e-300) {
            queue.push(worst);
            break;
        }
        double c = 0.5 * (worst.a + worst.b);
        Segment l = gk15(f, worst.a, c);
        Segment r = gk15(f, c, worst.b);
        sum += l.value + r.value - worst.value;
        err += l.error + r.error - worst.error;
        queue.push(l);
        queue.push(r);
    }
    return sum;
}

namespace {

void gl_compute(int n, std::vector<double>& x, std::vector<double>& w) {
    // Newton iteration on Legendre polynomials; nodes symmetric about 0.
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double t = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / pp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

struct GlRule {
    std::vector<double> x, w;
};

// reference nodes memoized per order; hot paths call these repeatedly
const GlRule& gl_reference(int n) {
    static std::mutex mutex;
    static std::map<int, GlRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) {
        GlRule rule;
        gl_compute(n, rule.x, rule.w);
        it = cache.emplace(n, std::move(rule)).first;
    }
    return it->second;
}

}  // namespace

void gauss_legendre_nodes(int n, double a, double b, double* x, double* w) {
    const GlRule& rule = gl_reference(n);
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        x[i] = c + h * rule.x[i];
        w[i] = h * rule.w[i];
    }
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int n) {
    const GlRule& rule = gl_reference(n);
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rule.w[i] * f(c + h * rule.x[i]);
    return s * h;
}

}  // namespace turb
