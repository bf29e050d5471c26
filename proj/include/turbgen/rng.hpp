#pragma once

#include <cmath>
#include <cstdint>

#include "turbgen/math.hpp"

namespace turb {

// splitmix64 finalizer; the basis for all randomness in the library.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Counter-based stream: value i of stream (seed, stream) is a pure function
// of its arguments, so draws are reproducible independent of evaluation
// order or thread count.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix64(seed ^ mix64(stream ^ 0x8BADF00D5EEDC0DEull))) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    // uniform in [0,1)
    double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // two independent standard normals (Box-Muller)
    void gauss_pair(double& g1, double& g2) {
        double u1 = 1.0 - u01();  // (0,1], keeps log finite
        double u2 = u01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * kPi * u2;
        g1 = r * std::cos(a);
        g2 = r * std::sin(a);
    }

    double gauss() {
        double g1, g2;
        gauss_pair(g1, g2);
        return g1;  // one draw of the pair is discarded; draw count stays fixed
    }

    // uniform direction on the unit sphere
    Vec3 sphere() {
        double z = 2.0 * u01() - 1.0;
        double phi = 2.0 * kPi * u01();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    // standard complex Gaussian 3-vector: every component has independent
    // real and imaginary parts of variance 1/2, so E[z conj(z)] = 1
    CVec3 complex_gauss3() {
        CVec3 out;
        const double s = std::sqrt(0.5);
        double a, b;
        gauss_pair(a, b); out.re.x = s * a; out.im.x = s * b;
        gauss_pair(a, b); out.re.y = s * a; out.im.y = s * b;
        gauss_pair(a, b); out.re.z = s * a; out.im.z = s * b;
        return out;
    }

private:
    std::uint64_t state_;
};

// zig-zag fold of a signed index into an unsigned stream id
inline std::uint64_t stream_of_index(long long j) {
    return j >= 0 ? 2ull * static_cast<std::uint64_t>(j)
                  : 2ull * static_cast<std::uint64_t>(-(j + 1)) + 1ull;
}

}  // namespace turb
