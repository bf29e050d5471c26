#pragma once

#include <array>
#include <cmath>
#include <optional>

namespace turb {

constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

// Row-major 3x3 matrix. The index convention is fixed at each use site:
// gradient tensors store m[j][l] = d(field_l)/d(x_j), Jacobians m[l][j].
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    double& operator()(int r, int c) { return m[r][c]; }
    double operator()(int r, int c) const { return m[r][c]; }

    static Mat3 identity() {
        Mat3 out;
        out.m[0][0] = out.m[1][1] = out.m[2][2] = 1.0;
        return out;
    }
    static Mat3 zero() { return Mat3{}; }
    static Mat3 diag(double a, double b, double c) {
        Mat3 out;
        out.m[0][0] = a; out.m[1][1] = b; out.m[2][2] = c;
        return out;
    }

    Mat3 operator+(const Mat3& o) const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out.m[r][c] = m[r][c] + o.m[r][c];
        return out;
    }
    Mat3 operator-(const Mat3& o) const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out.m[r][c] = m[r][c] - o.m[r][c];
        return out;
    }
    Mat3 operator*(double s) const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out.m[r][c] = m[r][c] * s;
        return out;
    }
    Mat3& operator+=(const Mat3& o) {
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m[r][c] += o.m[r][c];
        return *this;
    }
};

inline Mat3 operator*(double s, const Mat3& a) { return a * s; }

inline Vec3 matvec(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

// v^T A, i.e. matvec with the transpose
inline Vec3 matTvec(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(1, 0) * v.y + a(2, 0) * v.z,
            a(0, 1) * v.x + a(1, 1) * v.y + a(2, 1) * v.z,
            a(0, 2) * v.x + a(1, 2) * v.y + a(2, 2) * v.z};
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
            out(r, c) = s;
        }
    return out;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = a(c, r);
    return out;
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out(r, c) = a[r] * b[c];
    return out;
}

inline double trace(const Mat3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

inline double frobenius2(const Mat3& a) {
    double s = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) s += a(r, c) * a(r, c);
    return s;
}

inline bool is_identity_matrix(const Mat3& m) {
    return frobenius2(m - Mat3::identity()) == 0.0;
}

// Incompressibility projector P(k) = I - k^ (x) k^; P(0) = I by convention.
inline Mat3 projector(const Vec3& kappa) {
    double n2 = norm2(kappa);
    if (n2 <= 0.0) return Mat3::identity();
    Mat3 p = Mat3::identity();
    double inv = 1.0 / n2;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) p(r, c) -= kappa[r] * kappa[c] * inv;
    return p;
}

// Lower-triangular Cholesky factor of a symmetric matrix, or nullopt if a
// pivot falls below -tol (not positive semidefinite). Pivots in [-tol, 0]
// are clamped to zero.
inline std::optional<Mat3> cholesky_lower(const Mat3& a, double tol) {
    Mat3 l = Mat3::zero();
    for (int c = 0; c < 3; ++c) {
        double d = a(c, c);
        for (int k = 0; k < c; ++k) d -= l(c, k) * l(c, k);
        if (d < -tol) return std::nullopt;
        d = d > 0.0 ? std::sqrt(d) : 0.0;
        l(c, c) = d;
        for (int r = c + 1; r < 3; ++r) {
            double s = a(r, c);
            for (int k = 0; k < c; ++k) s -= l(r, k) * l(c, k);
            l(r, c) = d > 0.0 ? s / d : 0.0;
        }
    }
    return l;
}

// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
// Returns eigenvalues and the matrix of column eigenvectors.
struct SymEigen3 {
    std::array<double, 3> values{};
    Mat3 vectors;  // column j is the eigenvector of values[j]
};

inline SymEigen3 sym_eigen(const Mat3& a0) {
    Mat3 a = a0;
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
        if (off < 1e-30) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                Mat3 r = Mat3::identity();
                r(p, p) = c; r(q, q) = c; r(p, q) = s; r(q, p) = -s;
                a = matmul(transpose(r), matmul(a, r));
                v = matmul(v, r);
            }
        }
    }
    SymEigen3 out;
    out.values = {a(0, 0), a(1, 1), a(2, 2)};
    out.vectors = v;
    return out;
}

struct CVec3 {
    Vec3 re, im;
};

}  // namespace turb
