#include "turbgen/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace turb {

void ReferenceScales::validate() const {
    if (!(x0 > 0.0) || !(nu0 > 0.0) || !(k0 > 0.0) || !(eps0 > 0.0))
        throw DomainError("ReferenceScales: all reference values must be positive");
}

CharacteristicNumbers characteristic_numbers(const ReferenceScales& s) {
    s.validate();
    CharacteristicNumbers n;
    n.z = s.eps0 * s.nu0 / (s.k0 * s.k0);
    n.delta = std::sqrt(s.k0) * s.k0 / (s.eps0 * s.x0);
    return n;
}

ScalingEval scaling_at(const FlowState& s) {
    if (!(s.k > 0.0) || !(s.eps > 0.0) || !(s.nu > 0.0))
        throw NonPositiveField("scaling_at: k, eps, nu must be positive");
    ScalingEval e;
    const double sqrtK = std::sqrt(s.k);
    e.sigmaX = sqrtK * s.k / s.eps;
    e.sigmaT = s.k / s.eps;
    e.sigmaU = sqrtK;
    e.sigmaZ = s.eps * s.nu / (s.k * s.k);
    // chain rule on sigma(k, eps, nu)
    for (int j = 0; j < 3; ++j) {
        const double dk = s.gradK[j], de = s.gradEps[j], dn = s.gradNu[j];
        e.gradSigmaX[j] = 1.5 * sqrtK / s.eps * dk - e.sigmaX / s.eps * de;
        e.gradSigmaT[j] = dk / s.eps - s.k / (s.eps * s.eps) * de;
        e.gradSigmaU[j] = 0.5 / sqrtK * dk;
        e.gradSigmaZ[j] = (s.nu * de + s.eps * dn) / (s.k * s.k) -
                          2.0 * s.eps * s.nu / (s.k * s.k * s.k) * dk;
    }
    return e;
}

Mat3 anisotropy_from_reynolds(const Mat3& r, double k) {
    if (!(k > 0.0)) throw NonPositiveField("anisotropy_from_reynolds: k must be positive");
    const double asym = std::abs(r(0, 1) - r(1, 0)) + std::abs(r(0, 2) - r(2, 0)) +
                        std::abs(r(1, 2) - r(2, 1));
    if (asym > 1e-10 * (1.0 + std::abs(trace(r))))
        throw NotRealizable("anisotropy_from_reynolds: Reynolds tensor must be symmetric");
    if (std::abs(trace(r) - 2.0 * k) > 1e-10 * std::max(1.0, 2.0 * k))
        throw NotRealizable("anisotropy_from_reynolds: tr R must equal 2k");

    Mat3 m = (15.0 / 7.0 / k) * r - (3.0 / 7.0) * Mat3::identity();
    const double clampTol = 1e-12;
    if (auto l = cholesky_lower(m, clampTol)) return *l;

    // marginal PSD cases: symmetric square root with eigenvalue clamp
    SymEigen3 eig = sym_eigen(m);
    for (double& lam : eig.values) {
        if (lam < -clampTol)
            throw NotRealizable("anisotropy_from_reynolds: R gives an indefinite shape matrix");
        lam = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    Mat3 d = Mat3::diag(eig.values[0], eig.values[1], eig.values[2]);
    return matmul(eig.vectors, matmul(d, transpose(eig.vectors)));
}

ConstantFlow::ConstantFlow(Vec3 uBar, double k, double eps, double nu,
                           std::optional<Mat3> reynolds) {
    if (!(k > 0.0) || !(eps > 0.0) || !(nu > 0.0))
        throw NonPositiveField("ConstantFlow: k, eps, nu must be positive");
    state_.uBar = uBar;
    state_.k = k;
    state_.eps = eps;
    state_.nu = nu;
    state_.reynolds = reynolds;
}

UniformShearFlow::UniformShearFlow(double gamma, double k, double eps, double nu,
                                   std::optional<Mat3> reynolds)
    : gamma_(gamma) {
    if (!(k > 0.0) || !(eps > 0.0) || !(nu > 0.0))
        throw NonPositiveField("UniformShearFlow: k, eps, nu must be positive");
    base_.k = k;
    base_.eps = eps;
    base_.nu = nu;
    base_.reynolds = reynolds;
    base_.gradUBar(1, 0) = gamma;  // d uBar_1 / d x_2
}

FlowState UniformShearFlow::state(const Vec3& x, double) const {
    FlowState s = base_;
    s.uBar = {gamma_ * x.y, 0.0, 0.0};
    return s;
}

// --- gridded provider -----------------------------------------------------

void FlowGridData::validate() const {
    if (n1 < 2 || n2 < 2 || n3 < 2 || nt < 1)
        throw ParseError("flow grid: need at least 2 nodes per spatial axis");
    if (!(spacing.x > 0.0) || !(spacing.y > 0.0) || !(spacing.z > 0.0))
        throw ParseError("flow grid: spacing must be positive");
    if (nt > 1 && !(dt > 0.0)) throw ParseError("flow grid: time spacing must be positive");
    const std::size_t n = node_count();
    if (uBar.size() != n || k.size() != n || eps.size() != n || nu.size() != n)
        throw ParseError("flow grid: field arrays do not match the node count");
    if (!reynolds.empty() && reynolds.size() != n)
        throw ParseError("flow grid: reynolds array does not match the node count");
    for (std::size_t i = 0; i < n; ++i)
        if (!(k[i] > 0.0) || !(eps[i] > 0.0) || !(nu[i] > 0.0))
            throw NonPositiveField("flow grid: k, eps, nu must be positive at every node");
}

namespace {

inline std::size_t node_index(const FlowGridData& g, int it, int i1, int i2, int i3) {
    return ((static_cast<std::size_t>(it) * g.n1 + i1) * g.n2 + i2) * g.n3 + i3;
}

template <class Get>
Vec3 central_gradient(const FlowGridData& g, int it, int i1, int i2, int i3, Get get) {
    auto axis = [&](int idx, int n, double h, int axisId) {
        int lo = idx > 0 ? idx - 1 : idx;
        int hi = idx < n - 1 ? idx + 1 : idx;
        int a1 = axisId == 0 ? lo : i1, b1 = axisId == 0 ? hi : i1;
        int a2 = axisId == 1 ? lo : i2, b2 = axisId == 1 ? hi : i2;
        int a3 = axisId == 2 ? lo : i3, b3 = axisId == 2 ? hi : i3;
        double span = (hi - lo) * h;
        if (span <= 0.0) return 0.0;
        return (get(node_index(g, it, b1, b2, b3)) - get(node_index(g, it, a1, a2, a3))) / span;
    };
    return {axis(i1, g.n1, g.spacing.x, 0), axis(i2, g.n2, g.spacing.y, 1),
            axis(i3, g.n3, g.spacing.z, 2)};
}

}  // namespace

GriddedFlow::GriddedFlow(FlowGridData data, DomainPolicy policy)
    : data_(std::move(data)), policy_(policy) {
    data_.validate();
    const std::size_t n = data_.node_count();
    gradU_.resize(n);
    gradK_.resize(n);
    gradEps_.resize(n);
    gradNu_.resize(n);
    for (int it = 0; it < data_.nt; ++it)
        for (int i1 = 0; i1 < data_.n1; ++i1)
            for (int i2 = 0; i2 < data_.n2; ++i2)
                for (int i3 = 0; i3 < data_.n3; ++i3) {
                    const std::size_t idx = node_index(data_, it, i1, i2, i3);
                    for (int l = 0; l < 3; ++l)
                        gradU_[idx][l] = central_gradient(
                            data_, it, i1, i2, i3,
                            [&](std::size_t q) { return data_.uBar[q][l]; });
                    gradK_[idx] = central_gradient(data_, it, i1, i2, i3,
                                                   [&](std::size_t q) { return data_.k[q]; });
                    gradEps_[idx] = central_gradient(data_, it, i1, i2, i3,
                                                     [&](std::size_t q) { return data_.eps[q]; });
                    gradNu_[idx] = central_gradient(data_, it, i1, i2, i3,
                                                    [&](std::size_t q) { return data_.nu[q]; });
                    double f2 = 0.0;
                    for (int l = 0; l < 3; ++l) f2 += norm2(gradU_[idx][l]);
                    gradBound_ = std::max(gradBound_, std::sqrt(f2));
                }
}

FlowState GriddedFlow::state(const Vec3& x, double t) const {
    auto locate = [&](double v, double o, double h, int n, const char* axis) {
        double u = (v - o) / h;
        if (u < 0.0 || u > n - 1) {
            if (policy_ == DomainPolicy::Error)
                throw OutOfDomain(std::string("GriddedFlow: query outside grid on axis ") + axis);
            u = std::clamp(u, 0.0, static_cast<double>(n - 1));
        }
        int i = std::min(static_cast<int>(u), n - 2);
        return std::pair<int, double>(i, u - i);
    };

    auto [i1, f1] = locate(x.x, data_.origin.x, data_.spacing.x, data_.n1, "x1");
    auto [i2, f2] = locate(x.y, data_.origin.y, data_.spacing.y, data_.n2, "x2");
    auto [i3, f3] = locate(x.z, data_.origin.z, data_.spacing.z, data_.n3, "x3");
    int it = 0;
    double ft = 0.0;
    if (data_.nt > 1) {
        auto [i, f] = locate(t, data_.t0, data_.dt, data_.nt, "t");
        it = i;
        ft = f;
    }

    FlowState out;
    out.uBar = {0, 0, 0};
    out.k = out.eps = out.nu = 0.0;
    out.gradUBar = Mat3::zero();
    out.gradK = out.gradEps = out.gradNu = Vec3{};
    Mat3 rey = Mat3::zero();
    const bool hasR = !data_.reynolds.empty();

    const int tSteps = data_.nt > 1 ? 2 : 1;
    for (int dt8 = 0; dt8 < tSteps; ++dt8) {
        const double wt = tSteps == 1 ? 1.0 : (dt8 == 0 ? 1.0 - ft : ft);
        if (wt == 0.0) continue;
        for (int d1 = 0; d1 < 2; ++d1)
            for (int d2 = 0; d2 < 2; ++d2)
                for (int d3 = 0; d3 < 2; ++d3) {
                    const double w = wt * (d1 ? f1 : 1.0 - f1) * (d2 ? f2 : 1.0 - f2) *
                                     (d3 ? f3 : 1.0 - f3);
                    if (w == 0.0) continue;
                    const std::size_t q =
                        node_index(data_, it + dt8, i1 + d1, i2 + d2, i3 + d3);
                    out.uBar += w * data_.uBar[q];
                    out.k += w * data_.k[q];
                    out.eps += w * data_.eps[q];
                    out.nu += w * data_.nu[q];
                    out.gradK += w * gradK_[q];
                    out.gradEps += w * gradEps_[q];
                    out.gradNu += w * gradNu_[q];
                    for (int l = 0; l < 3; ++l)
                        for (int j = 0; j < 3; ++j)
                            out.gradUBar(j, l) += w * gradU_[q][l][j];
                    if (hasR) {
                        const auto& r = data_.reynolds[q];
                        rey(0, 0) += w * r[0];
                        rey(1, 1) += w * r[1];
                        rey(2, 2) += w * r[2];
                        rey(0, 1) += w * r[3];
                        rey(1, 0) += w * r[3];
                        rey(0, 2) += w * r[4];
                        rey(2, 0) += w * r[4];
                        rey(1, 2) += w * r[5];
                        rey(2, 1) += w * r[5];
                    }
                }
    }
    if (hasR) out.reynolds = rey;
    return out;
}

// --- grid file I/O ---------------------------------------------------------

FlowGridData read_flow_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open flow grid file: " + path);

    FlowGridData g;
    std::vector<std::string> fields;
    std::string line;
    bool sawMagic = false, inData = false;
    std::size_t row = 0;

    auto err = [&](const std::string& what) {
        throw ParseError("flow grid '" + path + "': " + what);
    };

    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;

        if (!inData) {
            if (!sawMagic) {
                int version = 0;
                if (tok != "flowgrid" || !(ls >> version) || version != 1)
                    err("expected header 'flowgrid 1'");
                sawMagic = true;
            } else if (tok == "nodes") {
                if (!(ls >> g.n1 >> g.n2 >> g.n3 >> g.nt)) err("bad 'nodes' line");
            } else if (tok == "origin") {
                if (!(ls >> g.origin.x >> g.origin.y >> g.origin.z >> g.t0))
                    err("bad 'origin' line");
            } else if (tok == "spacing") {
                if (!(ls >> g.spacing.x >> g.spacing.y >> g.spacing.z >> g.dt))
                    err("bad 'spacing' line");
            } else if (tok == "fields") {
                std::string f;
                while (ls >> f) fields.push_back(f);
            } else if (tok == "data") {
                static const std::vector<std::string> base = {"ubar1", "ubar2", "ubar3",
                                                              "k",     "eps",   "nu"};
                if (fields.size() != 6 && fields.size() != 12)
                    err("'fields' must list the 6 base fields, optionally + 6 reynolds");
                for (std::size_t i = 0; i < 6; ++i)
                    if (fields[i] != base[i]) err("unexpected field order; see README");
                if (fields.size() == 12) {
                    static const std::vector<std::string> rey = {"r11", "r22", "r33",
                                                                 "r12", "r13", "r23"};
                    for (std::size_t i = 0; i < 6; ++i)
                        if (fields[6 + i] != rey[i]) err("unexpected reynolds field order");
                }
                const std::size_t n = g.node_count();
                if (n == 0) err("'data' before 'nodes'");
                g.uBar.resize(n);
                g.k.resize(n);
                g.eps.resize(n);
                g.nu.resize(n);
                if (fields.size() == 12) g.reynolds.resize(n);
                inData = true;
            } else {
                err("unknown header keyword '" + tok + "'");
            }
            continue;
        }

        if (row >= g.node_count()) err("more data rows than nodes");
        std::istringstream ds(line);
        Vec3 u;
        double kk, ee, nn;
        if (!(ds >> u.x >> u.y >> u.z >> kk >> ee >> nn)) err("short data row");
        g.uBar[row] = u;
        g.k[row] = kk;
        g.eps[row] = ee;
        g.nu[row] = nn;
        if (!g.reynolds.empty()) {
            auto& r = g.reynolds[row];
            if (!(ds >> r[0] >> r[1] >> r[2] >> r[3] >> r[4] >> r[5]))
                err("short reynolds columns");
        }
        ++row;
    }
    if (!inData) err("missing 'data' section");
    if (row != g.node_count()) err("fewer data rows than nodes");
    g.validate();
    return g;
}

void write_flow_grid(const std::string& path, const FlowGridData& g) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write flow grid file: " + path);
    char buf[512];
    out << "flowgrid 1\n";
    std::snprintf(buf, sizeof buf, "nodes %d %d %d %d\n", g.n1, g.n2, g.n3, g.nt);
    out << buf;
    std::snprintf(buf, sizeof buf, "origin %.17g %.17g %.17g %.17g\n", g.origin.x, g.origin.y,
                  g.origin.z, g.t0);
    out << buf;
    std::snprintf(buf, sizeof buf, "spacing %.17g %.17g %.17g %.17g\n", g.spacing.x, g.spacing.y,
                  g.spacing.z, g.dt);
    out << buf;
    out << "fields ubar1 ubar2 ubar3 k eps nu";
    if (!g.reynolds.empty()) out << " r11 r22 r33 r12 r13 r23";
    out << "\ndata\n";
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g %.17g %.17g", g.uBar[i].x,
                      g.uBar[i].y, g.uBar[i].z, g.k[i], g.eps[i], g.nu[i]);
        out << buf;
        if (!g.reynolds.empty()) {
            const auto& r = g.reynolds[i];
            std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g %.17g %.17g %.17g", r[0], r[1],
                          r[2], r[3], r[4], r[5]);
            out << buf;
        }
        out << "\n";
    }
}

// --- nondimensionalization --------------------------------------------------

NondimensionalFlow nondimensionalize(const FlowGridData& raw, const ReferenceScales& s,
                                     DomainPolicy policy) {
    raw.validate();
    NondimensionalFlow out;
    out.numbers = characteristic_numbers(s);

    FlowGridData g = raw;
    const double u0 = s.u0(), t0 = s.t0();
    g.origin = raw.origin / s.x0;
    g.spacing = raw.spacing / s.x0;
    g.t0 = raw.t0 / t0;
    g.dt = raw.dt / t0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
        g.uBar[i] = raw.uBar[i] / u0;
        g.k[i] = raw.k[i] / s.k0;
        g.eps[i] = raw.eps[i] / s.eps0;
        g.nu[i] = raw.nu[i] / s.nu0;
        if (!g.reynolds.empty())
            for (double& r : g.reynolds[i]) r /= s.k0;
    }
    out.flow = std::make_shared<GriddedFlow>(std::move(g), policy);
    return out;
}

NondimensionalFlow nondimensionalize_constant(const Vec3& uBarSI, double kSI, double epsSI,
                                              double nuSI, const ReferenceScales& s,
                                              std::optional<Mat3> reynoldsSI) {
    if (!(kSI > 0.0) || !(epsSI > 0.0) || !(nuSI > 0.0))
        throw NonPositiveField("nondimensionalize_constant: k, eps, nu must be positive");
    NondimensionalFlow out;
    out.numbers = characteristic_numbers(s);
    std::optional<Mat3> r;
    if (reynoldsSI) r = (1.0 / s.k0) * (*reynoldsSI);
    out.flow = std::make_shared<ConstantFlow>(uBarSI / s.u0(), kSI / s.k0, epsSI / s.eps0,
                                              nuSI / s.nu0, r);
    return out;
}

}  // namespace turb
