// turbgen: command-line front end for the synthetic turbulence library.
// Subcommands: validate | curves | sample | estimate.
// Exit codes: 0 success, 1 usage/config error, 2 validation/acceptance failure.

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "turbgen/config.hpp"
#include "turbgen/quadrature.hpp"
#include "turbgen/report.hpp"
#include "turbgen/sampler.hpp"
#include "turbgen/stats.hpp"

namespace {

constexpr const char* kVersion = "turbgen 1.0.0";

using namespace turb;

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// run setup shared by sample/estimate

struct RunSetup {
    std::shared_ptr<const FlowProvider> flow;
    CharacteristicNumbers numbers{1e-3, 0.05};
    TemporalKernel kernel{0.3};
    SamplerConfig sampler;
    Variant variant = Variant::HomogeneousFrequency;
    AnisotropySource aniso = AnisotropySource::Identity;
    Mat3 fixedL = Mat3::identity();
    std::shared_ptr<SamplerResources> resources = std::make_shared<SamplerResources>();
    std::uint64_t seed = 12345;
    int threads = 1;
};

Vec3 get_vec(const Config& cfg, const std::string& base, Vec3 fallback) {
    return {cfg.get_double(base + "1", fallback.x), cfg.get_double(base + "2", fallback.y),
            cfg.get_double(base + "3", fallback.z)};
}

double median_sigma_z(const FlowGridData& g) {
    std::vector<double> sz;
    sz.reserve(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i)
        sz.push_back(g.eps[i] * g.nu[i] / (g.k[i] * g.k[i]));
    std::sort(sz.begin(), sz.end());
    return sz[sz.size() / 2];
}

RunSetup build_run(const Config& cfg) {
    RunSetup run;
    run.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 12345));
    run.threads = static_cast<int>(cfg.get_int("run.threads", 1));
    run.kernel = TemporalKernel(cfg.get_double("temporal.tE", 0.3));

    // flow provider, dimensionless ([numbers]) or via reference scales
    const std::string preset = cfg.get_string("flow.preset", "constant");
    const bool hasScales = cfg.has("scales.k0");
    ReferenceScales scales;
    if (hasScales) {
        scales.x0 = cfg.get_double("scales.x0", 1.0);
        scales.nu0 = cfg.get_double("scales.nu0", 1.0);
        scales.k0 = cfg.get_double("scales.k0", 1.0);
        scales.eps0 = cfg.get_double("scales.eps0", 1.0);
        run.numbers = characteristic_numbers(scales);
    } else {
        run.numbers.z = cfg.get_double("numbers.z", 1e-3);
        run.numbers.delta = cfg.get_double("numbers.delta", 0.05);
    }

    double sigmaZMedian = -1.0;
    if (preset == "constant" || preset == "shear") {
        double k = cfg.get_double("flow.k", hasScales ? scales.k0 : 1.0);
        double eps = cfg.get_double("flow.eps", hasScales ? scales.eps0 : 1.0);
        double nu = cfg.get_double("flow.nu", hasScales ? scales.nu0 : 1.0);
        Vec3 ubar = get_vec(cfg, "flow.ubar", Vec3{});
        double gamma = cfg.get_double("flow.gamma", 0.0);
        if (hasScales) {
            k /= scales.k0;
            eps /= scales.eps0;
            nu /= scales.nu0;
            ubar = ubar / scales.u0();
            gamma *= scales.t0();
        }
        std::optional<Mat3> reynolds;
        if (cfg.has("flow.r11")) {
            Mat3 r = Mat3::zero();
            r(0, 0) = cfg.get_double("flow.r11", 0.0);
            r(1, 1) = cfg.get_double("flow.r22", 0.0);
            r(2, 2) = cfg.get_double("flow.r33", 0.0);
            r(0, 1) = r(1, 0) = cfg.get_double("flow.r12", 0.0);
            r(0, 2) = r(2, 0) = cfg.get_double("flow.r13", 0.0);
            r(1, 2) = r(2, 1) = cfg.get_double("flow.r23", 0.0);
            if (hasScales) r = (1.0 / scales.k0) * r;
            reynolds = r;
        }
        if (preset == "constant")
            run.flow = std::make_shared<ConstantFlow>(ubar, k, eps, nu, reynolds);
        else
            run.flow = std::make_shared<UniformShearFlow>(gamma, k, eps, nu, reynolds);
    } else if (preset == "grid") {
        const std::string path = cfg.require("flow.grid");
        const DomainPolicy policy =
            cfg.get_bool("flow.clamp", false) ? DomainPolicy::Clamp : DomainPolicy::Error;
        FlowGridData raw = read_flow_grid(path);
        if (hasScales) {
            auto nd = nondimensionalize(raw, scales, policy);
            run.flow = nd.flow;
            run.numbers = nd.numbers;
            sigmaZMedian = median_sigma_z(
                static_cast<const GriddedFlow*>(run.flow.get())->data());
        } else {
            sigmaZMedian = median_sigma_z(raw);
            run.flow = std::make_shared<GriddedFlow>(std::move(raw), policy);
        }
    } else {
        throw ParseError("flow.preset must be constant, shear or grid");
    }

    // sampler
    const std::string variant = cfg.get_string("sampler.variant", "homogeneous");
    if (variant == "homogeneous") run.variant = Variant::HomogeneousFrequency;
    else if (variant == "homogeneous-ma") run.variant = Variant::HomogeneousMovingAverage;
    else if (variant == "inhomogeneous") run.variant = Variant::Inhomogeneous;
    else throw ParseError("sampler.variant must be homogeneous, homogeneous-ma or inhomogeneous");

    run.sampler.modes = static_cast<int>(cfg.get_int("sampler.modes", 1024));
    run.sampler.modesPerSlice = static_cast<int>(cfg.get_int("sampler.modesPerSlice", 256));
    run.sampler.sliceSpacing = cfg.get_double("sampler.sliceSpacing", 0.0);
    run.sampler.tableNodes = static_cast<int>(cfg.get_int("sampler.tableNodes", 2048));
    run.sampler.refPoint = get_vec(cfg, "sampler.ref", Vec3{});
    run.sampler.refTime = cfg.get_double("sampler.reft", 0.0);
    run.sampler.trajectory.step = cfg.get_double("sampler.trajStep", 0.0);
    run.sampler.zetaRef = cfg.get_double("sampler.zetaRef", 0.0);
    if (run.sampler.zetaRef <= 0.0 && sigmaZMedian > 0.0)
        run.sampler.zetaRef = run.numbers.z * sigmaZMedian;

    // anisotropy
    const std::string aniso = cfg.get_string("sampler.anisotropy", "identity");
    if (aniso == "identity") {
        run.aniso = AnisotropySource::Identity;
    } else if (aniso == "reynolds") {
        // constant prescribed R collapses to a fixed factor
        const FlowState st = run.flow->state(run.sampler.refPoint, run.sampler.refTime);
        if (!st.reynolds)
            throw ParseError("sampler.anisotropy = reynolds but the flow supplies no R");
        if (run.flow->spatially_constant() || cfg.get_bool("sampler.anisotropyFixed", true)) {
            run.fixedL = anisotropy_from_reynolds(*st.reynolds, st.k);
            run.aniso = AnisotropySource::Fixed;
        } else {
            run.aniso = AnisotropySource::FromReynolds;
        }
    } else {
        throw ParseError("sampler.anisotropy must be identity or reynolds");
    }
    return run;
}

RealizationFactory make_factory(const RunSetup& run) {
    return [run](std::uint64_t seed) {
        switch (run.variant) {
            case Variant::HomogeneousFrequency:
                return FieldRealization::homogeneous_frequency(run.flow, run.numbers, run.kernel,
                                                               run.sampler, seed, run.aniso,
                                                               run.fixedL, run.resources);
            case Variant::HomogeneousMovingAverage:
                return FieldRealization::homogeneous_moving_average(
                    run.flow, run.numbers, run.kernel, run.sampler, seed, run.aniso, run.fixedL,
                    run.resources);
            default:
                return FieldRealization::inhomogeneous(run.flow, run.numbers, run.kernel,
                                                       run.sampler, seed, run.aniso, run.fixedL,
                                                       run.resources);
        }
    };
}

std::vector<std::string> provenance(const Config& cfg, const std::string& command) {
    std::vector<std::string> head;
    head.push_back(kVersion);
    head.push_back("command: " + command);
    head.push_back(fmt("config-hash: 0x%016llx",
                       static_cast<unsigned long long>(cfg.hash())));
    head.push_back("config-begin");
    std::istringstream canon(cfg.canonical());
    std::string line;
    while (std::getline(canon, line)) head.push_back("  " + line);
    head.push_back("config-end");
    return head;
}

// ---------------------------------------------------------------------------
// validate

struct Check {
    std::string name;
    double value, target, tol;
    bool pass;
};

int cmd_validate(const Config& cfg, const std::string& outPath) {
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double value, double target, double tol) {
        checks.push_back({name, value, target, tol, std::abs(value - target) <= tol});
    };

    // spectrum constants, with optional overrides for fault injection
    SpectrumConstants sc = derived_constants();
    auto over = [&](const char* key, double& field) {
        field = cfg.get_double(std::string("spectrum.") + key, field);
    };
    over("cK", sc.cK);
    over("a4", sc.a4); over("a5", sc.a5); over("a6", sc.a6);
    over("b7", sc.b7); over("b8", sc.b8); over("b9", sc.b9);
    // hats always recomputed from the (possibly overridden) coefficients
    sc.aHat1 = 1.5 + sc.a4 / 5.0 + sc.a5 / 6.0 + sc.a6 / 7.0;
    sc.aHat2 = 0.75 - (sc.a4 / 7.0 + sc.a5 / 8.0 + sc.a6 / 9.0);
    sc.bHat1 = 1.5 - (sc.b7 / 6.0 + sc.b8 / 7.0 + sc.b9 / 8.0);
    sc.bHat2 = 0.75 + sc.b7 / 4.0 + sc.b8 / 5.0 + sc.b9 / 6.0;

    add("spectrum.a_sum", sc.a4 + sc.a5 + sc.a6, 1.0, 1e-12);
    add("spectrum.b_sum", sc.b7 + sc.b8 + sc.b9, 1.0, 1e-12);
    const double zc = critical_zeta(sc);
    add("spectrum.zeta_crit", zc, 0.1430, 5e-4);

    std::vector<double> zetas = cfg.get_doubles("spectrum.zeta", {1e-4, 1e-3, 1e-2});
    for (double zeta : zetas) {
        // out-of-range zeta is a configuration error (exit 1), not a failure
        SpectrumModel model(sc, solve_transitions(sc, zeta));
        const auto& t = model.transitions();
        // continuity of the piecewise branches at the transitions
        const double eL = sc.cK * std::pow(t.kappa1, -5.0 / 3.0) * (sc.a4 + sc.a5 + sc.a6);
        const double eM1 = sc.cK * std::pow(t.kappa1, -5.0 / 3.0);
        add(fmt("spectrum.continuity_k1@%g", zeta), eL / eM1, 1.0, 1e-12);
        const double eR = sc.cK * std::pow(t.kappa2, -5.0 / 3.0) * (sc.b7 + sc.b8 + sc.b9);
        const double eM2 = sc.cK * std::pow(t.kappa2, -5.0 / 3.0);
        add(fmt("spectrum.continuity_k2@%g", zeta), eR / eM2, 1.0, 1e-12);

        double kHi = t.kappa2 * 2.0;
        while (model.tail_mass(kHi) > 1e-12) kHi *= 2.0;
        auto e = [&](double k) { return model.energy(k); };
        auto k2e = [&](double k) { return k * k * model.energy(k); };
        const double i0 = integrate(e, 0, t.kappa1, 1e-10) +
                          integrate(e, t.kappa1, t.kappa2, 1e-10) +
                          integrate(e, t.kappa2, kHi, 1e-10);
        const double i2 = integrate(k2e, 0, t.kappa1, 1e-10) +
                          integrate(k2e, t.kappa1, t.kappa2, 1e-10) +
                          integrate(k2e, t.kappa2, kHi, 1e-10);
        add(fmt("spectrum.int_E@%g", zeta), i0, 1.0, 1e-8);
        add(fmt("spectrum.int_k2E@%g", zeta), i2 * 2.0 * zeta, 1.0, 1e-8);
    }

    // temporal kernel identities
    const TemporalKernel kern(cfg.get_double("temporal.tE", 0.3));
    const double sc2 = kern.support();
    auto eta2 = [&](double s) { const double v = kern.eta(s); return v * v; };
    add("temporal.int_eta2", integrate(eta2, -sc2, 0, 1e-13) + integrate(eta2, 0, sc2, 1e-13),
        1.0, 1e-12);
    add("temporal.a2sc_2tE", kern.amplitude() * kern.amplitude() * kern.support(),
        2.0 * kern.tE(), 1e-12);
    add("temporal.int_Ct", integrate([&](double s) { return kern.correlation(s); }, 0.0,
                                     2.0 * sc2, 1e-11),
        kern.tE(), 1e-6);
    add("temporal.pi_ft0", kPi * kern.spectral_density(0.0), kern.tE(), 1e-9);

    // sphere identity for a fixed symmetric S:
    // int P S P dU = (7/15) S + (1/15) tr(S) I
    Mat3 s = Mat3::zero();
    s(0, 0) = 1.3; s(1, 1) = -0.4; s(2, 2) = 0.6;
    s(0, 1) = s(1, 0) = 0.25; s(0, 2) = s(2, 0) = -0.15; s(1, 2) = s(2, 1) = 0.05;
    Mat3 quad = Mat3::zero();
    {
        const int nPolar = 8, nAzim = 16;
        std::vector<double> px(nPolar), pw(nPolar);
        gauss_legendre_nodes(nPolar, -1.0, 1.0, px.data(), pw.data());
        for (int ip = 0; ip < nPolar; ++ip) {
            const double cth = px[ip];
            const double sth = std::sqrt(std::max(0.0, 1.0 - cth * cth));
            for (int ia = 0; ia < nAzim; ++ia) {
                const double phi = 2.0 * kPi * (ia + 0.5) / nAzim;
                const Vec3 th{sth * std::cos(phi), sth * std::sin(phi), cth};
                const Mat3 p = projector(th);
                quad += pw[ip] * matmul(p, matmul(s, p));
            }
        }
        quad = quad * (1.0 / (2.0 * nAzim));
    }
    const Mat3 want = (7.0 / 15.0) * s + (trace(s) / 15.0) * Mat3::identity();
    add("sphere.projector_identity", std::sqrt(frobenius2(quad - want)), 0.0, 1e-10);

    // report
    std::ostringstream rep;
    for (const auto& line : provenance(cfg, "validate")) rep << "# " << line << "\n";
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.pass;
        rep << fmt("check %-32s value %.15g target %.15g tol %.3g residual %.3e %s\n",
                   c.name.c_str(), c.value, c.target, c.tol, std::abs(c.value - c.target),
                   c.pass ? "pass" : "FAIL");
    }
    rep << (ok ? "validation passed\n" : "validation FAILED\n");
    if (outPath.empty()) {
        std::cout << rep.str();
    } else {
        std::ofstream out(outPath);
        if (!out) throw ParseError("cannot write report: " + outPath);
        out << rep.str();
        std::cout << (ok ? "validation passed\n" : "validation FAILED\n");
    }
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------------------
// curves

int cmd_curves(const Config& cfg, const std::string& outDir) {
    const std::string dir = outDir.empty() ? "." : outDir;
    auto open = [&](const std::string& name) {
        std::ofstream out(dir + "/" + name);
        if (!out) throw ParseError("cannot write " + dir + "/" + name);
        return out;
    };
    const auto head = provenance(cfg, "curves");

    SpectrumConstants sc = derived_constants();
    const double zc = critical_zeta(sc);

    {
        auto out = open("spectrum.csv");
        for (const auto& line : head) out << "# " << line << "\n";
        out << "zeta,kappa,E\n";
        const int n = static_cast<int>(cfg.get_int("curves.nkappa", 512));
        for (double zeta : cfg.get_doubles("curves.zetas", {1e-4, 1e-3, 1e-2})) {
            SpectrumModel model(sc, solve_transitions(sc, zeta));
            const double lo = model.transitions().kappa1 / 30.0;
            const double hi = model.transitions().kappa2 * 30.0;
            for (int i = 0; i < n; ++i) {
                const double k = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
                out << fmt("%.10g,%.10g,%.10g\n", zeta, k, model.energy(k));
            }
        }
    }
    {
        auto out = open("transitions.csv");
        for (const auto& line : head) out << "# " << line << "\n";
        out << "zeta,kappa1,kappa2,ratio\n";
        const int n = static_cast<int>(cfg.get_int("curves.nzeta", 200));
        const double zLo = cfg.get_double("curves.zetaMin", 1e-5);
        const double zHi = cfg.get_double("curves.zetaMaxFactor", 0.99) * zc;
        for (int i = 0; i < n; ++i) {
            const double zeta = zLo * std::pow(zHi / zLo, static_cast<double>(i) / (n - 1));
            TransitionWaveNumbers t = solve_transitions(sc, zeta);
            out << fmt("%.10g,%.10g,%.10g,%.10g\n", zeta, t.kappa1, t.kappa2,
                       t.kappa2 / t.kappa1);
        }
    }
    {
        auto out = open("kernel.csv");
        for (const auto& line : head) out << "# " << line << "\n";
        out << "s,eta,Ct\n";
        const TemporalKernel kern(cfg.get_double("temporal.tE", 0.3));
        const int n = static_cast<int>(cfg.get_int("curves.ns", 2001));
        const double hi = 2.0 * kern.support();
        for (int i = 0; i < n; ++i) {
            const double s = -hi + 2.0 * hi * static_cast<double>(i) / (n - 1);
            out << fmt("%.10g,%.10g,%.10g\n", s, kern.eta(s), kern.correlation(s));
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const Config& cfg, const std::string& outPath, const std::string& format) {
    RunSetup run = build_run(cfg);
    const int n1 = static_cast<int>(cfg.get_int("lattice.n1", 8));
    const int n2 = static_cast<int>(cfg.get_int("lattice.n2", 8));
    const int n3 = static_cast<int>(cfg.get_int("lattice.n3", 8));
    const Vec3 origin = get_vec(cfg, "lattice.origin", Vec3{});
    const Vec3 spacing = get_vec(cfg, "lattice.spacing", Vec3{0.1, 0.1, 0.1});
    const double t = cfg.get_double("lattice.t", 0.0);
    const bool withGrad = cfg.get_bool("lattice.gradient", false);

    FieldRealization field = make_factory(run)(run.seed);
    const long long nNodes = static_cast<long long>(n1) * n2 * n3;
    std::vector<Vec3> u(nNodes);
    std::vector<Mat3> g(withGrad ? nNodes : 0);
    parallel_for(nNodes, run.threads, [&](long long i) {
        const int i3 = static_cast<int>(i % n3);
        const int i2 = static_cast<int>((i / n3) % n2);
        const int i1 = static_cast<int>(i / (static_cast<long long>(n2) * n3));
        const Vec3 x{origin.x + spacing.x * i1, origin.y + spacing.y * i2,
                     origin.z + spacing.z * i3};
        if (withGrad) {
            field.velocity_and_gradient(x, t, u[i], g[i]);
        } else {
            u[i] = field.velocity(x, t);
        }
    });

    std::ofstream out(outPath.empty() ? "field.csv" : outPath);
    if (!out) throw ParseError("cannot write output: " + outPath);

    if (format == "vtk") {
        out << "# vtk DataFile Version 3.0\n";
        out << fmt("%s sample seed=%llu delta=%.9g z=%.9g cfg=0x%016llx\n", kVersion,
                   static_cast<unsigned long long>(run.seed), run.numbers.delta, run.numbers.z,
                   static_cast<unsigned long long>(cfg.hash()));
        out << "ASCII\nDATASET STRUCTURED_POINTS\n";
        out << fmt("DIMENSIONS %d %d %d\n", n3, n2, n1);  // x3 fastest in our ordering
        out << fmt("ORIGIN %.17g %.17g %.17g\n", origin.z, origin.y, origin.x);
        out << fmt("SPACING %.17g %.17g %.17g\n", spacing.z, spacing.y, spacing.x);
        out << fmt("POINT_DATA %lld\nVECTORS uprime double\n", nNodes);
        for (long long i = 0; i < nNodes; ++i)
            out << fmt("%.17g %.17g %.17g\n", u[i].x, u[i].y, u[i].z);
        if (withGrad) {
            out << "TENSORS graduprime double\n";
            for (long long i = 0; i < nNodes; ++i) {
                for (int r = 0; r < 3; ++r)
                    out << fmt("%.17g %.17g %.17g\n", g[i](r, 0), g[i](r, 1), g[i](r, 2));
                out << "\n";
            }
        }
    } else {
        for (const auto& line : provenance(cfg, "sample")) out << "# " << line << "\n";
        out << fmt("# seed = %llu\n# delta = %.17g\n# z = %.17g\n",
                   static_cast<unsigned long long>(run.seed), run.numbers.delta, run.numbers.z);
        out << "x1,x2,x3,t,u1,u2,u3";
        if (withGrad)
            out << ",g11,g12,g13,g21,g22,g23,g31,g32,g33";
        out << "\n";
        for (long long i = 0; i < nNodes; ++i) {
            const int i3 = static_cast<int>(i % n3);
            const int i2 = static_cast<int>((i / n3) % n2);
            const int i1 = static_cast<int>(i / (static_cast<long long>(n2) * n3));
            out << fmt("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                       origin.x + spacing.x * i1, origin.y + spacing.y * i2,
                       origin.z + spacing.z * i3, t, u[i].x, u[i].y, u[i].z);
            if (withGrad)
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) out << fmt(",%.17g", g[i](r, c));
            out << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// estimate

int cmd_estimate(const Config& cfg, const std::string& outPath) {
    RunSetup run = build_run(cfg);
    RealizationFactory factory = make_factory(run);
    EstimatorOptions opt;
    opt.threads = run.threads;

    const Vec3 x = get_vec(cfg, "estimate.point", Vec3{});
    const double t = cfg.get_double("estimate.time", 0.0);
    const int nSeeds = static_cast<int>(cfg.get_int("estimate.nseeds", 2000));
    const double zMax = cfg.get_double("estimate.zmax", 4.0);

    std::string suites = cfg.get_string("estimate.suites", "onepoint dissipation divergence");
    for (char& c : suites)
        if (c == ',') c = ' ';
    std::istringstream ss(suites);
    std::vector<EstimatorReport> reports;

    std::string suite;
    while (ss >> suite) {
        if (suite == "onepoint") {
            OnePointStats st = one_point_stats(factory, x, t, nSeeds, run.seed, opt);
            reports.push_back(st.mean);
            reports.push_back(st.energy);
            reports.push_back(st.tensor);
        } else if (suite == "dissipation") {
            reports.push_back(dissipation_stats(factory, x, t, nSeeds, run.seed, opt));
        } else if (suite == "divergence") {
            reports.push_back(divergence_stats(factory, x, t, nSeeds, run.seed, opt));
        } else if (suite == "twopoint") {
            const FieldRealization probe = factory(run.seed);
            const FlowState fs = probe.flow().state(x, t);
            const ScalingEval sg = scaling_at(fs);
            const double lx = run.numbers.delta * sg.sigmaX;
            const double lt = run.numbers.delta * sg.sigmaT;
            const Vec3 lags[3] = {{0.5 * lx, 0, 0}, {0, 0, 0}, {0.3 * lx, 0.2 * lx, 0}};
            const double tlags[3] = {0.0, 0.4 * lt, 0.2 * lt};
            const bool homogeneousTarget =
                run.variant == Variant::HomogeneousFrequency &&
                run.aniso == AnisotropySource::Identity;
            for (int i = 0; i < 3; ++i) {
                std::vector<double> target;
                if (homogeneousTarget) {
                    Mat3 c = covariance_target_homogeneous(probe, x + lags[i], t + tlags[i], x, t);
                    for (int q = 0; q < 9; ++q) target.push_back(c(q / 3, q % 3));
                }
                EstimatorReport rep =
                    two_point_cov(factory, x + lags[i], t + tlags[i], x, t, nSeeds, run.seed,
                                  target.empty() ? nullptr : &target, opt);
                rep.name = fmt("two_point_cov_%d", i);
                reports.push_back(rep);
            }
        } else if (suite == "ergodic") {
            ErgodicAverageSpec spec;
            spec.x = x;
            spec.t = t;
            spec.timeRadius = cfg.get_double("ergodic.timeRadius", 0.0);
            spec.spaceRadius = cfg.get_double("ergodic.spaceRadius", 0.0);
            spec.nTimeNodes = static_cast<int>(cfg.get_int("ergodic.nTimeNodes", 9));
            spec.nSpaceNodes = static_cast<int>(cfg.get_int("ergodic.nSpaceNodes", 5));
            spec.followMeanFlow = cfg.get_bool("ergodic.followMeanFlow", true);
            FieldRealization field = factory(run.seed);
            EstimatorReport rep = ergodic_average(field, spec, ErgodicQuantity::Energy, opt);
            // informational target: the z-score convention does not apply to
            // a single-realization space-time average, so none is attached
            rep.target = {field.flow().state(x, t).k};
            reports.push_back(rep);
        } else if (suite == "lagrangian") {
            if (run.variant != Variant::HomogeneousFrequency)
                throw ParseError("lagrangian suite requires sampler.variant = homogeneous");
            LagrangianOptions lo;
            lo.nParticles = static_cast<int>(cfg.get_int("lagrangian.particles", 2000));
            lo.horizon = cfg.get_double("lagrangian.horizon", 3.0);
            lo.dt = cfg.get_double("lagrangian.dt",
                                   std::min(0.02, run.kernel.tE() / 20.0));
            lo.batches = static_cast<int>(cfg.get_int("lagrangian.batches", 20));
            reports.push_back(lagrangian_timescale(factory, lo, run.seed, opt));
        } else if (suite == "deltasweep") {
            std::vector<double> deltas =
                cfg.get_doubles("deltasweep.deltas", {0.1, 0.05, 0.025});
            const int nSweep = static_cast<int>(cfg.get_int("deltasweep.nseeds", nSeeds));
            std::vector<double> divEst;
            for (double d : deltas) {
                RunSetup sub = run;
                sub.numbers.delta = d;
                sub.sampler.sliceSpacing = 0.0;  // rescale with delta
                RealizationFactory f = make_factory(sub);
                EstimatorReport diss = dissipation_stats(f, x, t, nSweep, run.seed, opt);
                diss.name = fmt("dissipation_delta_%g", d);
                reports.push_back(diss);
                EstimatorReport div = divergence_stats(f, x, t, nSweep, run.seed, opt);
                div.name = fmt("divergence_delta_%g", d);
                divEst.push_back(div.scalar());
                reports.push_back(div);
            }
            for (std::size_t i = 0; i + 1 < divEst.size(); ++i) {
                EstimatorReport ratio;
                ratio.name = fmt("divergence_ratio_%g_over_%g", deltas[i], deltas[i + 1]);
                ratio.estimate = {divEst[i] / divEst[i + 1]};
                ratio.stdError = {0.0};
                ratio.nSamples = nSweep;
                reports.push_back(ratio);
            }
        } else {
            throw ParseError("unknown estimator suite: " + suite);
        }
    }

    bool ok = true;
    for (const auto& r : reports)
        if (!r.zScore.empty() && r.max_abs_z() > zMax) ok = false;

    auto head = provenance(cfg, "estimate");
    head.push_back(ok ? "status: pass" : "status: FAIL");
    if (outPath.empty()) {
        write_reports(std::cout, head, reports);
    } else {
        write_reports_file(outPath, head, reports);
        std::cout << (ok ? "estimate suites passed\n" : "estimate suites FAILED\n");
    }
    return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) + " - inhomogeneous turbulence reconstruction"};
    app.require_subcommand(1);

    std::string configPath, outPath, format = "csv";
    long long seedFlag = -1;
    int threadsFlag = -1;
    app.add_option("--config", configPath, "key-value configuration file");
    app.add_option("--seed", seedFlag, "master seed (overrides run.seed)");
    app.add_option("--threads", threadsFlag, "worker threads (overrides run.threads)");
    app.add_option("--out", outPath, "output file (or directory for curves)");
    app.add_option("--format", format, "sample output format: csv or vtk")
        ->check(CLI::IsMember({"csv", "vtk"}));

    auto* validate = app.add_subcommand("validate", "check closure identities");
    auto* curves = app.add_subcommand("curves", "emit spectrum/kernel data tables");
    auto* sample = app.add_subcommand("sample", "evaluate one realization on a lattice");
    auto* estimate = app.add_subcommand("estimate", "run Monte Carlo estimator suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        turb::Config cfg;
        if (!configPath.empty()) cfg = turb::Config::from_file(configPath);
        if (seedFlag >= 0) cfg.set("run.seed", std::to_string(seedFlag));
        if (threadsFlag > 0) cfg.set("run.threads", std::to_string(threadsFlag));

        if (*validate) return cmd_validate(cfg, outPath);
        if (*curves) return cmd_curves(cfg, outPath);
        if (*sample) return cmd_sample(cfg, outPath, format);
        if (*estimate) return cmd_estimate(cfg, outPath);
        return 1;
    } catch (const turb::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const turb::ZetaOutOfRange& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const turb::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
