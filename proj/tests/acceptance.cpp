// Prints one PASS/FAIL line per acceptance criterion. Usage: mixkin_acceptance [criterion ids...]
#include "mixkin/collision.hpp"
#include "mixkin/experiments.hpp"
#include "mixkin/fluid.hpp"
#include "mixkin/kernel_estimates.hpp"
#include "mixkin/linearized.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace mixkin;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned.
constexpr double kConservation = 1e-6;
constexpr double kConservationSeconds = 120.0;
constexpr double kAnnihilationOrder = 2.0;
constexpr double kEquilibriumEntropy = 1e-8;
constexpr double kEntropyDecrease = -1e-4;
constexpr int kEntropyStates = 20;
constexpr double kSymmetry = 1e-8;
constexpr double kKernelLeak = 0.05;
constexpr double kGram = 1e-6;
constexpr double kCoercivityDrift = 0.20;
constexpr int kBoundSamples = 20000;
constexpr double kKernelSeconds = 600.0;
constexpr double kJacobian = 1e-6;
constexpr int kJacobianConfigs = 100;
constexpr double kAcoustic = 1e-10;
constexpr double kLinearizationSeconds = 300.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Line {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double max_of(const std::array<double, 6>& a) { return *std::max_element(a.begin(), a.end()); }

DistributionField bimaxwell(const SpeciesPair& s, const VelocityGrid& g, const MaxwellParams& pa,
                            const MaxwellParams& pb) {
    DistributionField F;
    F.A = maxwellian_field(pa, s.m[0], g);
    F.B = maxwellian_field(pb, s.m[1], g);
    return F;
}

Line conservation() {
    const SpeciesPair s;
    const VelocityGrid g(6.0, 16);
    const auto t0 = Clock::now();
    const CollisionOperator op(s, g, lebedev_like_rule(6));
    const auto F = seeded_nonequilibrium(s, g, 1);
    const auto Q = op.collide(F);
    const double secs = seconds_since(t0);
    const double d = max_of(op.invariant_defects(Q));
    const double raw = max_of(op.invariant_defects(op.collide_raw(F)));
    return {d <= kConservation && secs < kConservationSeconds,
            fmt("max invariant defect %.2e (tol %.0e), raw term %.2e, %.1f s (limit %.0f s)", d, kConservation, raw,
                secs, kConservationSeconds)};
}

Line annihilation() {
    const SpeciesPair s;
    const double R = 3.0;
    auto sups = [&](int N) {
        const VelocityGrid g(R, N);
        const CollisionOperator op(s, g, lebedev_like_rule(6));
        const auto mu = bimaxwell(s, g, {}, {});
        const auto q = op.collide_pairs(mu);
        std::array<double, 4> out{};
        for (int p = 0; p < 4; ++p)
            for (double x : q[p]) out[p] = std::max(out[p], std::abs(x));
        return out;
    };
    const auto a = sups(12), b = sups(24);
    double worst = 1e300;
    std::string orders;
    const char* names[4] = {"AA", "AB", "BA", "BB"};
    for (int p = 0; p < 4; ++p) {
        const double o = std::log2(a[p] / b[p]);
        worst = std::min(worst, o);
        orders += fmt("%s %.2f ", names[p], o);
    }
    return {worst >= kAnnihilationOrder, fmt("sup-error orders N=12->24 at R=%.0f: %s(need >= %.1f)", R, orders.c_str(),
                                             kAnnihilationOrder)};
}

Line h_theorem() {
    const SpeciesPair s;
    const VelocityGrid g(5.0, 12);
    const CollisionOperator op(s, g, lebedev_like_rule(6));
    double eq = 0.0;
    for (const auto& [u, th] : std::vector<std::pair<Vec3, double>>{
             {{0.0, 0.0, 0.0}, 1.0}, {{0.3, -0.2, 0.1}, 1.2}, {{-0.5, 0.0, 0.2}, 0.8}}) {
        const auto F = bimaxwell(s, g, {1.0, u, th}, {0.7, u, th});
        eq = std::max(eq, std::abs(op.entropy_production(F)));
    }
    double worst = -1e300;
    for (int k = 0; k < kEntropyStates; ++k)
        worst = std::max(worst, op.entropy_production(seeded_nonequilibrium(s, g, 100 + k)));
    return {eq <= kEquilibriumEntropy && worst < kEntropyDecrease,
            fmt("bi-Maxwellian |D| max %.2e (tol %.0e); %d seeded states max D %.3e (need < %.0e); N=12, R=5", eq,
                kEquilibriumEntropy, kEntropyStates, worst, kEntropyDecrease)};
}

Line linearized() {
    const SpeciesPair s;
    const BiMaxwell bg;
    const auto rule = lebedev_like_rule(6);
    auto run = [&](int N, double R, double& sym, double& leak) {
        const VelocityGrid g(R, N);
        const auto L = assemble_L(bg, s, g, rule);
        const auto basis = kernel_basis(bg, s, g);
        sym = L.symmetry_defect();
        leak = 0.0;
        for (int i = 0; i < 6; ++i) {
            const auto LX = L.apply(basis.X[i]);
            double a = 0.0, b = 0.0;
            for (std::size_t k = 0; k < LX.size(); ++k) {
                a += LX[k] * LX[k];
                b += basis.X[i][k] * basis.X[i][k];
            }
            leak = std::max(leak, std::sqrt(a / b));
        }
        return coercivity(L, basis).c0;
    };
    double sym16 = 0, leak16 = 0, sym12 = 0, leak12 = 0;
    const double c12 = run(12, 5.0, sym12, leak12);
    const double c16 = run(16, 5.0, sym16, leak16);
    const double drift = std::abs(c16 - c12) / c12;

    auto gram_defect = [&](int N, double R) {
        const auto basis = kernel_basis(bg, s, VelocityGrid(R, N));
        double e = 0.0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) e = std::max(e, std::abs(basis.gram(i, j) - (i == j ? 1.0 : 0.0)));
        return e;
    };
    const double g24 = gram_defect(24, 7.0), g16 = gram_defect(16, 5.0);

    const bool items = sym16 <= kSymmetry && leak16 <= kKernelLeak && g24 <= kGram && c12 > 0 && c16 > 0 &&
                       drift <= kCoercivityDrift;
    // The N=24 leg of the kernel-leak halving is not run (dense L at N=24 does not fit), so the criterion cannot pass.
    return {false, fmt("symmetry %.1e (tol %.0e); |LX|/|X| %.1e at N=16 (tol %.2f), N=24 halving NOT RUN; Gram "
                       "%.1e at N=24,R=7 (tol %.0e), %.1e at N=16,R=5; c0 %.4f (N=12) %.4f (N=16), change %.1f%% "
                       "(tol %.0f%%); other items %s",
                       sym16, kSymmetry, leak16, kKernelLeak, g24, kGram, g16, c12, c16, 100 * drift,
                       100 * kCoercivityDrift, items ? "pass" : "FAIL")};
}

Line kernel_bounds() {
    const auto t0 = Clock::now();
    bool bounds = true, decay = true;
    std::string worst_c, slopes;
    for (double gamma : {1.0, -1.0}) {
        SpeciesPair s;
        s.gamma = gamma;
        const auto f = default_kernel_frame(s, 0.1);
        double cmin = 1e300;
        auto take = [&](const BoundReport& r) {
            bounds = bounds && r.pass && std::isfinite(r.max_ratio);
            if (!r.fitted_exponents.empty()) cmin = std::min(cmin, r.fitted_exponents[0]);
        };
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                take(check_bound_M1(f, a, b, kBoundSamples));
                take(check_bound_typical(f, a, b, kBoundSamples));
            }
        take(check_bound_hybrid_cross(f, 0, 1, kBoundSamples));
        take(check_bound_hybrid_cross(f, 1, 0, kBoundSamples));
        take(check_bound_hybrid_equal(f, 0, kBoundSamples));
        take(check_bound_hybrid_equal(f, 1, kBoundSamples));
        worst_c += fmt("gamma=%g min c %.3f; ", gamma, cmin);
        for (const auto& [kind, a, b] : std::vector<std::array<int, 3>>{{0, 0, 1}, {1, 0, 0}}) {
            const auto r = check_integrated_decay(f, kind, a, b);
            decay = decay && r.pass;
            slopes += fmt("%.2f ", r.fitted_exponents[0]);
        }
        slopes += fmt("(want %g +- 0.3); ", gamma - 2.0);
    }
    const double secs = seconds_since(t0);
    return {bounds && decay && secs < kKernelSeconds,
            fmt("bound reports %s (%s%d samples); integrated-decay slopes %s%s; %.0f s (limit %.0f s)",
                bounds ? "pass" : "FAIL", worst_c.c_str(), kBoundSamples, slopes.c_str(), decay ? "pass" : "FAIL",
                secs, kKernelSeconds)};
}

Line singular() {
    bool pass = true;
    std::string out;
    for (double gamma : {1.0, -1.0}) {
        SpeciesPair s;
        s.gamma = gamma;
        const auto r = check_singular_scaling(default_kernel_frame(s, 0.1), {0.05, 0.1, 0.2, 0.4},
                                              lebedev_like_rule(6), 0.2);
        pass = pass && r.pass;
        out += fmt("gamma=%g slope %.3f (want %.1f +- 0.2); ", gamma, r.fitted_exponents[0], 3.0 + gamma);
    }
    return {pass, out};
}

Line jacobian() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    std::normal_distribution<double> Z;
    double worst = 0.0;
    const std::array<std::pair<double, double>, 3> masses{{{1.0, 2.0}, {2.0, 1.0}, {1.0, 5.0}}};
    for (int k = 0; k < kJacobianConfigs; ++k) {
        const auto [ma, mb] = masses[k % 3];
        Vec3 w{Z(rng), Z(rng), Z(rng)};
        const double n = std::sqrt(norm2(w));
        for (auto& x : w) x /= n;
        const Vec3 v{U(rng), U(rng), U(rng)}, vs{U(rng), U(rng), U(rng)};
        worst = std::max(worst, std::abs(jacobian_cross_fd(v, vs, w, ma, mb) - (mb - ma) / (ma + mb)));
    }
    return {worst <= kJacobian, fmt("max |det - (mb-ma)/(ma+mb)| %.2e over %d configurations (tol %.0e)", worst,
                                    kJacobianConfigs, kJacobian)};
}

Line acoustic() {
    const SpatialGrid g(1.0, 256, 1);
    const std::array<double, 2> m{1.0, 2.0};
    AcousticState a(g, m);
    const auto fl = default_fluctuation();
    for (int i = 0; i < g.M(); ++i) {
        const auto v = fl(Vec3{g.x(i), 0.0, 0.0});
        a.sA[i] = v[0];
        a.sB[i] = v[1];
        for (int c = 0; c < 3; ++c) a.u[c][i] = v[2 + c];
        a.theta[i] = v[5];
    }
    double energy = 0.0, vort = 0.0;
    const auto w0 = acoustic_vorticity(a);
    for (int k = 0; k <= 50; ++k) {
        const auto b = acoustic_solve(a, 0.1 * k);
        for (int l = 0; l <= 2; ++l) {
            const double e0 = acoustic_energy(a, l);
            energy = std::max(energy, std::abs(acoustic_energy(b, l) - e0) / e0);
        }
        const auto w = acoustic_vorticity(b);
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < w[c].size(); ++i) vort = std::max(vort, std::abs(w[c][i] - w0[c][i]));
    }
    const double disp = acoustic_dispersion_defect(g, m);
    return {energy <= kAcoustic && vort <= kAcoustic && disp <= kAcoustic,
            fmt("energy drift %.1e over t in [0,5] (orders 0..2), vorticity change %.1e, dispersion defect %.1e (tol "
                "%.0e)",
                energy, vort, disp, kAcoustic)};
}

Line linearization_rate() {
    const StudySetup s;
    const auto t0 = Clock::now();
    const auto r = acoustic_linearization_rate(s, {0.1, 0.05, 0.025}, 0.5);
    const double secs = seconds_since(t0);
    return {r.pass && secs < kLinearizationSeconds,
            fmt("sup slope %.3f +- %.3f (want 2 +- 0.2), L2 slope %.3f; M=256, t=0.5; %.0f s (limit %.0f s)",
                r.fit_sup.slope, r.fit_sup.half_width, r.fit_l2.slope, secs, kLinearizationSeconds)};
}

Line taylor_rate() {
    const StudySetup s;
    const auto r = maxwellian_taylor_rate(s, {0.1, 0.05, 0.025}, 0.5);
    return {r.pass, fmt("L2 slope %.3f, sup slope %.3f (want 2 +- 0.1 in both)", r.fit_l2.slope, r.fit_sup.slope)};
}

Line hilbert_order() {
    const StudySetup s;
    const auto h = hydrodynamic_residual_rate(s, {0.04, 0.02, 0.01}, 0.1, 0.01);
    return {h.K1.pass && h.ratio_pass,
            fmt("K=1 slope %.3f (want >= 0.8), K=0 slope %.3f; K0/K1 at eps=0.01 %.1f (want > 10)", h.K1.fit_l2.slope,
                h.K0.fit_l2.slope, h.ratio)};
}

Line acoustic_limit() {
    const StudySetup s;
    const auto r = acoustic_limit_proxy_rate(s, {0.04, 0.01, 0.0025}, [](double e) { return std::sqrt(e); });
    const auto w = acoustic_limit_delta_sweep(s, 0.01, {0.02, 0.05, 0.1, 0.2, 0.4});
    std::string sweep;
    for (double e : w.error_l2) sweep += fmt("%.2e ", e);
    return {r.pass && w.pass, fmt("delta=sqrt(eps) slopes L2 %.3f sup %.3f (want 0.5 +- 0.1) %s; sweep L2 [%s] "
                                  "argmin %.2f (want within factor 2 of %.2f) %s",
                                  r.fit_l2.slope, r.fit_sup.slope, r.pass ? "pass" : "FAIL", sweep.c_str(),
                                  w.argmin_l2, w.target, w.pass ? "pass" : "FAIL")};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream f(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

Line reproducibility() {
    const fs::path root = fs::temp_directory_path() / "mixkin_acceptance_repro";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "config.json";
    std::ofstream(cfg) << R"({"species": {"m_A": 1, "m_B": 2, "gamma": 1},
  "velocity": {"R": 4, "N": 8}, "spatial": {"M": 64}, "collide": {"states": 3}, "kernels": {"samples": 2000},
  "study": {"hilbert_N": 8, "hilbert_R": 4, "sampled_cells": 2, "t_end": 0.2, "residual_eps": [0.04, 0.02, 0.01]}, "seed": 7})";
    std::size_t files = 0;
    bool same = true;
    std::string cmds;
    for (const char* cmd : {"collide", "kernels", "euler", "acoustic", "limits"}) {
        // Both runs write to the same path so the manifests are comparable too.
        const fs::path out = root / cmd;
        std::array<std::map<std::string, std::string>, 2> trees;
        for (auto& t : trees) {
            fs::remove_all(out);
            const std::string line = std::string(MIXKIN_TOOL_PATH) + " --config " + cfg.string() + " --out " +
                                     out.string() + " " + cmd + " > /dev/null 2>&1";
            const int rc = std::system(line.c_str());
            (void)rc;  // study failures still produce artifacts
            t = read_tree(out);
        }
        files += trees[0].size();
        const bool ok = !trees[0].empty() && trees[0] == trees[1];
        same = same && ok;
        cmds += fmt("%s %s; ", cmd, ok ? "identical" : "DIFFER");
    }
    return {same, fmt("%zu files per run across 5 subcommands: %s", files, cmds.c_str())};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Line()>>> criteria{
        {"conservation", conservation},
        {"equilibrium annihilation", annihilation},
        {"H-theorem", h_theorem},
        {"linearized operator", linearized},
        {"kernel bounds", kernel_bounds},
        {"singular-part scaling", singular},
        {"cross-species Jacobian", jacobian},
        {"acoustic solver", acoustic},
        {"linearization rate", linearization_rate},
        {"Maxwellian Taylor rate", taylor_rate},
        {"Hilbert residual order", hilbert_order},
        {"acoustic-limit proxy", acoustic_limit},
        {"reproducibility", reproducibility},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!pick.empty() && !pick.count(id)) continue;
        const auto t0 = Clock::now();
        Line l;
        try {
            l = criteria[i].second();
        } catch (const std::exception& e) {
            l = {false, std::string("error: ") + e.what()};
        }
        std::printf("%-4s %2d %-26s %s [%.0f s]\n", l.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                    l.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
        failed += !l.pass;
    }
    return failed == 0 ? 0 : 1;
}
