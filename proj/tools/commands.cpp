#include "commands.hpp"

#include "snapshot.hpp"

#include "mixkin/collision.hpp"
#include "mixkin/errors.hpp"
#include "mixkin/experiments.hpp"
#include "mixkin/fluid.hpp"
#include "mixkin/kernel_estimates.hpp"
#include "mixkin/linearized.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

namespace mixkin::cli {

namespace {

using nlohmann::json;

constexpr double kConservationTol = 1e-6;
constexpr double kEquilibriumEntropyTol = 1e-8;
constexpr double kEntropyDecrease = -1e-4;
constexpr double kSymmetryTol = 1e-8;
constexpr double kKernelLeakTol = 0.05;
constexpr double kJacobianTol = 1e-6;
constexpr double kFluidConservationTol = 1e-10;
constexpr double kAcousticTol = 1e-10;

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << j.dump(2) << '\n';
}

double max_of(const std::array<double, 6>& a) {
    double m = 0.0;
    for (double x : a) m = std::max(m, x);
    return m;
}

double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double l2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double entropy_of(const DistributionField& Qv, const DistributionField& F, const VelocityGrid& g) {
    std::vector<double> buf(2 * g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        buf[k] = Qv.A[k] * std::log(F.A[k]);
        buf[g.size() + k] = Qv.B[k] * std::log(F.B[k]);
    }
    return g.weight() * pairwise_sum(buf);
}

DistributionField bimaxwell(const SpeciesPair& s, const VelocityGrid& g, const Vec3& u, double theta) {
    DistributionField F;
    F.A = maxwellian_field(MaxwellParams{1.0, u, theta}, s.m[0], g);
    F.B = maxwellian_field(MaxwellParams{1.0, u, theta}, s.m[1], g);
    return F;
}

CommandResult run_collide(const RunConfig& c, const std::string& out) {
    const VelocityGrid g(c.R, c.N);
    const CollisionOperator op(c.species, g, lebedev_like_rule(c.angular_order));
    json rep = {{"velocity_grid", {{"R", c.R}, {"N", c.N}}}, {"angular_order", c.angular_order}};

    // Equilibrium: raw pair terms on the centered bi-Maxwellian.
    const auto mu = bimaxwell(c.species, g, {0.0, 0.0, 0.0}, 1.0);
    const auto pairs = op.collide_pairs(mu);
    const char* names[4] = {"AA", "AB", "BA", "BB"};
    json eq = json::object();
    for (int p = 0; p < 4; ++p) eq[names[p]] = sup_abs(pairs[p]);
    rep["equilibrium_sup"] = eq;

    json eq_entropy = json::array();
    bool pass = true;
    for (const auto& [u, th] : std::vector<std::pair<Vec3, double>>{{{0.0, 0.0, 0.0}, 1.0}, {{0.3, -0.2, 0.1}, 1.2}}) {
        const auto F = bimaxwell(c.species, g, u, th);
        const double e = op.entropy_production(F);
        eq_entropy.push_back({{"u", u}, {"theta", th}, {"production", e}});
        pass = pass && std::abs(e) <= kEquilibriumEntropyTol;
    }
    rep["equilibrium_entropy"] = eq_entropy;

    json states = json::array();
    double worst_defect = 0.0, worst_entropy = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.collide_states; ++k) {
        const auto F = seeded_nonequilibrium(c.species, g, c.seed + static_cast<std::uint64_t>(k));
        const auto Qv = op.collide(F);
        const double defect = max_of(op.invariant_defects(Qv));
        const double e = entropy_of(Qv, F, g);
        json st = {{"seed", c.seed + k}, {"invariant_defect", defect}, {"entropy_production", e}};
        if (k == 0) st["raw_invariant_defect"] = max_of(op.invariant_defects(op.collide_raw(F)));
        states.push_back(st);
        worst_defect = std::max(worst_defect, defect);
        worst_entropy = std::max(worst_entropy, e);
    }
    rep["states"] = states;
    rep["max_invariant_defect"] = worst_defect;
    rep["max_entropy_production"] = worst_entropy;
    rep["tolerances"] = {{"conservation", kConservationTol},
                         {"equilibrium_entropy", kEquilibriumEntropyTol},
                         {"nonequilibrium_entropy_below", kEntropyDecrease}};
    pass = pass && worst_defect <= kConservationTol && worst_entropy < kEntropyDecrease;
    rep["pass"] = pass;
    write_json(out + "/collide.json", rep);
    return {rep, pass};
}

CommandResult run_spectrum(const RunConfig& c, const std::string& out) {
    const VelocityGrid g(c.R, c.N);
    const BiMaxwell bg;
    const auto t0 = std::chrono::steady_clock::now();
    const auto L = assemble_L(bg, c.species, g, lebedev_like_rule(c.angular_order));
    const double t_assembly = elapsed(t0);
    const auto basis = kernel_basis(bg, c.species, g);

    json leak = json::array();
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) {
        const auto LX = L.apply(basis.X[i]);
        const double r = l2(LX) / l2(basis.X[i]);
        leak.push_back(r);
        worst = std::max(worst, r);
    }
    double gram_err = 0.0;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) gram_err = std::max(gram_err, std::abs(basis.gram(i, j) - (i == j ? 1.0 : 0.0)));
    const auto co = coercivity(L, basis);
    const double sym = L.symmetry_defect();

    json rep = {{"velocity_grid", {{"R", c.R}, {"N", c.N}}},
                {"dim", L.dim()},
                {"symmetry_defect", sym},
                {"kernel_leak", leak},
                {"max_kernel_leak", worst},
                // Measures the velocity quadrature of the analytic basis; not a pass condition.
                {"gram_defect", gram_err},
                {"coercivity", {{"c0", co.c0}, {"residual", co.residual}, {"iterations", co.iterations}}},
                {"tolerances", {{"symmetry", kSymmetryTol}, {"kernel_leak", kKernelLeakTol}}}};
    if (c.record_timings) rep["assembly_s"] = t_assembly;
    if (c.export_operator) {
        export_operator(L, out + "/operator");
        rep["operator"] = "operator.bin";
    }
    const bool pass = sym <= kSymmetryTol && worst <= kKernelLeakTol && co.c0 > 0.0;
    rep["pass"] = pass;
    write_json(out + "/spectrum.json", rep);
    return {rep, pass};
}

KernelFrame kernel_frame_of(const RunConfig& c) {
    auto f = default_kernel_frame(c.species, c.cutoff_m);
    f.global.l = c.frame_l;
    if (c.q_tilde) f.global.q_tilde = *c.q_tilde;
    f.validate();
    return f;
}

CommandResult run_kernels(const RunConfig& c, const std::string& out) {
    const auto f = kernel_frame_of(c);
    const int n = c.kernel_samples;
    json bounds = json::array();
    json notes = json::array();
    bool pass = true;
    auto add = [&](const BoundReport& r, json label) {
        json j = r.to_json();
        j["pair"] = std::move(label);
        bounds.push_back(j);
        pass = pass && r.pass;
    };
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            add(check_bound_M1(f, a, b, n), {a, b});
            add(check_bound_typical(f, a, b, n), {a, b});
        }
    if (c.species.m[0] == c.species.m[1]) {
        notes.push_back("equal masses: the cross-species hybrid kernel degenerates and its bound is skipped");
    } else {
        add(check_bound_hybrid_cross(f, 0, 1, n), {0, 1});
        add(check_bound_hybrid_cross(f, 1, 0, n), {1, 0});
    }
    for (int a = 0; a < 2; ++a) add(check_bound_hybrid_equal(f, a, n), {a, a});

    json decay = json::array();
    for (const auto& [kind, a, b] : std::vector<std::array<int, 3>>{{0, 0, 1}, {1, 0, 0}}) {
        const auto r = check_integrated_decay(f, kind, a, b);
        json j = r.to_json();
        j["pair"] = {a, b};
        decay.push_back(j);
        pass = pass && r.pass;
    }
    const auto sing = check_singular_scaling(f, c.kernel_ms, lebedev_like_rule(c.angular_order));
    pass = pass && sing.pass;

    // Cross-species Jacobian at random (v, v*, omega).
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    std::normal_distribution<double> Z(0.0, 1.0);
    const double ma = c.species.m[0], mb = c.species.m[1];
    double jac_err = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec3 v{U(rng), U(rng), U(rng)}, vs{U(rng), U(rng), U(rng)};
        Vec3 w{Z(rng), Z(rng), Z(rng)};
        const double nw = std::sqrt(norm2(w));
        for (auto& x : w) x /= nw;
        const double expect = (mb - ma) / (ma + mb);
        jac_err = std::max(jac_err, std::abs(jacobian_cross_fd(v, vs, w, ma, mb) - expect));
    }
    const bool jac_pass = jac_err <= kJacobianTol;
    pass = pass && jac_pass;

    json rep = {{"samples", n},
                {"bounds", bounds},
                {"integrated_decay", decay},
                {"singular_scaling", sing.to_json()},
                {"jacobian", {{"configurations", 100}, {"max_error", jac_err}, {"tolerance", kJacobianTol}, {"pass", jac_pass}}},
                {"notes", notes},
                {"pass", pass}};
    write_json(out + "/kernels.json", rep);
    return {rep, pass};
}

std::array<double, 6> fluid_totals(const FluidState& s) {
    std::array<double, 6> t{};
    for (std::size_t c = 0; c < s.size(); ++c) {
        const double rho = s.rho(c);
        double u2 = 0.0;
        for (int i = 0; i < 3; ++i) u2 += s.u[i][c] * s.u[i][c];
        t[0] += s.nA[c];
        t[1] += s.nB[c];
        for (int i = 0; i < 3; ++i) t[2 + i] += rho * s.u[i][c];
        t[5] += 0.5 * rho * u2 + 1.5 * s.n(c) * s.theta[c];
    }
    return t;
}

std::vector<double> sample_times(double t_end, int n) {
    std::vector<double> t(n + 1);
    for (int k = 0; k <= n; ++k) t[k] = t_end * k / n;
    return t;
}

CommandResult run_euler(const RunConfig& c, const std::string& out) {
    const SpatialGrid grid(c.Lx, c.M, c.d);
    const double delta = c.study.deltas.front();
    const auto init = perturbed_state(grid, c.species.m, delta, default_fluctuation());
    const EulerOptions opt{c.study.cfl, c.study.limiter};
    const auto tr = euler_solve(init, sample_times(c.study.t_end, 10), opt);
    write_trajectory_csv(out + "/trajectory.csv", tr);
    write_json(out + "/trajectory.json", trajectory_manifest(tr, opt, delta, c.species.gamma));

    const auto t0 = fluid_totals(tr.states.front());
    double drift = 0.0;
    for (const auto& s : tr.states) {
        const auto t = fluid_totals(s);
        for (int i = 0; i < 6; ++i) drift = std::max(drift, std::abs(t[i] - t0[i]) / std::max(1.0, std::abs(t0[i])));
    }
    const auto sym = symmetrizer_check(tr.states.back(), 100, c.seed);
    const bool pass = drift <= kFluidConservationTol && sym.max_asymmetry <= kFluidConservationTol && sym.min_eig_A0 > 0.0;
    json rep = {{"delta", delta},
                {"t_end", c.study.t_end},
                {"steps", tr.steps},
                {"max_deviation", tr.max_deviation},
                {"conservation_drift", drift},
                {"symmetrizer", {{"max_asymmetry", sym.max_asymmetry}, {"min_eig_A0", sym.min_eig_A0}}},
                {"tolerance", kFluidConservationTol},
                {"pass", pass}};
    write_json(out + "/euler.json", rep);
    return {rep, pass};
}

void write_acoustic_csv(const std::string& path, const std::vector<double>& times,
                        const std::vector<AcousticState>& states) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path);
    f << "t,x,sigma_A,sigma_B,u1,u2,u3,theta\n" << std::setprecision(17);
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto& s = states[k];
        for (int i = 0; i < s.grid.M(); ++i) {
            const std::size_t c = s.grid.index(i);
            f << times[k] << ',' << s.grid.x(i) << ',' << s.sA[c] << ',' << s.sB[c] << ',' << s.u[0][c] << ','
              << s.u[1][c] << ',' << s.u[2][c] << ',' << s.theta[c] << '\n';
        }
    }
}

CommandResult run_acoustic(const RunConfig& c, const std::string& out) {
    const SpatialGrid grid(c.Lx, c.M, c.d);
    AcousticState init(grid, c.species.m);
    const auto fl = default_fluctuation();
    for (std::size_t k = 0; k < grid.cells(); ++k) {
        const int i = static_cast<int>(k % grid.M());
        const auto v = fl(Vec3{grid.x(i), 0.0, 0.0});
        init.sA[k] = v[0];
        init.sB[k] = v[1];
        for (int a = 0; a < 3; ++a) init.u[a][k] = v[2 + a];
        init.theta[k] = v[5];
    }
    const auto times = sample_times(5.0, 10);
    std::vector<AcousticState> states;
    for (double t : times) states.push_back(acoustic_solve(init, t));
    write_acoustic_csv(out + "/acoustic.csv", times, states);

    json energy = json::array();
    double drift = 0.0;
    for (int l = 0; l <= 2; ++l) {
        const double e0 = acoustic_energy(states.front(), l);
        double d = 0.0;
        for (const auto& s : states) d = std::max(d, std::abs(acoustic_energy(s, l) - e0) / e0);
        energy.push_back({{"order", l}, {"initial", e0}, {"max_relative_drift", d}});
        drift = std::max(drift, d);
    }
    const auto w0 = acoustic_vorticity(states.front());
    double vort = 0.0;
    for (const auto& s : states) {
        const auto w = acoustic_vorticity(s);
        for (int a = 0; a < 3; ++a)
            for (std::size_t k = 0; k < w[a].size(); ++k) vort = std::max(vort, std::abs(w[a][k] - w0[a][k]));
    }
    const double disp = acoustic_dispersion_defect(grid, c.species.m);
    const bool pass = drift <= kAcousticTol && vort <= kAcousticTol && disp <= kAcousticTol;
    json rep = {{"t_end", 5.0},
                {"speed", acoustic_speed(c.species.m)},
                {"energy", energy},
                {"vorticity_change", vort},
                {"dispersion_defect", disp},
                {"tolerance", kAcousticTol},
                {"pass", pass}};
    write_json(out + "/acoustic.json", rep);
    return {rep, pass};
}

StudySetup study_setup(const RunConfig& c) {
    StudySetup s;
    s.species = c.species;
    s.grid = SpatialGrid(c.Lx, c.M, c.d);
    s.euler = EulerOptions{c.study.cfl, c.study.limiter};
    s.hilbert.species = c.species;
    s.hilbert.vgrid = VelocityGrid(c.study.hilbert_R, c.study.hilbert_N);
    s.hilbert.angular_order = c.angular_order;
    s.taylor_vgrid = VelocityGrid(c.study.taylor_R, c.study.taylor_N);
    s.sampled_cells = c.study.sampled_cells;
    return s;
}

CommandResult run_limits(const RunConfig& c, const std::string& out) {
    const auto s = study_setup(c);
    const auto& p = c.study;
    std::vector<RateReport> reports;
    reports.push_back(acoustic_linearization_rate(s, p.deltas, p.t_end));
    reports.push_back(maxwellian_taylor_rate(s, p.deltas, p.t_end));
    reports.push_back(acoustic_limit_proxy_rate(s, p.eps, [](double e) { return std::sqrt(e); }));
    const double ratio_eps = *std::min_element(p.residual_eps.begin(), p.residual_eps.end());
    const auto hydro = hydrodynamic_residual_rate(s, p.residual_eps, p.residual_delta, ratio_eps);
    reports.push_back(hydro.K1);
    const auto sweep = acoustic_limit_delta_sweep(s, p.sweep_eps, p.sweep_deltas);
    const double taylor_fd = taylor_derivative_check(c.species, 1000, c.seed);

    write_rate_csv(out + "/rates.csv", reports, c.record_timings);
    json rates = json::array();
    bool pass = true;
    for (const auto& r : reports) {
        rates.push_back(r.to_json(c.record_timings));
        pass = pass && r.pass;
    }
    json decay = hydro.decay_sup;
    json rep = {{"reports", rates},
                {"residual_K0", hydro.K0.to_json(c.record_timings)},
                {"residual_ratio", {{"eps", hydro.ratio_eps}, {"K0_over_K1", hydro.ratio}, {"pass", hydro.ratio_pass}}},
                {"max_compatibility", hydro.max_compatibility},
                {"corrector_decay_sup", decay},
                {"delta_sweep", sweep.to_json()},
                {"taylor_derivative_defect", taylor_fd}};
    pass = pass && hydro.ratio_pass && sweep.pass;
    rep["pass"] = pass;
    write_json(out + "/rates.json", rep);
    return {rep, pass};
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"collide", "spectrum", "kernels", "euler", "acoustic", "limits"};
    return names;
}

CommandResult run_command(const std::string& name, const RunConfig& cfg, const std::string& out_dir) {
    if (name == "collide") return run_collide(cfg, out_dir);
    if (name == "spectrum") return run_spectrum(cfg, out_dir);
    if (name == "kernels") return run_kernels(cfg, out_dir);
    if (name == "euler") return run_euler(cfg, out_dir);
    if (name == "acoustic") return run_acoustic(cfg, out_dir);
    if (name == "limits") return run_limits(cfg, out_dir);
    throw ConfigError("unknown subcommand '" + name + "'");
}

int exit_code_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
        case Error::Kind::Config:
        case Error::Kind::Shape:
        case Error::Kind::Domain:
        case Error::Kind::Degenerate: return 2;
        default: return 3;
        }
    }
    return 3;
}

nlohmann::json error_json(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    return {{"error", {{"kind", err ? err->kind_name() : "internal"}, {"message", e.what()}, {"exit_code", exit_code_for(e)}}}};
}

} // namespace mixkin::cli
