#include "mixkin/experiments.hpp"

#include "mixkin/errors.hpp"

#include <gsl/gsl_fit.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>

namespace mixkin {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vec3 cell_x(const SpatialGrid& g, std::size_t c) {
    if (g.dim() == 1) return {g.x(static_cast<int>(c)), 0.0, 0.0};
    const int M = g.M();
    return {g.x(static_cast<int>(c / (static_cast<std::size_t>(M) * M))), g.x(static_cast<int>((c / M) % M)),
            g.x(static_cast<int>(c % M))};
}

AcousticState acoustic_data(const StudySetup& s) {
    AcousticState a(s.grid, s.species.m);
    for (std::size_t c = 0; c < s.grid.cells(); ++c) {
        const auto f = s.fluct(cell_x(s.grid, c));
        a.sA[c] = f[0];
        a.sB[c] = f[1];
        for (int k = 0; k < 3; ++k) a.u[k][c] = f[2 + k];
        a.theta[c] = f[5];
    }
    return a;
}

HilbertSetup hilbert_of(const StudySetup& s) {
    HilbertSetup h = s.hilbert;
    h.species = s.species;
    return h;
}

// First-order Maxwellian variation at fluctuation (sigma, u, theta).
double taylor_G(double sigma, const Vec3& u, double th, double m, const Vec3& v, double mu0) {
    return (sigma + m * dot(u, v) + 0.5 * (m * norm2(v) - 3.0) * th) * mu0;
}

} // namespace

FluctuationFn default_fluctuation() {
    return [](const Vec3& x) {
        const double a = 2.0 * std::numbers::pi * x[0];
        return std::array<double, 6>{std::sin(a), 0.5 * std::cos(a), 0.3 * std::sin(a),
                                     0.2 * std::cos(a), 0.0, 0.4 * std::cos(2.0 * a)};
    };
}

SlopeFit fit_log2(const std::vector<double>& params, const std::vector<double>& errors) {
    if (params.size() != errors.size() || params.size() < 2) throw ShapeError("fit_log2: need matched points");
    const std::size_t n = params.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(params[i] > 0.0 && errors[i] > 0.0)) throw DomainError("fit_log2: values must be positive");
        x[i] = std::log2(params[i]);
        y[i] = std::log2(errors[i]);
    }
    double c0, c1, cov00, cov01, cov11, sumsq;
    gsl_fit_linear(x.data(), 1, y.data(), 1, n, &c0, &c1, &cov00, &cov01, &cov11, &sumsq);
    SlopeFit f;
    f.slope = c1;
    f.half_width = 1.96 * std::sqrt(cov11);
    f.residual = std::sqrt(sumsq / static_cast<double>(n));
    return f;
}

void validate_params(const std::vector<double>& p, const std::string& name) {
    if (p.size() < 3) throw ConfigError(name + ": at least three parameter values required");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] > 0.0) || !std::isfinite(p[i])) throw ConfigError(name + ": values must be positive");
        if (i == 0) continue;
        const double r = std::log2(p[i - 1] / p[i]);
        if (!(r > 0.5) || std::abs(r - std::round(r)) > 1e-9)
            throw ConfigError(name + ": values must decrease by powers of two");
    }
}

void RateReport::finalize() {
    vanishing = std::all_of(error_l2.begin(), error_l2.end(), [](double e) { return e == 0.0; }) &&
                std::all_of(error_sup.begin(), error_sup.end(), [](double e) { return e == 0.0; });
    if (vanishing) {
        pass = true;
        return;
    }
    auto ok = [&](const SlopeFit& f) {
        const bool slope_ok = at_least ? f.slope >= expected : std::abs(f.slope - expected) <= tolerance;
        return slope_ok && f.residual < 0.1;
    };
    pass = true;
    for (const auto& norm : checked) {
        if (norm == "l2") {
            fit_l2 = fit_log2(params, error_l2);
            pass = pass && ok(fit_l2);
        } else if (norm == "sup") {
            fit_sup = fit_log2(params, error_sup);
            pass = pass && ok(fit_sup);
        }
    }
    // Report both fits regardless of which decide.
    if (std::find(checked.begin(), checked.end(), "l2") == checked.end()) fit_l2 = fit_log2(params, error_l2);
    if (std::find(checked.begin(), checked.end(), "sup") == checked.end()) fit_sup = fit_log2(params, error_sup);
}

nlohmann::json RateReport::to_json(bool timings) const {
    auto fit = [](const SlopeFit& f) {
        return nlohmann::json{{"slope", f.slope}, {"half_width", f.half_width}, {"residual", f.residual}};
    };
    nlohmann::json j{{"study", study},
                     {"param_name", param_name},
                     {"params", params},
                     {"error_L2", error_l2},
                     {"error_sup", error_sup},
                     {"fit_L2", fit(fit_l2)},
                     {"fit_sup", fit(fit_sup)},
                     {"checked", checked},
                     {"expected", expected},
                     {"tolerance", tolerance},
                     {"comparison", at_least ? "at_least" : "within"},
                     {"vanishing", vanishing},
                     {"pass", pass},
                     {"extra", extra}};
    if (timings) {
        j["runtime_s"] = runtime_s;
        j["wall_time"] = wall_time;
    }
    return j;
}

RateReport acoustic_linearization_rate(const StudySetup& s, const std::vector<double>& deltas, double t_end) {
    validate_params(deltas, "acoustic_linearization_rate");
    if (!(t_end >= 0.0)) throw ConfigError("acoustic_linearization_rate: t_end must be >= 0");
    const auto t0 = Clock::now();
    RateReport r;
    r.study = "acoustic_linearization";
    r.param_name = "delta";
    r.params = deltas;
    r.checked = {"sup"};
    r.expected = 2.0;
    r.tolerance = 0.2;
    const AcousticState ac = acoustic_solve(acoustic_data(s), t_end);
    const double vol = std::pow(s.grid.dx(), s.grid.dim());
    for (double d : deltas) {
        const auto t1 = Clock::now();
        const FluidState init = perturbed_state(s.grid, s.species.m, d, s.fluct);
        const Trajectory tr = euler_solve(init, {t_end}, s.euler);
        const FluidState& e = tr.states.back();
        double sup = 0.0, ss = 0.0;
        for (std::size_t c = 0; c < e.size(); ++c) {
            const double diff[6] = {e.nA[c] - 1.0 - d * ac.sA[c],     e.nB[c] - 1.0 - d * ac.sB[c],
                                    e.u[0][c] - d * ac.u[0][c],       e.u[1][c] - d * ac.u[1][c],
                                    e.u[2][c] - d * ac.u[2][c],       e.theta[c] - 1.0 - d * ac.theta[c]};
            for (double x : diff) {
                sup = std::max(sup, std::abs(x));
                ss += x * x;
            }
        }
        r.error_sup.push_back(sup);
        r.error_l2.push_back(std::sqrt(ss * vol));
        r.runtime_s.push_back(seconds_since(t1));
    }
    r.extra = {{"t_end", t_end}, {"M", s.grid.M()}};
    r.finalize();
    r.wall_time = seconds_since(t0);
    return r;
}

RateReport maxwellian_taylor_rate(const StudySetup& s, const std::vector<double>& deltas, double t_end) {
    validate_params(deltas, "maxwellian_taylor_rate");
    const auto t0 = Clock::now();
    RateReport r;
    r.study = "maxwellian_taylor";
    r.param_name = "delta";
    r.params = deltas;
    r.checked = {"l2", "sup"};
    r.expected = 2.0;
    r.tolerance = 0.1;
    const AcousticState ac = acoustic_solve(acoustic_data(s), t_end);
    const VelocityGrid& vg = s.taylor_vgrid;
    const std::size_t nv = vg.size();
    std::array<std::vector<double>, 2> mu0;
    for (int a = 0; a < 2; ++a) mu0[a] = maxwellian_field(MaxwellParams{}, s.species.m[a], vg);
    const double vol = std::pow(s.grid.dx(), s.grid.dim()) * vg.weight();
    for (double d : deltas) {
        const auto t1 = Clock::now();
        const FluidState init = perturbed_state(s.grid, s.species.m, d, s.fluct);
        const FluidState e = euler_solve(init, {t_end}, s.euler).states.back();
        double sup = 0.0, ss = 0.0;
        for (std::size_t c = 0; c < e.size(); ++c) {
            const Vec3 ua{ac.u[0][c], ac.u[1][c], ac.u[2][c]};
            for (int a = 0; a < 2; ++a) {
                const double m = s.species.m[a];
                const auto p = e.local(a, c);
                const double sig = a == 0 ? ac.sA[c] : ac.sB[c];
                for (std::size_t k = 0; k < nv; ++k) {
                    const Vec3 v = vg.node(k);
                    const double x =
                        maxwellian(p, m, v) - mu0[a][k] - d * taylor_G(sig, ua, ac.theta[c], m, v, mu0[a][k]);
                    sup = std::max(sup, std::abs(x));
                    ss += x * x;
                }
            }
        }
        r.error_sup.push_back(sup);
        r.error_l2.push_back(std::sqrt(ss * vol));
        r.runtime_s.push_back(seconds_since(t1));
    }
    r.extra = {{"t_end", t_end}, {"velocity_N", vg.N()}, {"velocity_R", vg.R()}};
    r.finalize();
    r.wall_time = seconds_since(t0);
    return r;
}

double taylor_derivative_check(const SpeciesPair& s, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const int a = i % 2;
        const double m = s.m[a];
        const double sig = U(rng), th = U(rng);
        const Vec3 u{U(rng), U(rng), U(rng)};
        const Vec3 v{3.0 * U(rng), 3.0 * U(rng), 3.0 * U(rng)};
        auto mu = [&](double z) {
            return maxwellian(MaxwellParams{1.0 + z * sig, {z * u[0], z * u[1], z * u[2]}, 1.0 + z * th}, m, v);
        };
        const double fd = (mu(h) - mu(-h)) / (2.0 * h);
        const double mu0 = maxwellian(MaxwellParams{}, m, v);
        worst = std::max(worst, std::abs(fd - taylor_G(sig, u, th, m, v, mu0)));
    }
    return worst;
}

std::vector<ProxyErrors> proxy_errors(const StudySetup& s, double delta, const std::vector<double>& eps) {
    const HilbertSetup h = hilbert_of(s);
    const FluidState st = perturbed_state(s.grid, s.species.m, delta, s.fluct);
    const FluidState rhs = euler_rhs(st);
    const auto cells = sample_cells(s.grid, s.sampled_cells);
    const VelocityGrid& vg = h.vgrid;
    const std::size_t nv = vg.size();
    std::array<std::vector<double>, 2> mu0;
    for (int a = 0; a < 2; ++a) mu0[a] = maxwellian_field(MaxwellParams{}, s.species.m[a], vg);
    std::vector<double> ss(eps.size(), 0.0);
    std::vector<ProxyErrors> out(eps.size());
    for (std::size_t c : cells) {
        const CellCorrector cc = corrector_at(st, rhs, c, h);
        const DistributionField F0 = build_F0(st, c, vg);
        const auto f = s.fluct(cell_x(s.grid, c));
        const Vec3 ua{f[2], f[3], f[4]};
        for (int a = 0; a < 2; ++a) {
            const double m = s.species.m[a];
            for (std::size_t k = 0; k < nv; ++k) {
                const Vec3 v = vg.node(k);
                const double G = taylor_G(f[a], ua, f[5], m, v, mu0[a][k]);
                const double F1 = cc.sqrt_mu.species(a)[k] * cc.f1.total.species(a)[k];
                for (std::size_t i = 0; i < eps.size(); ++i) {
                    const double x = (F0.species(a)[k] + eps[i] * F1 - mu0[a][k]) / delta - G;
                    out[i].sup = std::max(out[i].sup, std::abs(x));
                    ss[i] += x * x;
                }
            }
        }
    }
    const double vol = std::pow(s.grid.dx(), s.grid.dim()) * vg.weight();
    for (std::size_t i = 0; i < eps.size(); ++i) out[i].l2 = std::sqrt(ss[i] * vol);
    return out;
}

RateReport acoustic_limit_proxy_rate(const StudySetup& s, const std::vector<double>& eps,
                                     const std::function<double(double)>& delta_of_eps) {
    validate_params(eps, "acoustic_limit_proxy_rate");
    const auto t0 = Clock::now();
    RateReport r;
    r.study = "acoustic_limit_proxy";
    r.param_name = "eps";
    r.params = eps;
    r.checked = {"l2", "sup"};
    r.expected = 0.5;
    r.tolerance = 0.1;
    std::vector<double> deltas;
    for (double e : eps) {
        const auto t1 = Clock::now();
        const double d = delta_of_eps(e);
        if (!(d > 0.0)) throw ConfigError("acoustic_limit_proxy_rate: delta must be positive");
        deltas.push_back(d);
        const auto pe = proxy_errors(s, d, {e}).front();
        r.error_l2.push_back(pe.l2);
        r.error_sup.push_back(pe.sup);
        r.runtime_s.push_back(seconds_since(t1));
    }
    r.extra = {{"deltas", deltas}, {"sampled_cells", s.sampled_cells}};
    r.finalize();
    r.wall_time = seconds_since(t0);
    return r;
}

nlohmann::json SweepReport::to_json() const {
    return {{"eps", eps},           {"deltas", deltas},         {"error_L2", error_l2}, {"error_sup", error_sup},
            {"argmin_L2", argmin_l2}, {"argmin_sup", argmin_sup}, {"target", target},     {"pass", pass}};
}

SweepReport acoustic_limit_delta_sweep(const StudySetup& s, double eps, const std::vector<double>& deltas) {
    if (deltas.size() < 3) throw ConfigError("delta sweep: at least three values required");
    if (!(eps > 0.0)) throw ConfigError("delta sweep: eps must be positive");
    SweepReport r;
    r.eps = eps;
    r.deltas = deltas;
    r.target = std::sqrt(eps);
    for (double d : deltas) {
        const auto pe = proxy_errors(s, d, {eps}).front();
        r.error_l2.push_back(pe.l2);
        r.error_sup.push_back(pe.sup);
    }
    auto argmin = [&](const std::vector<double>& e) {
        return deltas[static_cast<std::size_t>(std::min_element(e.begin(), e.end()) - e.begin())];
    };
    r.argmin_l2 = argmin(r.error_l2);
    r.argmin_sup = argmin(r.error_sup);
    auto near = [&](double d) { return d >= 0.5 * r.target && d <= 2.0 * r.target; };
    r.pass = near(r.argmin_l2) && near(r.argmin_sup);
    return r;
}

HydrodynamicReport hydrodynamic_residual_rate(const StudySetup& s, const std::vector<double>& eps, double delta,
                                              double ratio_eps) {
    validate_params(eps, "hydrodynamic_residual_rate");
    const auto t0 = Clock::now();
    const HilbertSetup h = hilbert_of(s);
    const FluidState st = perturbed_state(s.grid, s.species.m, delta, s.fluct);
    const ResidualTerms terms = residual_terms(st, sample_cells(s.grid, s.sampled_cells), h);
    const double setup_time = seconds_since(t0);

    HydrodynamicReport out;
    for (int K = 0; K <= 1; ++K) {
        RateReport& r = K == 0 ? out.K0 : out.K1;
        r.study = K == 0 ? "hydrodynamic_residual_K0" : "hydrodynamic_residual_K1";
        r.param_name = "eps";
        r.params = eps;
        r.checked = {"l2", "sup"};
        r.expected = K == 0 ? 0.0 : 0.8;
        r.tolerance = K == 0 ? 0.1 : 0.0;
        r.at_least = K == 1;
        for (double e : eps) {
            const auto t1 = Clock::now();
            const ResidualReport rr = expansion_residual(terms, {e, K});
            r.error_l2.push_back(rr.l2_total);
            r.error_sup.push_back(rr.sup_total);
            r.runtime_s.push_back(seconds_since(t1));
        }
        r.extra = {{"delta", delta}, {"sampled_cells", s.sampled_cells}};
        r.finalize();
        r.wall_time = setup_time + std::accumulate(r.runtime_s.begin(), r.runtime_s.end(), 0.0);
    }
    out.ratio_eps = ratio_eps;
    const double k0 = expansion_residual(terms, {ratio_eps, 0}).l2_total;
    const double k1 = expansion_residual(terms, {ratio_eps, 1}).l2_total;
    out.ratio = k0 / k1;
    out.ratio_pass = out.ratio > 10.0;
    out.max_compatibility = terms.max_compatibility;
    out.decay_sup = terms.decay_sup;
    out.K1.extra["ratio_eps"] = ratio_eps;
    out.K1.extra["K0_over_K1"] = out.ratio;
    out.K1.extra["max_compatibility"] = out.max_compatibility;
    out.K1.extra["f1_decay_sup"] = out.decay_sup;
    return out;
}

void write_rate_csv(const std::string& path, const std::vector<RateReport>& reports, bool timings) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw ConfigError("cannot write " + path);
    std::fprintf(f.get(), "study,param,error_L2,error_sup,runtime_s\n");
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.params.size(); ++i) {
            std::fprintf(f.get(), "%s,%.17g,%.17g,%.17g,", r.study.c_str(), r.params[i], r.error_l2[i],
                         r.error_sup[i]);
            if (timings)
                std::fprintf(f.get(), "%.6g\n", r.runtime_s[i]);
            else
                std::fprintf(f.get(), "NA\n");
        }
}

} // namespace mixkin
