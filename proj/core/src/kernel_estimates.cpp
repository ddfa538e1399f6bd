#include "mixkin/kernel_estimates.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/parallel.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_fit.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_qrng.h>
#include <gsl/gsl_sf_bessel.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <type_traits>

namespace mixkin {

namespace {

constexpr double pi = std::numbers::pi;

struct GslOff {
    GslOff() { gsl_set_error_handler_off(); }
};
const GslOff gsl_off;

struct Workspace {
    gsl_integration_workspace* w;
    explicit Workspace(std::size_t n = 512) : w(gsl_integration_workspace_alloc(n)) {}
    ~Workspace() { gsl_integration_workspace_free(w); }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
};

// One workspace per nesting level and thread.
gsl_integration_workspace* workspace(int level) {
    thread_local std::unique_ptr<Workspace> ws[3];
    if (!ws[level]) ws[level] = std::make_unique<Workspace>();
    return ws[level]->w;
}

template <class F>
double integrate(F&& fn, double a, double b, std::vector<double> breaks, double epsrel, int level) {
    if (!(b > a)) return 0.0;
    gsl_function gf;
    using Fn = std::remove_reference_t<F>;
    gf.function = [](double x, void* p) { return (*static_cast<Fn*>(p))(x); };
    gf.params = const_cast<void*>(static_cast<const void*>(&fn));
    std::vector<double> pts{a};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks)
        if (x > a && x < b) pts.push_back(x);
    pts.push_back(b);
    double result = 0.0, err = 0.0;
    const int status = gsl_integration_qagp(&gf, pts.data(), pts.size(), 0.0, epsrel, 512, workspace(level), &result, &err);
    if (status != GSL_SUCCESS && status != GSL_EROUND && std::abs(err) > 1e-3 * std::abs(result) + 1e-300)
        throw NumericalError("kernel quadrature did not converge: estimate " + std::to_string(result) + " +- " +
                             std::to_string(err));
    return result;
}

Vec3 add(const Vec3& a, const Vec3& b, double s = 1.0) { return {a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {s * a[0], s * a[1], s * a[2]}; }
double len(const Vec3& a) { return std::sqrt(norm2(a)); }

double log_mu_M(const KernelFrame& f, int alpha, const Vec3& v) {
    const double m = f.species.m[alpha], th = f.global.theta_M;
    return 1.5 * std::log(m / (2.0 * pi * th)) - m * norm2(v) / (2.0 * th);
}

double log_mu_delta(const KernelFrame& f, int alpha, const Vec3& v) {
    const auto& p = f.local[alpha];
    const double m = f.species.m[alpha];
    const Vec3 d{v[0] - p.u[0], v[1] - p.u[1], v[2] - p.u[2]};
    return std::log(p.n) + 1.5 * std::log(m / (2.0 * pi * p.theta)) - m * norm2(d) / (2.0 * p.theta);
}

double c_bar(const KernelFrame& f) { return 2.0 * f.global.q_tilde - 1.0; }

// 2 pi int_0^inf s exp(-ch|a_vec + s e_phi|^2) (r^2 + s^2)^{(gamma-1)/2} (1 - chi) ds, azimuth done by I0.
double plane_integral(double a, double r, double ch, const KernelFrame& f) {
    const double g = f.species.gamma, m = f.cutoff.m;
    const double width = 8.0 / std::sqrt(2.0 * ch);
    const double lo = std::max(0.0, a - width), hi = a + width;
    auto fn = [&](double s) {
        const double rho2 = r * r + s * s;
        const double cut = 1.0 - chi(std::sqrt(rho2), f.cutoff);
        if (cut == 0.0) return 0.0;
        return s * std::exp(-ch * (a - s) * (a - s)) * gsl_sf_bessel_I0_scaled(2.0 * ch * a * s) *
               std::pow(rho2, 0.5 * (g - 1.0)) * cut;
    };
    std::vector<double> br{a};
    if (m * m > r * r) br.push_back(std::sqrt(m * m - r * r));
    if (4.0 * m * m > r * r) br.push_back(std::sqrt(4.0 * m * m - r * r));
    return 2.0 * pi * integrate(fn, lo, hi, br, 1e-9, 0);
}

// Typical kernel in reduced coordinates: a_par = v . e, a_perp = |v - a_par e|, r = |u_par|.
double typical_reduced(double a_par, double a_perp, double r, int alpha, int beta, const KernelFrame& f) {
    const double ma = f.species.m[alpha], mb = f.species.m[beta], th = f.global.theta_M;
    const double cb = c_bar(f), sc = std::sqrt(cb), dm = (mb - ma) / (ma + mb);
    const double zeta = 0.5 * (1.0 + sc) * a_par + (0.5 + 0.5 * sc * dm) * r;
    const double psi = 0.5 * (1.0 - sc) * a_par + (0.5 - 0.5 * sc * dm) * r;
    const double E = std::exp(-mb / (4.0 * th) * (zeta * zeta + psi * psi));
    if (E == 0.0) return 0.0;
    const double ch = mb * (1.0 + cb) / (8.0 * th);
    return E * plane_integral(a_perp, r, ch, f) * f.species.b(1.0) / r;
}

double equal_reduced(double a_par, double a_perp, double r, int alpha, const KernelFrame& f) {
    const double m = f.species.m[alpha], th = f.global.theta_M;
    const double cb = c_bar(f), sc = std::sqrt(cb), sm = std::sqrt(m);
    const double xi = sm * (0.5 * (1.0 + sc) * a_par + 0.5 * r);
    const double eta = sm * (0.5 * (1.0 - sc) * a_par + 0.5 * r);
    const double E = std::exp(-(xi * xi + eta * eta) / (4.0 * th));
    if (E == 0.0) return 0.0;
    const double ch = m * (1.0 + cb) / (8.0 * th);
    return E * plane_integral(a_perp, r, ch, f) * f.species.b(1.0) / r;
}

class Halton {
public:
    explicit Halton(unsigned dim) : q_(gsl_qrng_alloc(gsl_qrng_halton, dim)), x_(dim) {}
    ~Halton() { gsl_qrng_free(q_); }
    Halton(const Halton&) = delete;
    Halton& operator=(const Halton&) = delete;
    // Next point mapped to the box [-half, half]^dim.
    const std::vector<double>& next(const std::vector<double>& half) {
        gsl_qrng_get(q_, x_.data());
        for (std::size_t i = 0; i < x_.size(); ++i) x_[i] = (2.0 * x_[i] - 1.0) * half[i];
        return x_;
    }

private:
    gsl_qrng* q_;
    std::vector<double> x_;
};

struct LinearFit {
    double slope = 0.0, intercept = 0.0, se = 0.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit r;
    double c00, c01, c11, sumsq;
    gsl_fit_linear(x.data(), 1, y.data(), 1, x.size(), &r.intercept, &r.slope, &c00, &c01, &c11, &sumsq);
    r.se = std::sqrt(std::max(0.0, c11));
    return r;
}

struct Sample {
    double x = 0.0;    // quadratic form in the envelope exponent
    double y = 0.0;    // log(observed / algebraic prefactor)
    bool ok = false;
};

// Upper envelope fit of y against x; y <= log C - c x.
void fit_envelope(const std::vector<Sample>& s, BoundReport& rep) {
    std::vector<const Sample*> good;
    for (const auto& p : s)
        if (p.ok) good.push_back(&p);
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    for (auto* p : good) {
        xlo = std::min(xlo, p->x);
        xhi = std::max(xhi, p->x);
    }
    constexpr int bins = 30;
    std::vector<int> count(bins, 0), best(bins, -1);
    for (std::size_t i = 0; i < good.size(); ++i) {
        const int b = std::min(bins - 1, static_cast<int>((good[i]->x - xlo) / (xhi - xlo) * bins));
        ++count[b];
        if (best[b] < 0 || good[i]->y > good[best[b]]->y) best[b] = static_cast<int>(i);
    }
    std::vector<double> ex, ey;
    for (int b = 0; b < bins; ++b)
        if (count[b] >= 5) {
            ex.push_back(good[best[b]]->x);
            ey.push_back(good[best[b]]->y);
        }
    rep.fitted_exponents.clear();
    rep.half_widths.clear();
    if (ex.size() < 3) {
        rep.max_ratio = std::numeric_limits<double>::infinity();
        rep.fitted_exponents.push_back(0.0);
        rep.half_widths.push_back(0.0);
        rep.pass = false;
        return;
    }
    const LinearFit fit = linear_fit(ex, ey);
    const double c = -fit.slope;
    double logC = -std::numeric_limits<double>::infinity();
    for (auto* p : good) logC = std::max(logC, p->y + c * p->x);
    rep.max_ratio = std::exp(logC);
    rep.fitted_exponents.push_back(c);
    rep.half_widths.push_back(1.96 * fit.se);
    rep.tolerance = 0.0;
    rep.pass = std::isfinite(rep.max_ratio) && c > 0.0;
}

template <class Eval>
BoundReport run_bound(const std::string& id, const KernelFrame& f, int n, const std::vector<double>& half, Eval&& eval) {
    f.validate();
    if (n < 100) throw ConfigError("bound check: need at least 100 samples");
    std::vector<std::vector<double>> pts(n);
    Halton h(static_cast<unsigned>(half.size()));
    for (int i = 0; i < n; ++i) pts[i] = h.next(half);
    std::vector<Sample> samples(n);
    const std::size_t chunks = 64;
    parallel_chunks(n, chunks, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) samples[i] = eval(pts[i]);
    });
    BoundReport rep;
    rep.bound_id = id;
    rep.gamma = f.species.gamma;
    rep.masses = f.species.m;
    rep.n_samples = n;
    fit_envelope(samples, rep);
    return rep;
}

Sample make_sample(double obs, double pref, double x) {
    Sample s;
    s.x = x;
    if (obs > 0.0 && std::isfinite(obs) && pref > 0.0) {
        s.y = std::log(obs) - std::log(pref);
        s.ok = std::isfinite(s.y);
    }
    return s;
}

double weight_ratio(const Vec3& v, const Vec3& shifted, double l) {
    return std::pow((1.0 + len(v)) / (1.0 + len(shifted)), l);
}

} // namespace

void CutoffSpec::validate() const {
    if (!(m > 0.0 && m < 1.0)) throw ConfigError("cutoff: m must lie in (0, 1)");
}

double chi(double s, const CutoffSpec& spec) {
    if (s < 0.0) throw DomainError("chi: negative argument");
    if (s <= spec.m) return 1.0;
    if (s >= 2.0 * spec.m) return 0.0;
    const double x = (s - spec.m) / spec.m;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

void KernelFrame::validate() const {
    species.validate();
    cutoff.validate();
    for (const auto& p : local) p.validate();
    if (!(global.theta_M > 0.0)) throw FrameError("kernel frame: theta_M must be positive");
    if (!(global.q_tilde > species.max_mass() / species.M() && global.q_tilde < 1.0))
        throw FrameError("kernel frame: q_tilde out of range");
    for (const auto& p : local)
        if (p.theta < global.theta_M || p.theta > 2.0 * global.theta_M)
            throw FrameError("kernel frame: local temperature outside [theta_M, 2 theta_M)");
}

KernelFrame default_kernel_frame(const SpeciesPair& s, double m) {
    KernelFrame f;
    f.species = s;
    f.global.theta_M = 1.0;
    f.global.mass_ratio_bound = s.M() / s.max_mass();
    f.global.q_tilde = default_q_tilde(s);
    for (auto& p : f.local) p = MaxwellParams{1.0, {0.0, 0.0, 0.0}, 1.2};
    f.cutoff.m = m;
    f.validate();
    return f;
}

double k_M1(const Vec3& v, const Vec3& vs, int alpha, int beta, const KernelFrame& f) {
    const double r = len(add(vs, v, -1.0));
    const double cut = 1.0 - chi(r, f.cutoff);
    if (cut == 0.0) return 0.0;
    // Integral of b over the sphere: b is |cos| times a constant.
    const double bint = 2.0 * pi * f.species.b(1.0);
    const double logm = log_mu_delta(f, alpha, v) + 0.5 * log_mu_M(f, beta, vs) - 0.5 * log_mu_M(f, alpha, v);
    return cut * f.species.C_phi[alpha][beta] * std::pow(r, f.species.gamma) * bint * std::exp(logm);
}

double k_M2_typical(const Vec3& v, const Vec3& u_par, int alpha, int beta, const KernelFrame& f) {
    const double r = len(u_par);
    if (!(r > 0.0)) throw DomainError("k_M2_typical: u_par must be nonzero");
    const Vec3 e = scale(u_par, 1.0 / r);
    const double ap = dot(v, e);
    const double aq = len(add(v, e, -ap));
    return typical_reduced(ap, aq, r, alpha, beta, f);
}

double k_M2_hybrid_equal(const Vec3& v, const Vec3& u_perp, int alpha, const KernelFrame& f) {
    const double r = len(u_perp);
    if (!(r > 0.0)) throw DomainError("k_M2_hybrid_equal: u_perp must be nonzero");
    const Vec3 e = scale(u_perp, 1.0 / r);
    const double ap = dot(v, e);
    const double aq = len(add(v, e, -ap));
    return equal_reduced(ap, aq, r, alpha, f);
}

std::array<Vec3, 2> perp_basis(const Vec3& e) {
    // Start from the axis least aligned with e.
    int k = 0;
    for (int d = 1; d < 3; ++d)
        if (std::abs(e[d]) < std::abs(e[k])) k = d;
    Vec3 a{0.0, 0.0, 0.0};
    a[k] = 1.0;
    Vec3 e1 = add(a, e, -dot(a, e));
    e1 = scale(e1, 1.0 / len(e1));
    const Vec3 e2{e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2], e[0] * e1[1] - e[1] * e1[0]};
    return {e1, e2};
}

double k_M2_hybrid_cross(const Vec3& v, const std::array<double, 2>& u_perp_in, const Vec3& u_par_in, int alpha,
                         int beta, const KernelFrame& f) {
    if (alpha == beta) throw DomainError("k_M2_hybrid_cross: species must differ");
    const double r = len(u_par_in);
    if (!(r > 0.0)) throw DomainError("k_M2_hybrid_cross: u_par must be nonzero");
    const double ma = f.species.m[alpha], mb = f.species.m[beta], M = ma + mb, th = f.global.theta_M;
    // Heavier alpha: evaluate at (-u_perp, -u_par).
    const double sgn = ma > mb ? -1.0 : 1.0;
    const Vec3 u_par = scale(u_par_in, sgn);
    const Vec3 e = scale(u_par, 1.0 / r);
    const auto basis = perp_basis(scale(u_par_in, 1.0 / r));
    const Vec3 U = add(scale(basis[0], sgn * u_perp_in[0]), basis[1], sgn * u_perp_in[1]);

    const double cb = c_bar(f), smb = std::sqrt(mb), sca = std::sqrt(cb * ma);
    const double ap = dot(v, e);
    const Vec3 vq = add(v, e, -ap);
    const double up = 0.5 * (smb + sca), um = 0.5 * (smb - sca);
    const double xi_par = up * ap + (0.5 * smb + sca * mb / M) * r;
    const double eta_par = um * ap + (0.5 * smb - sca * mb / M) * r;
    const Vec3 xi_q = add(scale(vq, up), U, 0.5 * smb);
    const Vec3 eta_q = add(scale(vq, um), U, 0.5 * smb);
    const double E = std::exp(-(xi_par * xi_par + eta_par * eta_par + norm2(xi_q) + norm2(eta_q)) / (4.0 * th));
    const double rho2 = r * r + norm2(U);
    const double cut = 1.0 - chi(std::sqrt(rho2), f.cutoff);
    return E * std::pow(rho2, 0.5 * (f.species.gamma - 1.0)) * cut * f.species.b(1.0) / r;
}

double jacobian_cross(const Vec3& omega, double m_alpha, double m_beta) {
    if (std::abs(norm2(omega) - 1.0) > 1e-12) throw DomainError("jacobian_cross: omega must be a unit vector");
    if (!(m_alpha > 0.0 && m_beta > 0.0)) throw DomainError("jacobian_cross: masses must be positive");
    return (m_beta - m_alpha) / (m_alpha + m_beta);
}

double jacobian_cross_fd(const Vec3& v, const Vec3& vs, const Vec3& omega, double m_alpha, double m_beta, double h) {
    Eigen::Matrix3d J;
    for (int c = 0; c < 3; ++c) {
        Vec3 p = vs, q = vs;
        p[c] += h;
        q[c] -= h;
        const Vec3 a = post_collision(v, p, omega, m_alpha, m_beta).second;
        const Vec3 b = post_collision(v, q, omega, m_alpha, m_beta).second;
        for (int r = 0; r < 3; ++r) J(r, c) = (a[r] - b[r]) / (2.0 * h);
    }
    return J.determinant();
}

nlohmann::json BoundReport::to_json() const {
    nlohmann::json exps = nlohmann::json::array();
    for (std::size_t i = 0; i < fitted_exponents.size(); ++i)
        exps.push_back({{"value", fitted_exponents[i]}, {"half_width", i < half_widths.size() ? half_widths[i] : 0.0}});
    return {{"bound_id", bound_id},
            {"gamma", gamma},
            {"masses", masses},
            {"n_samples", n_samples},
            {"max_ratio", std::isfinite(max_ratio) ? nlohmann::json(max_ratio) : nlohmann::json("inf")},
            {"fitted_exponents", exps},
            {"tolerance", tolerance},
            {"pass", pass}};
}

BoundReport check_bound_M1(const KernelFrame& f, int alpha, int beta, int n) {
    const double l = f.global.l;
    return run_bound("k_M1_weighted", f, n, std::vector<double>(6, 8.0), [&](const std::vector<double>& p) {
        const Vec3 v{p[0], p[1], p[2]}, vs{p[3], p[4], p[5]};
        const double obs = weight_ratio(v, vs, l) * std::abs(k_M1(v, vs, alpha, beta, f));
        return make_sample(obs, 1.0, norm2(v) + norm2(vs));
    });
}

BoundReport check_bound_typical(const KernelFrame& f, int alpha, int beta, int n) {
    const double l = f.global.l, g = f.species.gamma;
    const double shift = 2.0 * f.species.m[beta] / f.species.M();
    return run_bound("k_M2_typical_weighted", f, n, {8.0, 8.0, 8.0, 8.0, 8.0, 8.0}, [&](const std::vector<double>& p) {
        const Vec3 v{p[0], p[1], p[2]}, u{p[3], p[4], p[5]};
        const double r = len(u);
        if (!(r > 0.0)) return Sample{};
        const double obs = weight_ratio(v, add(v, u, shift), l) * std::abs(k_M2_typical(v, u, alpha, beta, f));
        const double vpar = dot(v, u) / r;
        return make_sample(obs, std::pow(1.0 + len(v) + r, g - 1.0) / r, r * r + vpar * vpar);
    });
}

BoundReport check_bound_hybrid_cross(const KernelFrame& f, int alpha, int beta, int n) {
    const double l = f.global.l;
    const double dm = (f.species.m[beta] - f.species.m[alpha]) / f.species.M();
    return run_bound("k_M2_hybrid_cross_weighted", f, n, {8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0, 8.0},
                     [&](const std::vector<double>& p) {
                         const Vec3 v{p[0], p[1], p[2]}, u{p[3], p[4], p[5]};
                         const std::array<double, 2> q{p[6], p[7]};
                         const double r = len(u);
                         if (!(r > 0.0)) return Sample{};
                         const auto basis = perp_basis(scale(u, 1.0 / r));
                         const Vec3 U = add(scale(basis[0], q[0]), basis[1], q[1]);
                         const Vec3 target = add(add(v, U), u, dm);
                         const double obs =
                             weight_ratio(v, target, l) * std::abs(k_M2_hybrid_cross(v, q, u, alpha, beta, f));
                         return make_sample(obs, 1.0, norm2(v) + r * r + norm2(U));
                     });
}

BoundReport check_bound_hybrid_equal(const KernelFrame& f, int alpha, int n) {
    const double l = f.global.l, g = f.species.gamma;
    return run_bound("k_M2_hybrid_equal_weighted", f, n, {8.0, 8.0, 8.0, 8.0, 8.0, 8.0}, [&](const std::vector<double>& p) {
        const Vec3 v{p[0], p[1], p[2]}, U{p[3], p[4], p[5]};
        const double r = len(U);
        if (!(r > 0.0)) return Sample{};
        const double obs = weight_ratio(v, add(v, U), l) * std::abs(k_M2_hybrid_equal(v, U, alpha, f));
        // The decaying component of v is the one along u_perp.
        const double va = dot(v, U) / r;
        return make_sample(obs, std::pow(1.0 + len(v) + r, g - 1.0) / r, r * r + va * va);
    });
}

double integrated_kernel(int kind, double vn, int alpha, int beta, const KernelFrame& f) {
    if (kind != 0 && kind != 1) throw ConfigError("integrated_kernel: kind must be 0 or 1");
    if (!(vn > 0.0)) throw DomainError("integrated_kernel: |v| must be positive");
    const int b = kind == 0 ? beta : alpha;
    const double ma = f.species.m[alpha], mb = f.species.m[b], th = f.global.theta_M, l = f.global.l;
    const double sc = std::sqrt(c_bar(f)), dm = (mb - ma) / (ma + mb);
    const double shift = kind == 0 ? 2.0 * mb / (ma + mb) : 1.0;
    // Gaussian in a = v . e at fixed r: center and width from the parallel exponent.
    const double p1 = 0.5 * (1.0 + sc), p2 = 0.5 * (1.0 - sc);
    const double q1 = 0.5 + 0.5 * sc * dm, q2 = 0.5 - 0.5 * sc * dm;
    const double A2 = mb / (4.0 * th) * (p1 * p1 + p2 * p2);
    const double center = -(p1 * q1 + p2 * q2) / (p1 * p1 + p2 * p2);
    const double half = 10.0 / std::sqrt(A2);

    auto inner = [&](double r) {
        const double lo = std::max(-vn, center * r - half), hi = std::min(vn, center * r + half);
        auto fa = [&](double a) {
            const double aq = std::sqrt(std::max(0.0, vn * vn - a * a));
            const double k = kind == 0 ? typical_reduced(a, aq, r, alpha, b, f) : equal_reduced(a, aq, r, alpha, f);
            const double shifted = std::sqrt(vn * vn + 2.0 * shift * r * a + shift * shift * r * r);
            return std::abs(k) * std::pow((1.0 + vn) / (1.0 + shifted), l);
        };
        return r * r * integrate(fa, lo, hi, {center * r}, 1e-7, 1);
    };
    const double rmax = 40.0;
    return 2.0 * pi / vn * integrate(inner, 0.0, rmax, {1.0, 4.0, 10.0, 20.0}, 1e-6, 2);
}

BoundReport check_integrated_decay(const KernelFrame& f, int kind, int alpha, int beta, double tolerance) {
    f.validate();
    const std::vector<double> vs{2.0, 2.5, 3.2, 4.0, 5.0, 6.3, 8.0, 10.0};
    std::vector<double> lx(vs.size()), ly(vs.size());
    parallel_chunks(vs.size(), vs.size(), [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            lx[i] = std::log(vs[i]);
            ly[i] = std::log(integrated_kernel(kind, vs[i], alpha, beta, f));
        }
    });
    const LinearFit fit = linear_fit(lx, ly);
    BoundReport rep;
    rep.bound_id = kind == 0 ? "integrated_decay_typical" : "integrated_decay_hybrid_equal";
    rep.gamma = f.species.gamma;
    rep.masses = f.species.m;
    rep.n_samples = static_cast<int>(vs.size());
    double C = 0.0;
    for (std::size_t i = 0; i < vs.size(); ++i) C = std::max(C, std::exp(ly[i] - (f.species.gamma - 2.0) * lx[i]));
    rep.max_ratio = C;
    rep.fitted_exponents = {fit.slope};
    rep.half_widths = {1.96 * fit.se};
    rep.tolerance = tolerance;
    rep.pass = std::isfinite(C) && std::abs(fit.slope - (f.species.gamma - 2.0)) <= tolerance;
    return rep;
}

double k_singular_at(const Vec3& v, int alpha, const SpeciesFunction& g, const KernelFrame& f, const AngularRule& rule,
                     int n_radial) {
    const auto& s = f.species;
    const double m = f.cutoff.m, gam = s.gamma, l = f.global.l;
    // Radial nodes carry rho^{gamma+2} chi(rho) d rho; [0, m] uses t = (rho/m)^{gamma+3}.
    std::vector<double> rho, wr;
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n_radial);
    for (int i = 0; i < n_radial; ++i) {
        double x, w;
        gsl_integration_glfixed_point(0.0, 1.0, i, &x, &w, t);
        rho.push_back(m * std::pow(x, 1.0 / (gam + 3.0)));
        wr.push_back(w * std::pow(m, gam + 3.0) / (gam + 3.0));
    }
    for (int i = 0; i < n_radial; ++i) {
        double x, w;
        gsl_integration_glfixed_point(m, 2.0 * m, i, &x, &w, t);
        rho.push_back(x);
        wr.push_back(w * std::pow(x, gam + 2.0) * chi(x, f.cutoff));
    }
    gsl_integration_glfixed_table_free(t);
    const AngularRule half = rule.hemisphere();
    auto sqmu = [&](int a, const Vec3& x) { return std::exp(0.5 * log_mu_M(f, a, x)); };
    auto mud = [&](int a, const Vec3& x) { return std::exp(log_mu_delta(f, a, x)); };
    auto gw = [&](int a, const Vec3& x) { return g(a, x) / weight_w(x, l); };

    const double mu_d_v = mud(alpha, v);
    double total = 0.0;
    for (int beta = 0; beta < 2; ++beta) {
        const double cphi = s.C_phi[alpha][beta];
        double acc = 0.0;
        for (std::size_t k = 0; k < rho.size(); ++k) {
            for (std::size_t d = 0; d < rule.size(); ++d) {
                const Vec3& dir = rule.dirs[d];
                const Vec3 vs = add(v, dir, rho[k]);
                const double loss = mu_d_v * sqmu(beta, vs) * gw(beta, vs);
                double inner = 0.0;
                for (std::size_t q = 0; q < half.size(); ++q) {
                    const Vec3& om = half.dirs[q];
                    const double b = s.b(dot(dir, om));
                    if (b == 0.0) continue;
                    const auto [vp, vsp] = post_collision(v, vs, om, s.m[alpha], s.m[beta]);
                    const double gain = mud(alpha, vp) * sqmu(beta, vsp) * gw(beta, vsp) +
                                        mud(beta, vsp) * sqmu(alpha, vp) * gw(alpha, vp);
                    inner += half.weights[q] * b * (loss - gain);
                }
                acc += wr[k] * rule.weights[d] * inner;
            }
        }
        total += cphi * acc;
    }
    return weight_w(v, l) / sqmu(alpha, v) * total;
}

SingularResult apply_K_singular(const DistributionField& g, const KernelFrame& f, const VelocityGrid& grid,
                                const AngularRule& rule) {
    f.validate();
    if (g.A.size() != grid.size() || g.B.size() != grid.size()) throw ShapeError("apply_K_singular: field size");
    SingularResult res;
    res.out.frame = FrameTag::Weighted;
    res.out.A.assign(grid.size(), 0.0);
    res.out.B.assign(grid.size(), 0.0);
    double gsup = 0.0;
    for (double x : g.A) gsup = std::max(gsup, std::abs(x));
    for (double x : g.B) gsup = std::max(gsup, std::abs(x));
    if (gsup == 0.0) return res;
    const SpeciesFunction gf = [&](int a, const Vec3& x) { return interp_trilinear(g.species(a), grid, x); };
    const double gam = f.species.gamma;
    std::vector<double> ratio(grid.size(), 0.0);
    parallel_chunks(grid.size(), 64, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Vec3 v = grid.node(k);
            const double br = std::pow(1.0 + norm2(v), 0.5 * gam);
            res.out.A[k] = k_singular_at(v, 0, gf, f, rule);
            res.out.B[k] = k_singular_at(v, 1, gf, f, rule);
            ratio[k] = std::max(std::abs(res.out.A[k]), std::abs(res.out.B[k])) / br;
        }
    });
    res.sup_ratio = *std::max_element(ratio.begin(), ratio.end()) / gsup;
    return res;
}

BoundReport check_singular_scaling(const KernelFrame& f0, const std::vector<double>& ms, const AngularRule& rule,
                                   double tolerance) {
    f0.validate();
    if (ms.size() < 2) throw ConfigError("singular scaling: need at least two cutoff radii");
    const Vec3 dir{1.0 / std::sqrt(14.0), 2.0 / std::sqrt(14.0), 3.0 / std::sqrt(14.0)};
    const std::vector<double> radii{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    const SpeciesFunction one = [](int, const Vec3&) { return 1.0; };
    const double gam = f0.species.gamma;
    std::vector<double> lx(ms.size()), ly(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        KernelFrame f = f0;
        f.cutoff.m = ms[i];
        f.validate();
        std::vector<double> sup(radii.size() * 2, 0.0);
        parallel_chunks(sup.size(), sup.size(), [&](std::size_t, std::size_t b, std::size_t e) {
            for (std::size_t j = b; j < e; ++j) {
                const Vec3 v = scale(dir, radii[j / 2]);
                sup[j] = std::abs(k_singular_at(v, static_cast<int>(j % 2), one, f, rule)) /
                         std::pow(1.0 + norm2(v), 0.5 * gam);
            }
        });
        lx[i] = std::log(ms[i]);
        ly[i] = std::log(*std::max_element(sup.begin(), sup.end()));
    }
    const LinearFit fit = linear_fit(lx, ly);
    BoundReport rep;
    rep.bound_id = "singular_part_m_scaling";
    rep.gamma = gam;
    rep.masses = f0.species.m;
    rep.n_samples = static_cast<int>(ms.size() * radii.size() * 2);
    double C = 0.0;
    for (std::size_t i = 0; i < ms.size(); ++i) C = std::max(C, std::exp(ly[i] - (3.0 + gam) * lx[i]));
    rep.max_ratio = C;
    rep.fitted_exponents = {fit.slope};
    rep.half_widths = {1.96 * fit.se};
    rep.tolerance = tolerance;
    rep.pass = std::isfinite(C) && std::abs(fit.slope - (3.0 + gam)) <= tolerance;
    return rep;
}

} // namespace mixkin
