#include "mixkin/fluid.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/parallel.hpp"

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <random>

namespace mixkin {

namespace {

constexpr double pi = std::numbers::pi;
using Cons = std::array<double, 6>;  // n_A, n_B, rho u, E

// Neighbour of cell c along axis a at offset s.
std::size_t neighbour(const SpatialGrid& g, std::size_t c, int a, int s) {
    const int M = g.M();
    if (g.dim() == 1) return g.index(static_cast<int>(c) + s);
    int idx[3] = {static_cast<int>(c / (static_cast<std::size_t>(M) * M)), static_cast<int>((c / M) % M),
                  static_cast<int>(c % M)};
    idx[a] += s;
    return g.index(idx[0], idx[1], idx[2]);
}

void check_same_grid(const SpatialGrid& a, const SpatialGrid& b) {
    if (a.M() != b.M() || a.dim() != b.dim() || a.Lx() != b.Lx()) throw ShapeError("fluid: grid mismatch");
}

Cons to_cons(const FluidState& s, std::size_t c) {
    const double rho = s.rho(c);
    const double u2 = s.u[0][c] * s.u[0][c] + s.u[1][c] * s.u[1][c] + s.u[2][c] * s.u[2][c];
    return {s.nA[c], s.nB[c], rho * s.u[0][c], rho * s.u[1][c], rho * s.u[2][c],
            0.5 * rho * u2 + 1.5 * s.n(c) * s.theta[c]};
}

// Primitive (n_A, n_B, u, theta) from conserved values.
std::array<double, 6> to_prim(const Cons& U, const std::array<double, 2>& m) {
    const double rho = m[0] * U[0] + m[1] * U[1];
    const double u0 = U[2] / rho, u1 = U[3] / rho, u2 = U[4] / rho;
    const double th = (U[5] - 0.5 * rho * (u0 * u0 + u1 * u1 + u2 * u2)) / (1.5 * (U[0] + U[1]));
    return {U[0], U[1], u0, u1, u2, th};
}

Cons prim_to_cons(const std::array<double, 6>& W, const std::array<double, 2>& m) {
    const double rho = m[0] * W[0] + m[1] * W[1];
    const double u2 = W[2] * W[2] + W[3] * W[3] + W[4] * W[4];
    return {W[0], W[1], rho * W[2], rho * W[3], rho * W[4], 0.5 * rho * u2 + 1.5 * (W[0] + W[1]) * W[5]};
}

Cons flux(const std::array<double, 6>& W, const std::array<double, 2>& m, int a, double& speed) {
    const double rho = m[0] * W[0] + m[1] * W[1], n = W[0] + W[1], p = n * W[5];
    const double ua = W[2 + a];
    const Cons U = prim_to_cons(W, m);
    speed = std::abs(ua) + std::sqrt(5.0 * p / (3.0 * rho));
    Cons F{W[0] * ua, W[1] * ua, U[2] * ua, U[3] * ua, U[4] * ua, (U[5] + p) * ua};
    F[2 + a] += p;
    return F;
}

double limited(double dl, double dr, Limiter lim) {
    if (lim == Limiter::None) return 0.5 * (dl + dr);
    if (dl * dr <= 0.0) return 0.0;
    const double s = dl > 0.0 ? 1.0 : -1.0;
    return s * std::min({2.0 * std::abs(dl), 2.0 * std::abs(dr), 0.5 * std::abs(dl + dr)});
}

struct FvScheme {
    SpatialGrid grid;
    std::array<double, 2> m;
    EulerOptions opt;

    // dU/dt from face fluxes.
    std::vector<Cons> rhs(const std::vector<Cons>& U) const {
        const std::size_t n = U.size();
        std::vector<std::array<double, 6>> W(n);
        for (std::size_t c = 0; c < n; ++c) W[c] = to_prim(U[c], m);
        std::vector<Cons> out(n, Cons{});
        const double inv = 1.0 / grid.dx();
        for (int a = 0; a < grid.dim(); ++a) {
            // Flux through the face between c and its right neighbour.
            std::vector<Cons> F(n);
            for (std::size_t c = 0; c < n; ++c) {
                const std::size_t cl = neighbour(grid, c, a, -1), cr = neighbour(grid, c, a, 1),
                                  crr = neighbour(grid, c, a, 2);
                std::array<double, 6> WL, WR;
                for (int k = 0; k < 6; ++k) {
                    const double sl = limited(W[c][k] - W[cl][k], W[cr][k] - W[c][k], opt.limiter);
                    const double sr = limited(W[cr][k] - W[c][k], W[crr][k] - W[cr][k], opt.limiter);
                    WL[k] = W[c][k] + 0.5 * sl;
                    WR[k] = W[cr][k] - 0.5 * sr;
                }
                double sL, sR;
                const Cons FL = flux(WL, m, a, sL), FR = flux(WR, m, a, sR);
                const Cons UL = prim_to_cons(WL, m), UR = prim_to_cons(WR, m);
                const double lam = std::max(sL, sR);
                for (int k = 0; k < 6; ++k) F[c][k] = 0.5 * (FL[k] + FR[k]) - 0.5 * lam * (UR[k] - UL[k]);
            }
            for (std::size_t c = 0; c < n; ++c) {
                const std::size_t cl = neighbour(grid, c, a, -1);
                for (int k = 0; k < 6; ++k) out[c][k] -= (F[c][k] - F[cl][k]) * inv;
            }
        }
        return out;
    }

    double max_speed(const std::vector<Cons>& U) const {
        double s = 0.0;
        for (const auto& Uc : U) {
            const auto W = to_prim(Uc, m);
            const double rho = m[0] * W[0] + m[1] * W[1];
            const double c = std::sqrt(5.0 * (W[0] + W[1]) * W[5] / (3.0 * rho));
            for (int a = 0; a < grid.dim(); ++a) s = std::max(s, std::abs(W[2 + a]) + c);
        }
        return s;
    }

    void check_positive(const std::vector<Cons>& U, double t) const {
        for (std::size_t c = 0; c < U.size(); ++c) {
            const auto W = to_prim(U[c], m);
            if (!(W[0] > 0.0 && W[1] > 0.0 && W[5] > 0.0) || !std::isfinite(W[5]))
                throw NumericalError("euler: positivity lost at t = " + std::to_string(t) + " in cell " +
                                     std::to_string(c));
        }
    }

    // One SSP-RK2 step.
    std::vector<Cons> step(const std::vector<Cons>& U, double dt) const {
        const auto k1 = rhs(U);
        std::vector<Cons> U1(U.size());
        for (std::size_t c = 0; c < U.size(); ++c)
            for (int k = 0; k < 6; ++k) U1[c][k] = U[c][k] + dt * k1[c][k];
        const auto k2 = rhs(U1);
        std::vector<Cons> out(U.size());
        for (std::size_t c = 0; c < U.size(); ++c)
            for (int k = 0; k < 6; ++k) out[c][k] = 0.5 * U[c][k] + 0.5 * (U1[c][k] + dt * k2[c][k]);
        return out;
    }
};

std::vector<Cons> cons_of(const FluidState& s) {
    std::vector<Cons> U(s.size());
    for (std::size_t c = 0; c < U.size(); ++c) U[c] = to_cons(s, c);
    return U;
}

FluidState state_of(const std::vector<Cons>& U, const SpatialGrid& g, const std::array<double, 2>& m) {
    FluidState s(g, m);
    for (std::size_t c = 0; c < U.size(); ++c) {
        const auto W = to_prim(U[c], m);
        s.nA[c] = W[0];
        s.nB[c] = W[1];
        for (int d = 0; d < 3; ++d) s.u[d][c] = W[2 + d];
        s.theta[c] = W[5];
    }
    return s;
}

double deviation(const FluidState& s) {
    double d = 0.0;
    for (std::size_t c = 0; c < s.size(); ++c) {
        d = std::max({d, std::abs(s.nA[c] - 1.0), std::abs(s.nB[c] - 1.0), std::abs(s.theta[c] - 1.0)});
        for (int k = 0; k < 3; ++k) d = std::max(d, std::abs(s.u[k][c]));
    }
    return d;
}

void check_times(const std::vector<double>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] >= 0.0) || !std::isfinite(t[i])) throw ConfigError("sample times must be finite and >= 0");
        if (i > 0 && t[i] < t[i - 1]) throw ConfigError("sample times must be nondecreasing");
    }
}

// Real-to-complex transforms on the periodic grid.
class Spectral {
public:
    explicit Spectral(const SpatialGrid& g) : g_(g) {
        const int M = g.M();
        if (g.dim() == 1) {
            nc_ = static_cast<std::size_t>(M / 2 + 1);
        } else {
            nc_ = static_cast<std::size_t>(M) * M * (M / 2 + 1);
        }
        nr_ = g.cells();
    }

    std::vector<std::complex<double>> forward(const std::vector<double>& f) const {
        std::vector<double> in(f);
        std::vector<std::complex<double>> out(nc_);
        const int M = g_.M();
        fftw_plan p = g_.dim() == 1
                          ? fftw_plan_dft_r2c_1d(M, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE)
                          : fftw_plan_dft_r2c_3d(M, M, M, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                                 FFTW_ESTIMATE);
        fftw_execute(p);
        fftw_destroy_plan(p);
        return out;
    }

    std::vector<double> backward(const std::vector<std::complex<double>>& F) const {
        std::vector<std::complex<double>> in(F);
        std::vector<double> out(nr_);
        const int M = g_.M();
        fftw_plan p = g_.dim() == 1
                          ? fftw_plan_dft_c2r_1d(M, reinterpret_cast<fftw_complex*>(in.data()), out.data(), FFTW_ESTIMATE)
                          : fftw_plan_dft_c2r_3d(M, M, M, reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                                 FFTW_ESTIMATE);
        fftw_execute(p);
        fftw_destroy_plan(p);
        for (double& x : out) x /= static_cast<double>(nr_);
        return out;
    }

    std::size_t modes() const { return nc_; }

    // Wavevector of mode q; nyquist set when any component sits on the Nyquist frequency.
    Vec3 wavevector(std::size_t q, bool& nyquist) const {
        const int M = g_.M();
        const double k0 = 2.0 * pi / g_.Lx();
        auto freq = [&](int i) { return i <= M / 2 ? i : i - M; };
        nyquist = false;
        if (g_.dim() == 1) {
            const int i = static_cast<int>(q);
            nyquist = M % 2 == 0 && i == M / 2;
            return {k0 * i, 0.0, 0.0};
        }
        const int nz = M / 2 + 1;
        const int l = static_cast<int>(q % nz);
        const int j = static_cast<int>((q / nz) % M);
        const int i = static_cast<int>(q / (static_cast<std::size_t>(nz) * M));
        if (M % 2 == 0) nyquist = i == M / 2 || j == M / 2 || l == M / 2;
        return {k0 * freq(i), k0 * freq(j), k0 * l};
    }

    // Multiplicity of mode q in the full spectrum.
    double multiplicity(std::size_t q) const {
        const int M = g_.M();
        const int nz = M / 2 + 1;
        const int l = g_.dim() == 1 ? static_cast<int>(q) : static_cast<int>(q % nz);
        if (l == 0 || (M % 2 == 0 && l == M / 2)) return 1.0;
        return 2.0;
    }

    double volume() const { return std::pow(g_.Lx(), g_.dim()); }
    std::size_t cells() const { return nr_; }

private:
    SpatialGrid g_;
    std::size_t nc_ = 0, nr_ = 0;
};

} // namespace

FluidState::FluidState(const SpatialGrid& g, std::array<double, 2> masses) : grid(g), m(masses) {
    const std::size_t n = g.cells();
    nA.assign(n, 0.0);
    nB.assign(n, 0.0);
    theta.assign(n, 0.0);
    for (auto& c : u) c.assign(n, 0.0);
}

MaxwellParams FluidState::local(int alpha, std::size_t c) const {
    return MaxwellParams{alpha == 0 ? nA[c] : nB[c], {u[0][c], u[1][c], u[2][c]}, theta[c]};
}

void FluidState::validate() const {
    const std::size_t n = grid.cells();
    if (nA.size() != n || nB.size() != n || theta.size() != n || u[0].size() != n || u[1].size() != n ||
        u[2].size() != n)
        throw ShapeError("fluid state: field sizes do not match the grid");
    for (std::size_t c = 0; c < n; ++c)
        if (!(nA[c] > 0.0 && nB[c] > 0.0 && theta[c] > 0.0))
            throw DomainError("fluid state: non-positive density or temperature in cell " + std::to_string(c));
}

FluidState FluidState::constant(const SpatialGrid& g, std::array<double, 2> masses) {
    FluidState s(g, masses);
    std::fill(s.nA.begin(), s.nA.end(), 1.0);
    std::fill(s.nB.begin(), s.nB.end(), 1.0);
    std::fill(s.theta.begin(), s.theta.end(), 1.0);
    return s;
}

std::vector<double> central_diff(const std::vector<double>& f, const SpatialGrid& g, int axis) {
    std::vector<double> out(f.size(), 0.0);
    if (axis >= g.dim()) return out;
    const double inv = 0.5 / g.dx();
    for (std::size_t c = 0; c < f.size(); ++c)
        out[c] = (f[neighbour(g, c, axis, 1)] - f[neighbour(g, c, axis, -1)]) * inv;
    return out;
}

FluidState euler_rhs(const FluidState& s) {
    s.validate();
    const auto& g = s.grid;
    const std::size_t n = s.size();
    FluidState r(g, s.m);
    for (int a = 0; a < g.dim(); ++a) {
        const auto dnA = central_diff(s.nA, g, a), dnB = central_diff(s.nB, g, a), dth = central_diff(s.theta, g, a);
        std::array<std::vector<double>, 3> du;
        for (int k = 0; k < 3; ++k) du[k] = central_diff(s.u[k], g, a);
        for (std::size_t c = 0; c < n; ++c) {
            const double ua = s.u[a][c], rho = s.rho(c);
            r.nA[c] -= ua * dnA[c] + s.nA[c] * du[a][c];
            r.nB[c] -= ua * dnB[c] + s.nB[c] * du[a][c];
            for (int k = 0; k < 3; ++k) r.u[k][c] -= ua * du[k][c];
            r.u[a][c] -= (s.n(c) * dth[c] + s.theta[c] * (dnA[c] + dnB[c])) / rho;
            r.theta[c] -= ua * dth[c] + 2.0 / 3.0 * s.theta[c] * du[a][c];
        }
    }
    return r;
}

Trajectory euler_solve(const FluidState& init, const std::vector<double>& sample_times, const EulerOptions& opt) {
    init.validate();
    check_times(sample_times);
    if (!(opt.cfl > 0.0 && opt.cfl <= 1.0)) throw ConfigError("euler: CFL must lie in (0, 1]");
    const FvScheme fv{init.grid, init.m, opt};
    std::vector<Cons> U = cons_of(init);
    Trajectory tr;
    double t = 0.0;
    for (double ts : sample_times) {
        while (t < ts) {
            const double dt = std::min(opt.cfl * init.grid.dx() / fv.max_speed(U), ts - t);
            U = fv.step(U, dt);
            t = (ts - t <= dt) ? ts : t + dt;
            ++tr.steps;
            fv.check_positive(U, t);
        }
        tr.times.push_back(ts);
        tr.states.push_back(state_of(U, init.grid, init.m));
        tr.max_deviation = std::max(tr.max_deviation, deviation(tr.states.back()));
    }
    return tr;
}

FluidState perturbed_state(const SpatialGrid& g, std::array<double, 2> masses, double delta,
                           const std::function<std::array<double, 6>(const Vec3&)>& fluct) {
    FluidState s(g, masses);
    for (std::size_t c = 0; c < g.cells(); ++c) {
        Vec3 x{0.0, 0.0, 0.0};
        if (g.dim() == 1) {
            x[0] = g.x(static_cast<int>(c));
        } else {
            const int M = g.M();
            x = {g.x(static_cast<int>(c / (static_cast<std::size_t>(M) * M))), g.x(static_cast<int>((c / M) % M)),
                 g.x(static_cast<int>(c % M))};
        }
        const auto f = fluct(x);
        s.nA[c] = 1.0 + delta * f[0];
        s.nB[c] = 1.0 + delta * f[1];
        for (int k = 0; k < 3; ++k) s.u[k][c] = delta * f[2 + k];
        s.theta[c] = 1.0 + delta * f[5];
    }
    return s;
}

std::array<double, 36> symmetrizer_product(const FluidState& s, std::size_t c, int j) {
    if (j < 0 || j > 2) throw DomainError("symmetrizer: direction must be 0, 1 or 2");
    const double nA = s.nA[c], nB = s.nB[c], th = s.theta[c], rho = s.rho(c), n = s.n(c), uj = s.u[j][c];
    Eigen::Matrix<double, 6, 6> A0 = Eigen::Matrix<double, 6, 6>::Zero(), Aj = A0;
    A0(0, 0) = th / nA;
    A0(1, 1) = th / nB;
    for (int k = 0; k < 3; ++k) A0(2 + k, 2 + k) = rho;
    A0(5, 5) = 1.5 * n / th;
    // Primitive-variable flux Jacobian along e_j.
    Aj(0, 0) = uj;
    Aj(0, 2 + j) = nA;
    Aj(1, 1) = uj;
    Aj(1, 2 + j) = nB;
    for (int k = 0; k < 3; ++k) Aj(2 + k, 2 + k) = uj;
    Aj(2 + j, 0) = th / rho;
    Aj(2 + j, 1) = th / rho;
    Aj(2 + j, 5) = n / rho;
    Aj(5, 2 + j) = 2.0 / 3.0 * th;
    Aj(5, 5) = uj;
    const Eigen::Matrix<double, 6, 6> P = A0 * Aj;
    std::array<double, 36> out;
    for (int r = 0; r < 6; ++r)
        for (int q = 0; q < 6; ++q) out[r * 6 + q] = P(r, q);
    return out;
}

SymmetrizerReport symmetrizer_check(const FluidState& s, int samples, std::uint64_t seed) {
    s.validate();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
    SymmetrizerReport rep;
    rep.min_eig_A0 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
        const std::size_t c = pick(rng);
        for (int j = 0; j < 3; ++j) {
            const auto P = symmetrizer_product(s, c, j);
            double scale = 0.0;
            for (double x : P) scale = std::max(scale, std::abs(x));
            for (int r = 0; r < 6; ++r)
                for (int q = r + 1; q < 6; ++q)
                    rep.max_asymmetry = std::max(rep.max_asymmetry, std::abs(P[r * 6 + q] - P[q * 6 + r]) / scale);
        }
        const double e = std::min({s.theta[c] / s.nA[c], s.theta[c] / s.nB[c], s.rho(c), 1.5 * s.n(c) / s.theta[c]});
        rep.min_eig_A0 = std::min(rep.min_eig_A0, e);
    }
    return rep;
}

AcousticState::AcousticState(const SpatialGrid& g, std::array<double, 2> masses) : grid(g), m(masses) {
    const std::size_t n = g.cells();
    sA.assign(n, 0.0);
    sB.assign(n, 0.0);
    theta.assign(n, 0.0);
    for (auto& c : u) c.assign(n, 0.0);
}

void AcousticState::check_shape() const {
    const std::size_t n = grid.cells();
    if (sA.size() != n || sB.size() != n || theta.size() != n || u[0].size() != n || u[1].size() != n ||
        u[2].size() != n)
        throw ShapeError("acoustic state: fields must be periodic samples on the grid");
    for (const auto* f : {&sA, &sB, &theta, &u[0], &u[1], &u[2]})
        for (double x : *f)
            if (!std::isfinite(x)) throw DomainError("acoustic state: non-finite value");
}

double acoustic_speed(std::array<double, 2> m) { return std::sqrt(10.0 / (3.0 * (m[0] + m[1]))); }

AcousticState acoustic_solve(const AcousticState& init, double t) {
    init.check_shape();
    const Spectral sp(init.grid);
    const double M = init.m[0] + init.m[1], c = acoustic_speed(init.m);
    using C = std::complex<double>;
    auto SA = sp.forward(init.sA), SB = sp.forward(init.sB), TH = sp.forward(init.theta);
    std::array<std::vector<C>, 3> U{sp.forward(init.u[0]), sp.forward(init.u[1]), sp.forward(init.u[2])};
    const C I(0.0, 1.0);
    for (std::size_t q = 0; q < sp.modes(); ++q) {
        bool nyq = false;
        const Vec3 k = sp.wavevector(q, nyq);
        const double kn = std::sqrt(norm2(k));
        if (nyq || kn == 0.0) continue;
        const Vec3 e{k[0] / kn, k[1] / kn, k[2] / kn};
        const double w = c * kn;
        const C a0 = e[0] * U[0][q] + e[1] * U[1][q] + e[2] * U[2][q];
        const C q0 = 2.0 * TH[q] + SA[q] + SB[q];
        const double cs = std::cos(w * t), sn = std::sin(w * t);
        const C a = a0 * cs - I * kn * q0 / (M * w) * sn;
        const C integral = a0 * sn / w - I * kn * q0 / (M * w * w) * (1.0 - cs);
        SA[q] -= I * kn * integral;
        SB[q] -= I * kn * integral;
        TH[q] -= 2.0 / 3.0 * I * kn * integral;
        for (int d = 0; d < 3; ++d) U[d][q] += (a - a0) * e[d];
    }
    AcousticState out(init.grid, init.m);
    out.sA = sp.backward(SA);
    out.sB = sp.backward(SB);
    out.theta = sp.backward(TH);
    for (int d = 0; d < 3; ++d) out.u[d] = sp.backward(U[d]);
    return out;
}

double acoustic_dispersion_defect(const SpatialGrid& g, std::array<double, 2> m) {
    const double c = acoustic_speed(m);
    const int M = g.M();
    double worst = 0.0;
    for (int j = 1; 2 * j < M; ++j) {
        const double k = 2.0 * pi * j / g.Lx();
        AcousticState a(g, m);
        for (std::size_t q = 0; q < g.cells(); ++q) {
            const int i = g.dim() == 1 ? static_cast<int>(q) : static_cast<int>(q / (static_cast<std::size_t>(M) * M));
            a.u[0][q] = std::cos(k * g.x(i));
        }
        const double t = 0.5 * pi / (c * k);
        const AcousticState b = acoustic_solve(a, t);
        double num = 0.0, den = 0.0;
        for (std::size_t q = 0; q < g.cells(); ++q) {
            num += b.u[0][q] * a.u[0][q];
            den += a.u[0][q] * a.u[0][q];
        }
        const double w = std::acos(std::clamp(num / den, -1.0, 1.0)) / t;
        worst = std::max(worst, std::abs(w * w - c * c * k * k) / (c * c * k * k));
    }
    return worst;
}

double acoustic_energy(const AcousticState& s, int l) {
    s.check_shape();
    if (l < 0) throw DomainError("acoustic_energy: derivative order must be >= 0");
    const Spectral sp(s.grid);
    const double M = s.m[0] + s.m[1];
    std::vector<double> n(s.sA.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = s.sA[i] + s.sB[i];
    const auto N = sp.forward(n), TH = sp.forward(s.theta);
    const std::array<std::vector<std::complex<double>>, 3> U{sp.forward(s.u[0]), sp.forward(s.u[1]),
                                                             sp.forward(s.u[2])};
    double e = 0.0;
    for (std::size_t q = 0; q < sp.modes(); ++q) {
        bool nyq = false;
        const Vec3 k = sp.wavevector(q, nyq);
        if (nyq && l > 0) continue;
        const double kw = std::pow(norm2(k), l);
        const double dens = std::norm(U[0][q]) + std::norm(U[1][q]) + std::norm(U[2][q]) + 3.0 * std::norm(TH[q]) / M +
                            std::norm(N[q]) / (2.0 * M);
        e += sp.multiplicity(q) * kw * dens;
    }
    const double nc = static_cast<double>(sp.cells());
    return e * sp.volume() / (nc * nc);
}

std::array<std::vector<double>, 3> acoustic_vorticity(const AcousticState& s) {
    s.check_shape();
    const Spectral sp(s.grid);
    using C = std::complex<double>;
    const std::array<std::vector<C>, 3> U{sp.forward(s.u[0]), sp.forward(s.u[1]), sp.forward(s.u[2])};
    std::array<std::vector<C>, 3> W;
    for (auto& w : W) w.assign(sp.modes(), C(0.0, 0.0));
    const C I(0.0, 1.0);
    for (std::size_t q = 0; q < sp.modes(); ++q) {
        bool nyq = false;
        const Vec3 k = sp.wavevector(q, nyq);
        if (nyq) continue;
        W[0][q] = I * (k[1] * U[2][q] - k[2] * U[1][q]);
        W[1][q] = I * (k[2] * U[0][q] - k[0] * U[2][q]);
        W[2][q] = I * (k[0] * U[1][q] - k[1] * U[0][q]);
    }
    return {sp.backward(W[0]), sp.backward(W[1]), sp.backward(W[2])};
}

Burnett burnett_vectors(const MaxwellParams& p, double m, const VelocityGrid& grid) {
    p.validate();
    Burnett b;
    const std::size_t n = grid.size();
    for (auto& row : b.A)
        for (auto& f : row) f.assign(n, 0.0);
    for (auto& f : b.B) f.assign(n, 0.0);
    const double sq = std::sqrt(m / p.theta);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 v = grid.node(k);
        const Vec3 c{v[0] - p.u[0], v[1] - p.u[1], v[2] - p.u[2]};
        const double c2 = norm2(c);
        const double smu = std::sqrt(maxwellian(p, m, v));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j)
                b.A[i][j][k] = (m * c[i] * c[j] / p.theta - (i == j ? m * c2 / (3.0 * p.theta) : 0.0)) * smu;
            b.B[i][k] = 0.5 * c[i] * sq * (m * c2 / p.theta - 5.0) * smu;
        }
    }
    return b;
}

LinearSources linear_euler_sources(const std::vector<DistributionField>& fk, const FluidState& bg,
                                   const VelocityGrid& vgrid) {
    bg.validate();
    const std::size_t n = bg.size();
    if (fk.size() != n) throw ShapeError("linear_euler_sources: one fluctuation pair per cell required");
    // T^alpha_ij = theta/m a_ij and S^alpha_i = (theta/m)^{3/2} b_i + u_j theta/m a_ij, summed with weight m.
    std::array<std::array<std::vector<double>, 3>, 3> T;
    std::array<std::vector<double>, 3> S;
    for (auto& row : T)
        for (auto& f : row) f.assign(n, 0.0);
    for (auto& f : S) f.assign(n, 0.0);
    const double h3 = vgrid.weight();
    parallel_chunks(n, std::min<std::size_t>(n, 64), [&](std::size_t, std::size_t b0, std::size_t e0) {
        for (std::size_t c = b0; c < e0; ++c) {
            if (fk[c].A.size() != vgrid.size() || fk[c].B.size() != vgrid.size())
                throw ShapeError("linear_euler_sources: fluctuation size mismatch");
            for (int a = 0; a < 2; ++a) {
                const double m = bg.m[a], th = bg.theta[c];
                const auto f = fk[c].species(a);
                double any = 0.0;
                for (double x : f) any = std::max(any, std::abs(x));
                if (any == 0.0) continue;
                const Burnett bu = burnett_vectors(bg.local(a, c), m, vgrid);
                std::array<std::array<double, 3>, 3> A{};
                std::array<double, 3> B{};
                for (std::size_t k = 0; k < f.size(); ++k) {
                    for (int i = 0; i < 3; ++i) {
                        for (int j = 0; j < 3; ++j) A[i][j] += bu.A[i][j][k] * f[k];
                        B[i] += bu.B[i][k] * f[k];
                    }
                }
                for (int i = 0; i < 3; ++i) {
                    double s = std::pow(th / m, 1.5) * B[i] * h3;
                    for (int j = 0; j < 3; ++j) {
                        T[i][j][c] += th * A[i][j] * h3;  // m * (theta / m) a_ij
                        s += bg.u[j][c] * th / m * A[i][j] * h3;
                    }
                    S[i][c] += m * s;
                }
            }
        }
    });
    LinearSources src;
    for (auto& f : src.H) f.assign(n, 0.0);
    src.g.assign(n, 0.0);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < bg.grid.dim(); ++j) {
            const auto d = central_diff(T[i][j], bg.grid, j);
            for (std::size_t c = 0; c < n; ++c) src.H[i][c] -= d[c];
        }
        if (i < bg.grid.dim()) {
            const auto d = central_diff(S[i], bg.grid, i);
            for (std::size_t c = 0; c < n; ++c) src.g[c] -= 2.0 * d[c];
        }
    }
    return src;
}

LinearState linear_euler_rhs(const LinearState& w, const FluidState& bg, const LinearSources* src) {
    check_same_grid(w.grid, bg.grid);
    const auto& g = bg.grid;
    const std::size_t n = bg.size();
    LinearState r(g, bg.m);
    std::vector<double> pA(n), pB(n), qA(n), qB(n), fluxA(n), fluxB(n);
    for (std::size_t c = 0; c < n; ++c) {
        pA[c] = bg.nA[c] * bg.theta[c];
        pB[c] = bg.nB[c] * bg.theta[c];
        qA[c] = (bg.nA[c] * w.theta[c] + 3.0 * bg.theta[c] * w.nA[c]) / 3.0;
        qB[c] = (bg.nB[c] * w.theta[c] + 3.0 * bg.theta[c] * w.nB[c]) / 3.0;
    }
    for (int a = 0; a < g.dim(); ++a) {
        for (std::size_t c = 0; c < n; ++c) {
            fluxA[c] = w.nA[c] * bg.u[a][c] + bg.nA[c] * w.u[a][c];
            fluxB[c] = w.nB[c] * bg.u[a][c] + bg.nB[c] * w.u[a][c];
        }
        const auto dfA = central_diff(fluxA, g, a), dfB = central_diff(fluxB, g, a);
        const auto dpA = central_diff(pA, g, a), dpB = central_diff(pB, g, a);
        const auto dqA = central_diff(qA, g, a), dqB = central_diff(qB, g, a);
        const auto dthb = central_diff(bg.theta, g, a), dthk = central_diff(w.theta, g, a);
        std::array<std::vector<double>, 3> dub, duk;
        for (int k = 0; k < 3; ++k) {
            dub[k] = central_diff(bg.u[k], g, a);
            duk[k] = central_diff(w.u[k], g, a);
        }
        for (std::size_t c = 0; c < n; ++c) {
            r.nA[c] -= dfA[c];
            r.nB[c] -= dfB[c];
            const double rho = bg.rho(c);
            r.u[a][c] += (w.nA[c] / bg.nA[c] * dpA[c] + w.nB[c] / bg.nB[c] * dpB[c] - dqA[c] - dqB[c]) / rho;
            for (int k = 0; k < 3; ++k) r.u[k][c] -= w.u[a][c] * dub[k][c] + bg.u[a][c] * duk[k][c];
            r.theta[c] -= 2.0 / 3.0 * (w.theta[c] * dub[a][c] + 3.0 * bg.theta[c] * duk[a][c]) +
                          bg.u[a][c] * dthk[c] + 3.0 * w.u[a][c] * dthb[c];
        }
    }
    if (src) {
        for (std::size_t c = 0; c < n; ++c) {
            const double rho = bg.rho(c), nn = bg.n(c);
            double uh = 0.0;
            for (int k = 0; k < 3; ++k) {
                r.u[k][c] += src->H[k][c] / rho;
                uh += w.u[k][c] * src->H[k][c];
            }
            r.theta[c] += (src->g[c] - 2.0 * uh) / nn;
        }
    }
    return r;
}

namespace {

LinearState axpy(const LinearState& x, double a, const LinearState& y) {
    LinearState r = x;
    for (std::size_t c = 0; c < x.size(); ++c) {
        r.nA[c] += a * y.nA[c];
        r.nB[c] += a * y.nB[c];
        r.theta[c] += a * y.theta[c];
        for (int k = 0; k < 3; ++k) r.u[k][c] += a * y.u[k][c];
    }
    return r;
}

} // namespace

LinearTrajectory linear_euler_solve(const LinearState& init, const FluidState& background0,
                                    const std::vector<double>& sample_times,
                                    const std::function<LinearSources(double, const FluidState&)>& sources,
                                    const EulerOptions& opt) {
    background0.validate();
    check_same_grid(init.grid, background0.grid);
    check_times(sample_times);
    const FvScheme fv{background0.grid, background0.m, opt};
    std::vector<Cons> U = cons_of(background0);
    LinearState w = init;
    LinearTrajectory tr;
    double t = 0.0;
    auto lrhs = [&](const LinearState& x, const FluidState& bg, double tt) {
        if (!sources) return linear_euler_rhs(x, bg, nullptr);
        const LinearSources src = sources(tt, bg);
        return linear_euler_rhs(x, bg, &src);
    };
    for (double ts : sample_times) {
        while (t < ts) {
            const double dt = std::min(opt.cfl * background0.grid.dx() / fv.max_speed(U), ts - t);
            const FluidState bg0 = state_of(U, background0.grid, background0.m);
            const auto k1U = fv.rhs(U);
            std::vector<Cons> U1(U.size());
            for (std::size_t c = 0; c < U.size(); ++c)
                for (int k = 0; k < 6; ++k) U1[c][k] = U[c][k] + dt * k1U[c][k];
            const LinearState w1 = axpy(w, dt, lrhs(w, bg0, t));
            const FluidState bg1 = state_of(U1, background0.grid, background0.m);
            const auto k2U = fv.rhs(U1);
            for (std::size_t c = 0; c < U.size(); ++c)
                for (int k = 0; k < 6; ++k) U[c][k] = 0.5 * U[c][k] + 0.5 * (U1[c][k] + dt * k2U[c][k]);
            const LinearState w2 = axpy(w1, dt, lrhs(w1, bg1, t + dt));
            w = axpy(w, 0.5, axpy(w2, -1.0, w));
            t = (ts - t <= dt) ? ts : t + dt;
            fv.check_positive(U, t);
        }
        tr.times.push_back(ts);
        tr.states.push_back(w);
        tr.background.push_back(state_of(U, background0.grid, background0.m));
    }
    return tr;
}

double symmetrizer_energy(const LinearState& w, const FluidState& bg) {
    check_same_grid(w.grid, bg.grid);
    double e = 0.0;
    for (std::size_t c = 0; c < bg.size(); ++c) {
        const double th = w.theta[c] / 3.0;
        e += bg.theta[c] / bg.nA[c] * w.nA[c] * w.nA[c] + bg.theta[c] / bg.nB[c] * w.nB[c] * w.nB[c] +
             1.5 * bg.n(c) / bg.theta[c] * th * th;
        for (int k = 0; k < 3; ++k) e += bg.rho(c) * w.u[k][c] * w.u[k][c];
    }
    return e * std::pow(bg.grid.dx(), bg.grid.dim());
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), &std::fclose);
    if (!f) throw ConfigError("cannot write " + path);
    std::fprintf(f.get(), "t,x,n_A,n_B,u1,u2,u3,theta\n");
    for (std::size_t s = 0; s < tr.states.size(); ++s) {
        const auto& st = tr.states[s];
        const int M = st.grid.M();
        for (std::size_t c = 0; c < st.size(); ++c) {
            const int i = st.grid.dim() == 1 ? static_cast<int>(c) : static_cast<int>(c / (static_cast<std::size_t>(M) * M));
            std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", tr.times[s], st.grid.x(i),
                         st.nA[c], st.nB[c], st.u[0][c], st.u[1][c], st.u[2][c], st.theta[c]);
        }
    }
}

nlohmann::json trajectory_manifest(const Trajectory& tr, const EulerOptions& opt, double delta, double gamma) {
    const auto& g = tr.states.empty() ? SpatialGrid(1.0, 2, 1) : tr.states.front().grid;
    const std::array<double, 2> m = tr.states.empty() ? std::array<double, 2>{0.0, 0.0} : tr.states.front().m;
    return {{"scheme", "finite-volume Rusanov, MUSCL, SSP-RK2"},
            {"limiter", opt.limiter == Limiter::MC ? "mc" : "none"},
            {"cfl", opt.cfl},
            {"grid", {{"Lx", g.Lx()}, {"M", g.M()}, {"d", g.dim()}}},
            {"delta", delta},
            {"masses", m},
            {"gamma", gamma},
            {"steps", tr.steps},
            {"samples", tr.times}};
}

} // namespace mixkin
