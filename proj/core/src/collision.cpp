#include "mixkin/collision.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace mixkin {

const char* frame_name(FrameTag f) {
    switch (f) {
    case FrameTag::Raw: return "raw";
    case FrameTag::Fluctuation: return "fluctuation";
    case FrameTag::Weighted: return "weighted";
    }
    return "unknown";
}

std::vector<double> DistributionField::flat() const {
    std::vector<double> v(A);
    v.insert(v.end(), B.begin(), B.end());
    return v;
}

DistributionField DistributionField::from_flat(FrameTag frame, std::span<const double> v) {
    if (v.size() % 2 != 0) throw ShapeError("distribution field: odd flat length");
    const std::size_t n = v.size() / 2;
    DistributionField f;
    f.frame = frame;
    f.A.assign(v.begin(), v.begin() + n);
    f.B.assign(v.begin() + n, v.end());
    return f;
}

void DistributionField::check_finite() const {
    for (const auto* s : {&A, &B})
        for (double x : *s)
            if (!std::isfinite(x)) throw NumericalError("distribution field: non-finite value");
    if (frame == FrameTag::Raw)
        for (const auto* s : {&A, &B})
            for (double x : *s)
                if (x < 0.0) throw DomainError("distribution field: negative raw value");
}

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& vs, const Vec3& omega, double ma, double mb) {
    if (std::abs(norm2(omega) - 1.0) > 1e-14) throw DomainError("post_collision: omega must be a unit vector");
    const double gw = (v[0] - vs[0]) * omega[0] + (v[1] - vs[1]) * omega[1] + (v[2] - vs[2]) * omega[2];
    const double ca = 2.0 * mb / (ma + mb) * gw;
    const double cb = 2.0 * ma / (ma + mb) * gw;
    return {Vec3{v[0] - ca * omega[0], v[1] - ca * omega[1], v[2] - ca * omega[2]},
            Vec3{vs[0] + cb * omega[0], vs[1] + cb * omega[1], vs[2] + cb * omega[2]}};
}

double kernel_B(double r, double cos_theta, int alpha, int beta, const SpeciesPair& s) {
    if (!(r > 0.0)) {
        if (s.gamma < 0.0) throw DomainError("kernel_B: zero relative speed with gamma < 0");
        if (r < 0.0) throw DomainError("kernel_B: negative relative speed");
        return s.gamma == 0.0 ? s.C_phi[alpha][beta] * s.b(cos_theta) : 0.0;
    }
    return s.C_phi[alpha][beta] * std::pow(r, s.gamma) * s.b(cos_theta);
}

namespace {

// Interpolation into a zero-padded (N+2)^3 copy.
struct PaddedInterp {
    double inv_h;
    double shift;
    int N;
    int P;

    PaddedInterp(const VelocityGrid& g)
        : inv_h(1.0 / g.h()), shift(g.R() / g.h() + 0.5), N(g.N()), P(g.N() + 2) {}

    double operator()(const double* pad, double x, double y, double z) const {
        const double sx = x * inv_h + shift, sy = y * inv_h + shift, sz = z * inv_h + shift;
        const double fx = std::floor(sx), fy = std::floor(sy), fz = std::floor(sz);
        const int ix = static_cast<int>(fx), iy = static_cast<int>(fy), iz = static_cast<int>(fz);
        if (ix < 0 || iy < 0 || iz < 0 || ix > N || iy > N || iz > N) return 0.0;
        const double tx = sx - fx, ty = sy - fy, tz = sz - fz;
        const double* p = pad + (static_cast<std::ptrdiff_t>(ix) * P + iy) * P + iz;
        const std::ptrdiff_t PP = static_cast<std::ptrdiff_t>(P) * P;
        const double c00 = p[0] + tz * (p[1] - p[0]);
        const double c01 = p[P] + tz * (p[P + 1] - p[P]);
        const double c10 = p[PP] + tz * (p[PP + 1] - p[PP]);
        const double c11 = p[PP + P] + tz * (p[PP + P + 1] - p[PP + P]);
        const double c0 = c00 + ty * (c01 - c00);
        const double c1 = c10 + ty * (c11 - c10);
        return c0 + tx * (c1 - c0);
    }
};

enum class LoopMode { Full, Shared, Cross };

constexpr std::size_t kChunks = 32;

} // namespace

double interp_trilinear(std::span<const double> values, const VelocityGrid& grid, const Vec3& x) {
    if (values.size() != grid.size()) throw ShapeError("interp_trilinear: size mismatch");
    const int N = grid.N(), P = N + 2;
    std::vector<double> pad(static_cast<std::size_t>(P) * P * P, 0.0);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l)
                pad[(static_cast<std::size_t>(i + 1) * P + j + 1) * P + l + 1] = values[grid.index(i, j, l)];
    return PaddedInterp(grid)(pad.data(), x[0], x[1], x[2]);
}

CollisionOperator::CollisionOperator(const SpeciesPair& s, const VelocityGrid& grid, const AngularRule& rule)
    : s_(s), grid_(grid), rule_(rule), half_(rule.hemisphere()) {
    s_.validate();
}

std::vector<double> CollisionOperator::pad(std::span<const double> v) const {
    if (v.size() != grid_.size()) throw ShapeError("collision: field size mismatch");
    const int N = grid_.N(), P = N + 2;
    std::vector<double> out(static_cast<std::size_t>(P) * P * P, 0.0);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l)
                out[(static_cast<std::size_t>(i + 1) * P + j + 1) * P + l + 1] = v[grid_.index(i, j, l)];
    return out;
}

namespace {

template <LoopMode Mode>
void pair_loop(const SpeciesPair& s, const VelocityGrid& grid, const AngularRule& half, const double* Fp,
               const double* Gp, std::span<const double> F, std::span<const double> G, int alpha, int beta,
               std::vector<double>& outA, std::vector<double>& outB) {
    const std::size_t n = grid.size();
    const PaddedInterp interp(grid);
    const double ma = s.m[alpha], mb = s.m[beta];
    const double cb = 2.0 * mb / (ma + mb);  // v' = v - cb (g.w) w
    const double ca = 2.0 * ma / (ma + mb);  // v*' = v* + ca (g.w) w
    const double gamma = s.gamma;
    const double bscale = s.b(1.0);          // b(c) = bscale * |c|
    const double pref0 = grid.weight() * s.C_phi[alpha][beta] * bscale;
    const double cut2 = 4.0 * grid.R() * grid.R();
    const std::size_t nw = half.size();
    std::vector<double> wx(nw), wy(nw), wz(nw), ww(nw);
    for (std::size_t q = 0; q < nw; ++q) {
        wx[q] = half.dirs[q][0];
        wy[q] = half.dirs[q][1];
        wz[q] = half.dirs[q][2];
        ww[q] = half.weights[q];
    }
    std::vector<Vec3> nodes(n);
    for (std::size_t k = 0; k < n; ++k) nodes[k] = grid.node(k);

    std::vector<std::vector<double>> bufA(kChunks), bufB(kChunks);
    parallel_chunks(n, kChunks, [&](std::size_t c, std::size_t begin, std::size_t end) {
        auto& la = bufA[c];
        auto& lb = bufB[c];
        la.assign(n, 0.0);
        if (Mode != LoopMode::Full) lb.assign(n, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            const Vec3 v = nodes[i];
            const double Fi = F[i];
            const std::size_t j0 = Mode == LoopMode::Shared ? i + 1 : 0;
            double acc_i = 0.0;
            for (std::size_t j = j0; j < n; ++j) {
                if (Mode == LoopMode::Full && j == i && alpha == beta) continue;
                const Vec3& vs = nodes[j];
                const double gx = v[0] - vs[0], gy = v[1] - vs[1], gz = v[2] - vs[2];
                const double g2 = gx * gx + gy * gy + gz * gz;
                if (g2 > cut2 || g2 == 0.0) continue;
                const double gn = std::sqrt(g2);
                const double pref = pref0 * (gamma == 1.0 ? 1.0 : std::pow(gn, gamma - 1.0));
                double gain = 0.0, loss = 0.0;
                for (std::size_t q = 0; q < nw; ++q) {
                    const double gw = gx * wx[q] + gy * wy[q] + gz * wz[q];
                    const double coef = ww[q] * std::abs(gw);
                    const double a = cb * gw, b = ca * gw;
                    const double fv = interp(Fp, v[0] - a * wx[q], v[1] - a * wy[q], v[2] - a * wz[q]);
                    const double gv = fv == 0.0 ? 0.0 : interp(Gp, vs[0] + b * wx[q], vs[1] + b * wy[q], vs[2] + b * wz[q]);
                    gain += coef * fv * gv;
                    loss += coef;
                }
                const double contrib = pref * (gain - loss * Fi * G[j]);
                acc_i += contrib;
                if (Mode == LoopMode::Shared) la[j] += contrib;
                if (Mode == LoopMode::Cross) lb[j] += contrib;
            }
            la[i] += acc_i;
        }
    });
    for (std::size_t c = 0; c < kChunks; ++c) {
        if (!bufA[c].empty())
            for (std::size_t k = 0; k < n; ++k) outA[k] += bufA[c][k];
        if (Mode == LoopMode::Cross && !bufB[c].empty())
            for (std::size_t k = 0; k < n; ++k) outB[k] += bufB[c][k];
    }
}

} // namespace

std::vector<double> CollisionOperator::Q(std::span<const double> F, std::span<const double> G, int alpha,
                                         int beta) const {
    const auto Fp = pad(F);
    const auto Gp = pad(G);
    std::vector<double> out(grid_.size(), 0.0), unused;
    pair_loop<LoopMode::Full>(s_, grid_, half_, Fp.data(), Gp.data(), F, G, alpha, beta, out, unused);
    return out;
}

std::array<std::vector<double>, 4> CollisionOperator::collide_pairs(const DistributionField& F) const {
    if (F.frame != FrameTag::Raw) throw FrameError("collide: expected raw frame");
    const auto Ap = pad(F.A);
    const auto Bp = pad(F.B);
    std::array<std::vector<double>, 4> out;
    for (auto& q : out) q.assign(grid_.size(), 0.0);
    std::vector<double> unused;
    pair_loop<LoopMode::Shared>(s_, grid_, half_, Ap.data(), Ap.data(), F.A, F.A, 0, 0, out[0], unused);
    pair_loop<LoopMode::Cross>(s_, grid_, half_, Ap.data(), Bp.data(), F.A, F.B, 0, 1, out[1], out[2]);
    pair_loop<LoopMode::Shared>(s_, grid_, half_, Bp.data(), Bp.data(), F.B, F.B, 1, 1, out[3], unused);
    return out;
}

DistributionField CollisionOperator::collide_raw(const DistributionField& F) const {
    auto q = collide_pairs(F);
    DistributionField out;
    out.frame = FrameTag::Raw;
    out.A.resize(grid_.size());
    out.B.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        out.A[k] = q[0][k] + q[1][k];
        out.B[k] = q[2][k] + q[3][k];
    }
    return out;
}

DistributionField CollisionOperator::collide(const DistributionField& F) const {
    return conservative_correction(collide_raw(F), F, s_, grid_);
}

std::pair<std::vector<double>, std::vector<double>>
CollisionOperator::Q_monte_carlo(std::span<const double> F, std::span<const double> G, int alpha, int beta,
                                 int samples, std::uint64_t seed) const {
    if (samples < 2) throw ConfigError("Q_monte_carlo: need at least 2 samples");
    const auto Fp = pad(F);
    const auto Gp = pad(G);
    const PaddedInterp interp(grid_);
    const std::size_t n = grid_.size();
    const double ma = s_.m[alpha], mb = s_.m[beta];
    const double volume = std::pow(2.0 * grid_.R(), 3) * 4.0 * std::numbers::pi;
    std::vector<double> mean(n), var(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::normal_distribution<double> normal;
        const Vec3 v = grid_.node(i);
        double s1 = 0.0, s2 = 0.0;
        for (int k = 0; k < samples; ++k) {
            const std::size_t j = pick(rng);
            Vec3 w{normal(rng), normal(rng), normal(rng)};
            const double wn = std::sqrt(norm2(w));
            for (double& c : w) c /= wn;
            const Vec3 vs = grid_.node(j);
            const Vec3 g{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
            const double gn = std::sqrt(norm2(g));
            double x = 0.0;
            if (gn > 0.0) {
                const double gw = dot(g, w);
                const double Bk = kernel_B(gn, gw / gn, alpha, beta, s_);
                const double cb = 2.0 * mb / (ma + mb) * gw, ca = 2.0 * ma / (ma + mb) * gw;
                const double fv = interp(Fp.data(), v[0] - cb * w[0], v[1] - cb * w[1], v[2] - cb * w[2]);
                const double gv = interp(Gp.data(), vs[0] + ca * w[0], vs[1] + ca * w[1], vs[2] + ca * w[2]);
                x = volume * Bk * (fv * gv - F[i] * G[j]);
            }
            s1 += x;
            s2 += x * x;
        }
        mean[i] = s1 / samples;
        var[i] = std::max(0.0, (s2 / samples - mean[i] * mean[i]) / (samples - 1));
    }
    return {mean, var};
}

DistributionField conservative_correction(const DistributionField& Q, const DistributionField& weight,
                                          const SpeciesPair& s, const VelocityGrid& grid) {
    const auto psi = collision_invariant_vectors(s, grid);
    const auto q = Q.flat();
    const auto w = weight.flat();
    const std::size_t N2 = q.size();
    Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> r;
    std::vector<double> buf(N2);
    for (int a = 0; a < 6; ++a) {
        for (std::size_t k = 0; k < N2; ++k) buf[k] = psi[a][k] * q[k];
        r[a] = pairwise_sum(buf);
        for (int b = a; b < 6; ++b) {
            for (std::size_t k = 0; k < N2; ++k) buf[k] = psi[a][k] * w[k] * psi[b][k];
            M(a, b) = M(b, a) = pairwise_sum(buf);
        }
    }
    const Eigen::Matrix<double, 6, 1> lambda = M.ldlt().solve(r);
    std::vector<double> out(q);
    for (std::size_t k = 0; k < N2; ++k) {
        double c = 0.0;
        for (int a = 0; a < 6; ++a) c += lambda[a] * psi[a][k];
        out[k] -= w[k] * c;
    }
    return DistributionField::from_flat(Q.frame, out);
}

double CollisionOperator::entropy_production(const DistributionField& F, bool conservative) const {
    for (const auto* v : {&F.A, &F.B})
        for (double x : *v)
            if (!(x > 0.0)) throw DomainError("entropy_production: field must be strictly positive");
    const DistributionField Qv = conservative ? collide(F) : collide_raw(F);
    std::vector<double> buf(2 * grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        buf[k] = Qv.A[k] * std::log(F.A[k]);
        buf[grid_.size() + k] = Qv.B[k] * std::log(F.B[k]);
    }
    return grid_.weight() * pairwise_sum(buf);
}

std::array<double, 6> CollisionOperator::invariant_defects(const DistributionField& Qv) const {
    const auto psi = collision_invariant_vectors(s_, grid_);
    const auto q = Qv.flat();
    std::array<double, 6> out{};
    std::vector<double> num(q.size()), den(q.size());
    for (int a = 0; a < 6; ++a) {
        for (std::size_t k = 0; k < q.size(); ++k) {
            num[k] = psi[a][k] * q[k];
            den[k] = std::abs(psi[a][k] * q[k]);
        }
        const double d = pairwise_sum(den);
        out[a] = d > 0.0 ? std::abs(pairwise_sum(num)) / d : 0.0;
    }
    return out;
}

DistributionField seeded_nonequilibrium(const SpeciesPair& s, const VelocityGrid& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dn(0.5, 1.5), du(-0.8, 0.8), dt(0.7, 1.3);
    DistributionField F;
    F.frame = FrameTag::Raw;
    for (int a = 0; a < 2; ++a) {
        auto& out = F.species(a);
        out.assign(grid.size(), 0.0);
        for (int bump = 0; bump < 2; ++bump) {
            MaxwellParams p;
            p.n = dn(rng);
            p.u = {du(rng), du(rng), du(rng)};
            p.theta = dt(rng);
            const auto mu = maxwellian_field(p, s.m[a], grid);
            for (std::size_t k = 0; k < out.size(); ++k) out[k] += 0.5 * mu[k];
        }
    }
    return F;
}

} // namespace mixkin
