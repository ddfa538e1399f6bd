#include "mixkin/species.hpp"

#include "mixkin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mixkin {

double SpeciesPair::b(double c) const {
    const double a = std::abs(c);
    return b_form == AngularForm::AbsCos ? C_b * a : 0.5 * C_b * a;
}

void SpeciesPair::validate() const {
    if (!(m[0] > 0.0) || !(m[1] > 0.0)) throw ConfigError("species: masses must be positive");
    if (!(gamma > -3.0 && gamma <= 1.0)) throw ConfigError("species: gamma must lie in (-3, 1]");
    for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
            if (!(C_phi[a][c] > 0.0)) throw ConfigError("species: C_phi entries must be positive");
    if (C_phi[0][1] != C_phi[1][0]) throw ConfigError("species: C_phi must be symmetric");
    if (!(C_b > 0.0)) throw ConfigError("species: C_b must be positive");
    for (int k = 0; k <= 10000; ++k) {
        const double c = -1.0 + 2.0 * k / 10000.0;
        const double val = b(c);
        if (val < 0.0 || val > C_b * std::abs(c) * (1.0 + 1e-15))
            throw ConfigError("species: angular function violates 0 <= b <= C_b|cos|");
    }
}

void MaxwellParams::validate() const {
    if (!(n > 0.0)) throw DomainError("maxwellian: density must be positive");
    if (!(theta > 0.0)) throw DomainError("maxwellian: temperature must be positive");
}

double maxwellian(const MaxwellParams& p, double m, const Vec3& v) {
    p.validate();
    const Vec3 d{v[0] - p.u[0], v[1] - p.u[1], v[2] - p.u[2]};
    const double pref = p.n * std::pow(m / (2.0 * std::numbers::pi * p.theta), 1.5);
    return pref * std::exp(-m * norm2(d) / (2.0 * p.theta));
}

std::vector<double> maxwellian_field(const MaxwellParams& p, double m, const VelocityGrid& grid) {
    p.validate();
    const double pref = p.n * std::pow(m / (2.0 * std::numbers::pi * p.theta), 1.5);
    const double a = m / (2.0 * p.theta);
    return grid.sample([&](const Vec3& v) {
        const Vec3 d{v[0] - p.u[0], v[1] - p.u[1], v[2] - p.u[2]};
        return pref * std::exp(-a * norm2(d));
    });
}

double weight_w(const Vec3& v, double l) { return std::pow(1.0 + std::sqrt(norm2(v)), l); }

MixtureMoments moments(std::span<const double> FA, std::span<const double> FB, const SpeciesPair& s,
                       const VelocityGrid& grid) {
    if (FA.size() != grid.size() || FB.size() != grid.size()) throw ShapeError("moments: field size mismatch");
    MixtureMoments out;
    const std::span<const double> F[2] = {FA, FB};
    std::vector<double> buf(grid.size());
    for (int a = 0; a < 2; ++a) {
        auto& sm = out.species[a];
        sm.n = quad_v(F[a], grid);
        for (int d = 0; d < 3; ++d) {
            for (std::size_t k = 0; k < grid.size(); ++k) buf[k] = grid.node(k)[d] * F[a][k];
            sm.flux[d] = quad_v(buf, grid);
        }
    }
    out.n = out.species[0].n + out.species[1].n;
    out.rho = s.m[0] * out.species[0].n + s.m[1] * out.species[1].n;
    if (!(out.n > 0.0) || !(out.rho > 0.0)) throw DegenerateError("moments: zero total mass");
    for (int d = 0; d < 3; ++d)
        out.u[d] = (s.m[0] * out.species[0].flux[d] + s.m[1] * out.species[1].flux[d]) / out.rho;
    double e = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Vec3 v = grid.node(k);
            const Vec3 c{v[0] - out.u[0], v[1] - out.u[1], v[2] - out.u[2]};
            buf[k] = s.m[a] * norm2(c) * F[a][k];
        }
        out.species[a].energy = quad_v(buf, grid);
        e += out.species[a].energy;
    }
    // Trace identity: sum_alpha int m |v-u|^2 F = 3 n theta.
    out.theta = e / (3.0 * out.n);
    return out;
}

std::array<std::vector<double>, 6> collision_invariant_vectors(const SpeciesPair& s, const VelocityGrid& grid) {
    const std::size_t n = grid.size();
    std::array<std::vector<double>, 6> out;
    for (auto& v : out) v.assign(2 * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 v = grid.node(k);
        out[0][k] = 1.0;
        out[1][n + k] = 1.0;
        for (int a = 0; a < 2; ++a) {
            for (int d = 0; d < 3; ++d) out[2 + d][a * n + k] = s.m[a] * v[d];
            out[5][a * n + k] = s.m[a] * norm2(v);
        }
    }
    return out;
}

double GlobalFrame::mu_M(int alpha, const SpeciesPair& s, const Vec3& v) const {
    const double m = s.m[alpha];
    return std::pow(m / (2.0 * std::numbers::pi * theta_M), 1.5) * std::exp(-m * norm2(v) / (2.0 * theta_M));
}

double default_q_tilde(const SpeciesPair& s) { return 0.5 * (s.max_mass() / s.M() + 1.0); }

GlobalFrame select_theta_M(std::span<const double> theta_field, const SpeciesPair& s, double l, double q_tilde) {
    if (theta_field.empty()) throw DomainError("select_theta_M: empty temperature field");
    const auto [lo, hi] = std::minmax_element(theta_field.begin(), theta_field.end());
    if (!(*lo > 0.0)) throw DomainError("select_theta_M: temperature must be positive");
    GlobalFrame f;
    f.theta_M = *lo;
    f.mass_ratio_bound = s.M() / s.max_mass();
    f.l = l;
    f.q_tilde = q_tilde > 0.0 ? q_tilde : default_q_tilde(s);
    if (!(f.q_tilde > s.max_mass() / s.M() && f.q_tilde < 1.0))
        throw ConfigError("global frame: q_tilde must lie in (max m / (mA + mB), 1)");
    if (*hi > f.mass_ratio_bound * f.theta_M)
        throw FrameError("global frame infeasible: max theta " + std::to_string(*hi) + " exceeds " +
                         std::to_string(f.mass_ratio_bound) + " * theta_M");
    return f;
}

SandwichBounds sandwich_bounds(const std::vector<MaxwellParams>& states_A, const std::vector<MaxwellParams>& states_B,
                               const GlobalFrame& frame, const SpeciesPair& s, const std::vector<Vec3>& samples) {
    SandwichBounds out;
    const std::vector<MaxwellParams>* st[2] = {&states_A, &states_B};
    for (int a = 0; a < 2; ++a) {
        double lo = 0.0, hi = 0.0;
        for (const auto& p : *st[a]) {
            for (const auto& v : samples) {
                // Ratios in log space to avoid underflow in the tails.
                const double m = s.m[a];
                const Vec3 d{v[0] - p.u[0], v[1] - p.u[1], v[2] - p.u[2]};
                const double log_delta = std::log(p.n) + 1.5 * std::log(m / (2.0 * std::numbers::pi * p.theta)) -
                                         m * norm2(d) / (2.0 * p.theta);
                const double log_M =
                    1.5 * std::log(m / (2.0 * std::numbers::pi * frame.theta_M)) - m * norm2(v) / (2.0 * frame.theta_M);
                lo = std::max(lo, std::exp(log_M - log_delta));
                hi = std::max(hi, std::exp(log_delta - frame.q_tilde * log_M));
            }
        }
        out.lower_C[a] = lo;
        out.upper_C[a] = hi;
    }
    return out;
}

} // namespace mixkin
