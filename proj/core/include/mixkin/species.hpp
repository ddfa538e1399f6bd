#pragma once

#include "mixkin/grids.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace mixkin {

enum Species { A = 0, B = 1 };

enum class AngularForm { AbsCos, HalfCos };

struct SpeciesPair {
    std::array<double, 2> m{1.0, 2.0};
    double gamma = 1.0;
    std::array<std::array<double, 2>, 2> C_phi{{{1.0, 1.0}, {1.0, 1.0}}};
    double C_b = 1.0;
    // AbsCos: b = C_b |cos theta|; HalfCos: b = C_b |cos theta| / 2.
    AngularForm b_form = AngularForm::AbsCos;

    double M() const { return m[0] + m[1]; }
    double max_mass() const { return std::max(m[0], m[1]); }
    double b(double cos_theta) const;
    // Validates masses, gamma range, C_phi symmetry and the Grad bound at sampled angles.
    void validate() const;
};

struct MaxwellParams {
    double n = 1.0;
    Vec3 u{0.0, 0.0, 0.0};
    double theta = 1.0;

    void validate() const;
};

double maxwellian(const MaxwellParams& p, double m, const Vec3& v);
std::vector<double> maxwellian_field(const MaxwellParams& p, double m, const VelocityGrid& grid);

// Polynomial weight (1 + |v|)^l.
double weight_w(const Vec3& v, double l);

struct SpeciesMoments {
    double n = 0.0;
    Vec3 flux{0.0, 0.0, 0.0};  // integral of v F
    double energy = 0.0;        // integral of m |v - u|^2 F with mixture u
};

struct MixtureMoments {
    std::array<SpeciesMoments, 2> species;
    double n = 0.0;
    double rho = 0.0;
    Vec3 u{0.0, 0.0, 0.0};
    double theta = 0.0;
};

MixtureMoments moments(std::span<const double> FA, std::span<const double> FB, const SpeciesPair& s,
                       const VelocityGrid& grid);

// e1, e2, m v1, m v2, m v3, m |v|^2; each entry is (A-values, B-values) concatenated.
std::array<std::vector<double>, 6> collision_invariant_vectors(const SpeciesPair& s, const VelocityGrid& grid);

struct GlobalFrame {
    double theta_M = 1.0;
    double mass_ratio_bound = 1.5;
    double q_tilde = 0.0;
    double l = 25.0 / 4.0;

    // Centered unit-density Maxwellian at temperature theta_M.
    double mu_M(int alpha, const SpeciesPair& s, const Vec3& v) const;
};

double default_q_tilde(const SpeciesPair& s);

// theta_M = min theta; throws FrameError if max theta > bound * theta_M.
GlobalFrame select_theta_M(std::span<const double> theta_field, const SpeciesPair& s, double l = 25.0 / 4.0,
                           double q_tilde = 0.0);

struct SandwichBounds {
    std::array<double, 2> lower_C{};  // max of mu_M / mu_delta
    std::array<double, 2> upper_C{};  // max of mu_delta / mu_M^q
};

// Fitted constants in C^{-1} mu_M <= mu_delta <= C mu_M^q over sample velocities and states.
SandwichBounds sandwich_bounds(const std::vector<MaxwellParams>& states_A, const std::vector<MaxwellParams>& states_B,
                               const GlobalFrame& frame, const SpeciesPair& s, const std::vector<Vec3>& samples);

} // namespace mixkin
