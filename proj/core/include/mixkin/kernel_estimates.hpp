#pragma once

#include "mixkin/collision.hpp"
#include "mixkin/grids.hpp"
#include "mixkin/species.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin {

struct CutoffSpec {
    double m = 0.1;
    void validate() const;
};

// 1 on [0, m], 0 beyond 2m, quintic smoothstep in between.
double chi(double s, const CutoffSpec& spec);

// Everything the kernels need: species, global Maxwellian, the local state behind mu_delta, cutoff.
struct KernelFrame {
    SpeciesPair species;
    GlobalFrame global;
    std::array<MaxwellParams, 2> local;
    CutoffSpec cutoff;

    void validate() const;
};

// theta_M = 1, default q_tilde, centered local states at theta = 1.2.
KernelFrame default_kernel_frame(const SpeciesPair& s, double m = 0.1);

double k_M1(const Vec3& v, const Vec3& vs, int alpha, int beta, const KernelFrame& f);

double k_M2_typical(const Vec3& v, const Vec3& u_par, int alpha, int beta, const KernelFrame& f);

// u_perp is given in the orthonormal basis of u_par's complement returned by perp_basis.
double k_M2_hybrid_cross(const Vec3& v, const std::array<double, 2>& u_perp, const Vec3& u_par, int alpha, int beta,
                         const KernelFrame& f);

double k_M2_hybrid_equal(const Vec3& v, const Vec3& u_perp, int alpha, const KernelFrame& f);

// Deterministic orthonormal pair spanning the plane orthogonal to the unit vector e.
std::array<Vec3, 2> perp_basis(const Vec3& e);

double jacobian_cross(const Vec3& omega, double m_alpha, double m_beta);

// Central finite-difference determinant of v_* -> v_*' at fixed (v, omega).
double jacobian_cross_fd(const Vec3& v, const Vec3& vs, const Vec3& omega, double m_alpha, double m_beta,
                         double h = 1e-5);

struct BoundReport {
    std::string bound_id;
    double gamma = 0.0;
    std::array<double, 2> masses{};
    int n_samples = 0;
    double max_ratio = 0.0;
    std::vector<double> fitted_exponents;
    std::vector<double> half_widths;
    double tolerance = 0.0;
    bool pass = false;

    nlohmann::json to_json() const;
};

// Weighted envelope checks at Halton samples; the exponential rate c is fitted on the upper envelope.
BoundReport check_bound_M1(const KernelFrame& f, int alpha, int beta, int n_samples);
BoundReport check_bound_typical(const KernelFrame& f, int alpha, int beta, int n_samples);
BoundReport check_bound_hybrid_cross(const KernelFrame& f, int alpha, int beta, int n_samples);
BoundReport check_bound_hybrid_equal(const KernelFrame& f, int alpha, int n_samples);

// Integral over u of |k| times the weight ratio. Kind 0: typical (alpha, beta); kind 1: equal-mass hybrid.
double integrated_kernel(int kind, double v_norm, int alpha, int beta, const KernelFrame& f);

// Log-log slope of integrated_kernel over |v| in [2, 10], checked against gamma - 2.
BoundReport check_integrated_decay(const KernelFrame& f, int kind, int alpha, int beta, double tolerance = 0.3);

using SpeciesFunction = std::function<double(int, const Vec3&)>;

// Chi-localized part of K_{M,w} applied to a weighted pair g, evaluated at v.
double k_singular_at(const Vec3& v, int alpha, const SpeciesFunction& g, const KernelFrame& f, const AngularRule& rule,
                     int n_radial = 16);

struct SingularResult {
    DistributionField out;
    double sup_ratio = 0.0;  // sup |out| / (<v>^gamma sup |g|)
};

SingularResult apply_K_singular(const DistributionField& g, const KernelFrame& f, const VelocityGrid& grid,
                                const AngularRule& rule);

// g = 1, sup ratio over sample velocities with |v| <= 8, for each m; slope checked against 3 + gamma.
BoundReport check_singular_scaling(const KernelFrame& f, const std::vector<double>& ms, const AngularRule& rule,
                                   double tolerance = 0.2);

} // namespace mixkin
