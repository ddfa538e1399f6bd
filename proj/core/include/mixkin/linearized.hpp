#pragma once

#include "mixkin/collision.hpp"
#include "mixkin/grids.hpp"
#include "mixkin/species.hpp"

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mixkin {

enum class OperatorFrame { Local, Global };

// Background bi-Maxwellian with shared (u, theta).
struct BiMaxwell {
    double nA = 1.0;
    double nB = 1.0;
    Vec3 u{0.0, 0.0, 0.0};
    double theta = 1.0;

    MaxwellParams species(int a) const { return MaxwellParams{a == 0 ? nA : nB, u, theta}; }
    double n() const { return nA + nB; }
    double rho(const SpeciesPair& s) const { return s.m[0] * nA + s.m[1] * nB; }
};

// Dense L with rows/columns species-major (all A nodes, then all B nodes).
// Assembled from the symmetric weak form: sum over (v, v*, w) of B mu mu* (Dq)(Dp), Dq = q' + q*' - q - q*,
// where post-collision values use a quadratic-exact stencil. Symmetric, positive semidefinite and exactly
// annihilating the collision invariants at any resolution.
class OperatorMatrix {
public:
    using RowMajorD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    OperatorFrame frame = OperatorFrame::Local;
    BiMaxwell background;
    std::optional<GlobalFrame> global;
    SpeciesPair species;
    VelocityGrid grid{1.0, 4};
    bool single_precision = false;
    RowMajorD Ld;
    RowMajorF Lf;
    std::vector<double> nu;          // collision frequency per row

    std::size_t dim() const { return 2 * grid.size(); }
    std::vector<double> apply(std::span<const double> f) const;
    double entry(std::size_t r, std::size_t c) const { return single_precision ? Lf(r, c) : Ld(r, c); }
    double symmetry_defect() const;
    double frobenius() const;
};

struct AssemblyOptions {
    // Accumulate in float32 (halves memory; needed beyond N=16).
    bool single_precision = false;
    bool exact_kernel = true;
};

// nu^alpha(v) = sum_beta int int B mu^beta(v*) dw dv*, lattice quadrature in v*.
double nu_alpha(const Vec3& v, int alpha, const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid,
                const AngularRule& rule);

OperatorMatrix assemble_L(const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid,
                          const AngularRule& rule, const AssemblyOptions& opt = {});

// L_M with mu_M from the global frame in the square-root weights and mu_delta = bg inside Q.
OperatorMatrix assemble_L_global(const BiMaxwell& bg, const GlobalFrame& gf, const SpeciesPair& s,
                                 const VelocityGrid& grid, const AngularRule& rule, const AssemblyOptions& opt = {});

// Matrix-free L f through the nonlinear operator: -(1/sqrt mu) sum [Q(mu, sqrt mu f) + Q(sqrt mu f, mu)].
std::vector<double> apply_L_definition(std::span<const double> f, const BiMaxwell& bg, const CollisionOperator& op);

struct KernelBasis {
    BiMaxwell params;
    std::array<std::vector<double>, 6> X;       // as defined analytically
    std::array<std::vector<double>, 6> X_orth;  // discrete symmetric orthonormalization used by projections
    Eigen::Matrix<double, 6, 6> gram;           // Gram matrix of X

    std::size_t dim() const { return X[0].size(); }
};

// X2..X4 carry 1/sqrt(theta rho) so the basis is orthonormal for unequal masses.
KernelBasis kernel_basis(const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid);

std::vector<double> project_macro(std::span<const double> f, const KernelBasis& basis, const VelocityGrid& grid);
std::array<double, 6> macro_coefficients(std::span<const double> f, const KernelBasis& basis, const VelocityGrid& grid);

struct MicroSolveOptions {
    double tol_compat = 1e-6;
    double solver_tol = 1e-10;
    int max_iter = 2000;
};

// f with P f = 0 and L f = R on the micro subspace. Dense Cholesky up to 4096 unknowns, projected CG beyond.
std::vector<double> solve_micro(const OperatorMatrix& L, std::span<const double> R, const KernelBasis& basis,
                                const MicroSolveOptions& opt = {});

struct CoercivityResult {
    double c0 = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> eigenvector;
};

// Minimum of <L f, f> / <nu f, f> over micro f: shift-invert Lanczos on the restricted nu^{-1/2} L nu^{-1/2}.
// Dense Cholesky, so practical up to N=16.
CoercivityResult coercivity(const OperatorMatrix& L, const KernelBasis& basis, int max_iter = 200, double tol = 1e-10);

double rayleigh_quotient(const OperatorMatrix& L, std::span<const double> f);

// Flat little-endian float64 plus a JSON sidecar.
void export_operator(const OperatorMatrix& L, const std::string& path_stem);

} // namespace mixkin
