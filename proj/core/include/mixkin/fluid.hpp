#pragma once

#include "mixkin/collision.hpp"
#include "mixkin/grids.hpp"
#include "mixkin/species.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin {

// Primitive mixture variables (n_A, n_B, u, theta) on a periodic grid.
struct FluidState {
    SpatialGrid grid{1.0, 2, 1};
    std::array<double, 2> m{1.0, 2.0};
    std::vector<double> nA, nB, theta;
    std::array<std::vector<double>, 3> u;

    FluidState() = default;
    FluidState(const SpatialGrid& g, std::array<double, 2> masses);

    std::size_t size() const { return nA.size(); }
    double rho(std::size_t c) const { return m[0] * nA[c] + m[1] * nB[c]; }
    double n(std::size_t c) const { return nA[c] + nB[c]; }
    MaxwellParams local(int alpha, std::size_t c) const;
    // Throws DomainError naming the first non-positive cell.
    void validate() const;
    // Equilibrium (1, 1, 0, 1).
    static FluidState constant(const SpatialGrid& g, std::array<double, 2> masses);
};

// Centered difference of f along axis a; zero for axes beyond the grid dimension.
std::vector<double> central_diff(const std::vector<double>& f, const SpatialGrid& g, int axis);

// Time derivative of the primitive Euler system with centered differences.
FluidState euler_rhs(const FluidState& s);

enum class Limiter { MC, None };

struct EulerOptions {
    double cfl = 0.4;
    Limiter limiter = Limiter::MC;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<FluidState> states;
    int steps = 0;
    double max_deviation = 0.0;  // sup over samples of |state - (1,1,0,1)|
};

// Rusanov fluxes on MUSCL reconstructions of the conserved variables, SSP-RK2 in time.
Trajectory euler_solve(const FluidState& init, const std::vector<double>& sample_times,
                       const EulerOptions& opt = {});

// (1 + delta sA, 1 + delta sB, delta u, 1 + delta th) from fluctuation fields.
FluidState perturbed_state(const SpatialGrid& g, std::array<double, 2> masses, double delta,
                           const std::function<std::array<double, 6>(const Vec3&)>& fluct);

struct SymmetrizerReport {
    double max_asymmetry = 0.0;
    double min_eig_A0 = 0.0;
};

// A0 and A0 A_j of the primitive system at sampled cells.
SymmetrizerReport symmetrizer_check(const FluidState& s, int samples = 100, std::uint64_t seed = 1);
std::array<double, 36> symmetrizer_product(const FluidState& s, std::size_t cell, int j);

struct AcousticState {
    SpatialGrid grid{1.0, 2, 1};
    std::array<double, 2> m{1.0, 2.0};
    std::vector<double> sA, sB, theta;
    std::array<std::vector<double>, 3> u;

    AcousticState() = default;
    AcousticState(const SpatialGrid& g, std::array<double, 2> masses);
    void check_shape() const;
};

// Exact-in-time Fourier solution; Nyquist modes are held fixed.
AcousticState acoustic_solve(const AcousticState& init, double t);

// Acoustic energy of derivative order l: summed over index tuples and integrated over the torus.
double acoustic_energy(const AcousticState& s, int l);

// Spectral curl of u, component-wise.
std::array<std::vector<double>, 3> acoustic_vorticity(const AcousticState& s);

double acoustic_speed(std::array<double, 2> m);

// Max relative defect of the measured omega^2 against 10 |k|^2 / (3 (m_A + m_B)) over the non-Nyquist
// modes along x1, each recovered from a single-mode solution at a quarter period.
double acoustic_dispersion_defect(const SpatialGrid& g, std::array<double, 2> m);

struct Burnett {
    std::array<std::array<std::vector<double>, 3>, 3> A;
    std::array<std::vector<double>, 3> B;
};

// Burnett functions times sqrt(mu) for one species at the local state p.
Burnett burnett_vectors(const MaxwellParams& p, double m, const VelocityGrid& grid);

struct LinearSources {
    std::array<std::vector<double>, 3> H;
    std::vector<double> g;  // without the -2 u_k . H term, which the solver adds
};

// fk[c] is the fluctuation pair at cell c.
LinearSources linear_euler_sources(const std::vector<DistributionField>& fk, const FluidState& background,
                                   const VelocityGrid& vgrid);

// Linearized unknowns (n_k^A, n_k^B, u_k, theta_k), stored like a FluidState.
using LinearState = FluidState;

LinearState linear_euler_rhs(const LinearState& w, const FluidState& bg, const LinearSources* src);

struct LinearTrajectory {
    std::vector<double> times;
    std::vector<LinearState> states;
    std::vector<FluidState> background;
};

// Evolves the background with euler_solve's scheme and the linear system alongside with shared steps.
// sources(t, background) may be empty for the homogeneous system.
LinearTrajectory linear_euler_solve(const LinearState& init, const FluidState& background0,
                                    const std::vector<double>& sample_times,
                                    const std::function<LinearSources(double, const FluidState&)>& sources = {},
                                    const EulerOptions& opt = {});

// A0-weighted quadratic energy of a linear state.
double symmetrizer_energy(const LinearState& w, const FluidState& bg);

void write_trajectory_csv(const std::string& path, const Trajectory& tr);
nlohmann::json trajectory_manifest(const Trajectory& tr, const EulerOptions& opt, double delta, double gamma);

} // namespace mixkin
