#pragma once

#include "mixkin/collision.hpp"
#include "mixkin/fluid.hpp"
#include "mixkin/grids.hpp"
#include "mixkin/linearized.hpp"
#include "mixkin/species.hpp"

#include <array>
#include <vector>

#include <nlohmann/json.hpp>

namespace mixkin {

struct HilbertSetup {
    SpeciesPair species;
    VelocityGrid vgrid{4.0, 8};
    int angular_order = 6;
    AssemblyOptions assembly;
    // R0 is compatible only up to velocity quadrature: about 7e-3 relative at N = 8, R = 4.
    MicroSolveOptions micro{2e-2, 1e-10, 2000};
    // Step of the directional difference along euler_rhs used for d/dt of the corrector.
    double tau = 1e-3;

    void validate() const;
};

struct ExpansionTruncation {
    double eps = 0.01;
    int K = 1;

    void validate() const;
};

BiMaxwell local_state(const FluidState& s, std::size_t cell);

// Local bi-Maxwellian at one cell, raw frame.
DistributionField build_F0(const FluidState& s, std::size_t cell, const VelocityGrid& vgrid);
std::vector<DistributionField> build_F0(const FluidState& s, const VelocityGrid& vgrid);

// R0 = -sqrt(mu) (d_t + v . grad) log mu, with d_t taken from rhs (normally euler_rhs(s)).
DistributionField build_R0(const FluidState& s, const FluidState& rhs, std::size_t cell, const VelocityGrid& vgrid);
std::vector<DistributionField> build_R0(const FluidState& s, const VelocityGrid& vgrid);

// <R0, X_i> with the local orthonormal basis, divided by ||R0||.
std::array<double, 6> compatibility(const DistributionField& R0, const KernelBasis& basis, const VelocityGrid& vgrid);

// (n_A/n_delta^A + u . m c/theta + theta_1/(6 theta)(m|c|^2/theta - 3)) sqrt(mu) per species.
// coeffs = (n_A, n_B, u1, u2, u3, theta).
DistributionField macro_part(const BiMaxwell& bg, const std::array<double, 6>& coeffs, const SpeciesPair& s,
                             const VelocityGrid& vgrid);

struct FirstCorrector {
    DistributionField micro;
    DistributionField macro;
    DistributionField total;
    double projection_defect = 0.0;  // max_i |<micro, X_i>| / ||micro||
};

FirstCorrector build_f1(const DistributionField& R0, const OperatorMatrix& L, const KernelBasis& basis,
                        const std::array<double, 6>& macro_coeffs, const MicroSolveOptions& opt = {});

// Everything the expansion needs at one cell of one state.
struct CellCorrector {
    BiMaxwell bg;
    DistributionField sqrt_mu;
    DistributionField R0;
    FirstCorrector f1;  // macro part zero
    DistributionField Lf1;
};

CellCorrector corrector_at(const FluidState& s, const FluidState& rhs, std::size_t cell, const HilbertSetup& h);

// sup_v (1+|v|)^p mu_delta^{-b} |f| over both species.
double weighted_decay_sup(const DistributionField& f, const BiMaxwell& bg, const SpeciesPair& s,
                          const VelocityGrid& vgrid, double b, double p = 4.0);

// Residual ingredients at sampled cells, independent of eps.
struct ResidualTerms {
    std::vector<std::size_t> cells;
    std::vector<DistributionField> D0;  // (d_t + v . grad) F0
    std::vector<DistributionField> D1;  // sqrt(mu) L f1, i.e. minus the linearized collision of F1
    std::vector<DistributionField> E1;  // (d_t + v . grad) F1 - Q(F1, F1)
    std::vector<double> weight;         // w / sqrt(mu_M) at each node, per species block
    std::vector<double> decay_sup;      // weighted_decay_sup of f1 per cell
    double max_compatibility = 0.0;
    SpatialGrid grid{1.0, 2, 1};
    VelocityGrid vgrid{1.0, 4};
};

// f1 has zero macro data at the snapshot; its time derivative comes from the linearized Euler sources.
ResidualTerms residual_terms(const FluidState& s, const std::vector<std::size_t>& cells, const HilbertSetup& h);

struct ResidualReport {
    double eps = 0.0;
    int K = 0;
    std::array<double, 2> l2{};
    std::array<double, 2> sup{};
    double l2_total = 0.0;
    double sup_total = 0.0;

    nlohmann::json to_json() const;
};

// Norms of d_t F + v . grad F - (1/eps) Q(F, F) for F = F0 (+ eps F1); Q(F0, F0) vanishes identically.
ResidualReport expansion_residual(const ResidualTerms& terms, const ExpansionTruncation& tr);

// h = w F_R / sqrt(mu_M).
DistributionField weighted_remainder(const DistributionField& FR, const GlobalFrame& frame, const SpeciesPair& s,
                                     const VelocityGrid& vgrid);

// Evenly spaced cell indices.
std::vector<std::size_t> sample_cells(const SpatialGrid& g, int count);

} // namespace mixkin
