#pragma once

#include "mixkin/grids.hpp"
#include "mixkin/species.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mixkin {

enum class FrameTag { Raw, Fluctuation, Weighted };

const char* frame_name(FrameTag f);

// Per-species node values; A block then B block when flattened.
struct DistributionField {
    FrameTag frame = FrameTag::Raw;
    std::vector<double> A;
    std::vector<double> B;

    std::span<const double> species(int a) const { return a == 0 ? A : B; }
    std::vector<double>& species(int a) { return a == 0 ? A : B; }
    std::vector<double> flat() const;
    static DistributionField from_flat(FrameTag frame, std::span<const double> v);
    void check_finite() const;
};

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& vs, const Vec3& omega, double m_alpha, double m_beta);

double kernel_B(double r, double cos_theta, int alpha, int beta, const SpeciesPair& s);

// Trilinear interpolation of node values, zero outside the node hull.
double interp_trilinear(std::span<const double> values, const VelocityGrid& grid, const Vec3& x);

class CollisionOperator {
public:
    CollisionOperator(const SpeciesPair& s, const VelocityGrid& grid, const AngularRule& rule);

    const SpeciesPair& species() const { return s_; }
    const VelocityGrid& grid() const { return grid_; }
    const AngularRule& rule() const { return rule_; }

    // Q^{alpha beta}(F, G) at the nodes, strong form with interpolated post-collision values.
    std::vector<double> Q(std::span<const double> F, std::span<const double> G, int alpha, int beta) const;

    // {Q^AA(F^A,F^A), Q^AB(F^A,F^B), Q^BA(F^B,F^A), Q^BB(F^B,F^B)} in two shared passes.
    std::array<std::vector<double>, 4> collide_pairs(const DistributionField& F) const;

    // (Q^AA + Q^AB, Q^BA + Q^BB) for a raw pair; no conservative correction.
    DistributionField collide_raw(const DistributionField& F) const;

    // collide_raw followed by the minimal F-weighted correction that restores the six invariants.
    DistributionField collide(const DistributionField& F) const;

    // Monte-Carlo estimate of Q^{alpha beta}(F, G) with per-node seeded streams; variance in the second vector.
    std::pair<std::vector<double>, std::vector<double>> Q_monte_carlo(std::span<const double> F,
                                                                       std::span<const double> G, int alpha, int beta,
                                                                       int samples, std::uint64_t seed) const;

    // <collide(F), log F>.
    double entropy_production(const DistributionField& F, bool conservative = true) const;

    // Pairings of a vector collision term with the six invariants, divided by sum |Q| |psi|.
    std::array<double, 6> invariant_defects(const DistributionField& Qv) const;

private:
    void accumulate_pair(const std::vector<double>& Fp, const std::vector<double>& Gp, std::span<const double> F,
                         std::span<const double> G, int alpha, int beta, bool shared, std::vector<double>& outA,
                         std::vector<double>& outB) const;
    std::vector<double> pad(std::span<const double> v) const;

    SpeciesPair s_;
    VelocityGrid grid_;
    AngularRule rule_;
    AngularRule half_;
};

// Positive non-equilibrium pair: per species, an equal mix of two Maxwellians with seeded (n, u, theta).
DistributionField seeded_nonequilibrium(const SpeciesPair& s, const VelocityGrid& grid, std::uint64_t seed);

// Minimal weighted-L2 correction of Q so that all six invariant pairings vanish.
DistributionField conservative_correction(const DistributionField& Q, const DistributionField& weight,
                                          const SpeciesPair& s, const VelocityGrid& grid);

} // namespace mixkin
