#include "mixkin/experiments.hpp"
#include "mixkin/hilbert.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixkin;

TEST_SUITE("hilbert") {

TEST_CASE("truncation validation") {
    CHECK_THROWS(ExpansionTruncation{0.0, 1}.validate());
    CHECK_THROWS(ExpansionTruncation{0.01, 2}.validate());
    CHECK_NOTHROW(ExpansionTruncation{0.01, 0}.validate());
}

TEST_CASE("sampled cells are evenly spaced") {
    const SpatialGrid g(1.0, 256, 1);
    const auto c = sample_cells(g, 4);
    CHECK(c == std::vector<std::size_t>{0, 64, 128, 192});
}

TEST_CASE("R0 vanishes on a constant state") {
    const SpatialGrid g(1.0, 8, 1);
    const auto s = FluidState::constant(g, {1.0, 2.0});
    const VelocityGrid vg(4.0, 6);
    const auto R0 = build_R0(s, euler_rhs(s), 3, vg);
    for (double x : R0.flat()) CHECK(x == 0.0);
}

TEST_CASE("F0 is the local bi-Maxwellian") {
    const SpatialGrid g(1.0, 16, 1);
    const auto s = perturbed_state(g, {1.0, 2.0}, 0.1, default_fluctuation());
    const VelocityGrid vg(4.0, 6);
    const auto F0 = build_F0(s, 5, vg);
    const auto p = s.local(1, 5);
    for (std::size_t k = 0; k < vg.size(); k += 7) CHECK(F0.B[k] == doctest::Approx(maxwellian(p, 2.0, vg.node(k))));
}

TEST_CASE("R0 is nearly orthogonal to the kernel") {
    const SpatialGrid g(1.0, 64, 1);
    const auto s = perturbed_state(g, {1.0, 2.0}, 0.1, default_fluctuation());
    const VelocityGrid vg(6.0, 16);
    const std::size_t cell = 10;
    const auto R0 = build_R0(s, euler_rhs(s), cell, vg);
    const auto basis = kernel_basis(local_state(s, cell), SpeciesPair{}, vg);
    for (double c : compatibility(R0, basis, vg)) CHECK(std::abs(c) < 1e-4);
}

TEST_CASE("macro part lies in the kernel span") {
    const SpeciesPair sp;
    const VelocityGrid vg(5.0, 10);
    const BiMaxwell bg{1.1, 0.9, {0.1, -0.05, 0.0}, 1.05};
    const auto basis = kernel_basis(bg, sp, vg);
    const auto M = macro_part(bg, {0.3, -0.2, 0.1, 0.05, -0.1, 0.4}, sp, vg).flat();
    const auto P = project_macro(M, basis, vg);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < M.size(); ++k) {
        err = std::max(err, std::abs(P[k] - M[k]));
        scale = std::max(scale, std::abs(M[k]));
    }
    CHECK(err < 1e-12 * scale);
}

TEST_CASE("weighted decay sup of zero is zero") {
    const SpeciesPair sp;
    const VelocityGrid vg(4.0, 6);
    DistributionField f;
    f.A.assign(vg.size(), 0.0);
    f.B.assign(vg.size(), 0.0);
    CHECK(weighted_decay_sup(f, BiMaxwell{}, sp, vg, 0.5) == 0.0);
}

}
