#include "mixkin/errors.hpp"
#include "mixkin/experiments.hpp"
#include "mixkin/fluid.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mixkin;

TEST_SUITE("fluid") {

TEST_CASE("central difference of a sine") {
    const SpatialGrid g(1.0, 64, 1);
    std::vector<double> f(g.cells());
    const double k = 2.0 * std::numbers::pi;
    for (int i = 0; i < 64; ++i) f[i] = std::sin(k * g.x(i));
    const auto d = central_diff(f, g, 0);
    // Second-order stencil: exact derivative times sin(k dx) / (k dx).
    const double factor = std::sin(k * g.dx()) / (k * g.dx());
    for (int i = 0; i < 64; ++i) CHECK(d[i] == doctest::Approx(k * factor * std::cos(k * g.x(i))).epsilon(1e-12));
    const auto d1 = central_diff(f, g, 1);
    for (double x : d1) CHECK(x == 0.0);
}

TEST_CASE("constant state is steady") {
    const SpatialGrid g(1.0, 16, 1);
    const auto s = FluidState::constant(g, {1.0, 2.0});
    const auto r = euler_rhs(s);
    for (std::size_t c = 0; c < s.size(); ++c) {
        CHECK(r.nA[c] == 0.0);
        CHECK(r.theta[c] == 0.0);
    }
    const auto tr = euler_solve(s, {0.0, 0.1});
    CHECK(tr.states.back().nA == s.nA);
}

TEST_CASE("non-positive density is a domain error") {
    const SpatialGrid g(1.0, 8, 1);
    auto s = FluidState::constant(g, {1.0, 2.0});
    s.nB[3] = -0.1;
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("finite-volume step conserves species mass") {
    const SpatialGrid g(1.0, 64, 1);
    const auto s = perturbed_state(g, {1.0, 2.0}, 0.1, default_fluctuation());
    const auto tr = euler_solve(s, {0.0, 0.2});
    double a0 = 0.0, a1 = 0.0;
    for (std::size_t c = 0; c < s.size(); ++c) {
        a0 += s.nA[c];
        a1 += tr.states.back().nA[c];
    }
    CHECK(a1 == doctest::Approx(a0).epsilon(1e-13));
}

TEST_CASE("symmetrizer products are symmetric with a positive A0") {
    const SpatialGrid g(1.0, 32, 1);
    const auto s = perturbed_state(g, {1.0, 2.0}, 0.2, default_fluctuation());
    const auto rep = symmetrizer_check(s, 50, 3);
    CHECK(rep.max_asymmetry < 1e-13);
    CHECK(rep.min_eig_A0 > 0.0);
}

TEST_CASE("acoustic speed and a travelling single mode") {
    const std::array<double, 2> m{1.0, 2.0};
    CHECK(acoustic_speed(m) == doctest::Approx(std::sqrt(10.0 / 9.0)));
    const SpatialGrid g(1.0, 32, 1);
    AcousticState a(g, m);
    const double k = 2.0 * std::numbers::pi;
    for (int i = 0; i < 32; ++i) a.sA[i] = std::cos(k * g.x(i));
    const auto b = acoustic_solve(a, 0.0);
    for (int i = 0; i < 32; ++i) CHECK(b.sA[i] == doctest::Approx(a.sA[i]).epsilon(1e-13));
    CHECK(acoustic_energy(acoustic_solve(a, 1.3), 0) == doctest::Approx(acoustic_energy(a, 0)).epsilon(1e-13));
    CHECK(acoustic_dispersion_defect(g, m) < 1e-12);
}

TEST_CASE("shear modes do not propagate") {
    const SpatialGrid g(1.0, 32, 1);
    AcousticState a(g, {1.0, 2.0});
    for (int i = 0; i < 32; ++i) a.u[1][i] = std::sin(2.0 * std::numbers::pi * g.x(i));
    const auto b = acoustic_solve(a, 2.0);
    for (int i = 0; i < 32; ++i) CHECK(b.u[1][i] == doctest::Approx(a.u[1][i]).epsilon(1e-12));
}

TEST_CASE("homogeneous linear Euler keeps the symmetrizer energy") {
    const SpatialGrid g(1.0, 128, 1);
    const auto bg = FluidState::constant(g, {1.0, 2.0});
    auto w = perturbed_state(g, {1.0, 2.0}, 1.0, default_fluctuation());
    for (std::size_t c = 0; c < w.size(); ++c) {
        w.nA[c] -= 1.0;
        w.nB[c] -= 1.0;
        w.theta[c] -= 1.0;
    }
    const auto tr = linear_euler_solve(w, bg, {0.0, 0.2});
    const double e0 = symmetrizer_energy(tr.states.front(), bg);
    const double e1 = symmetrizer_energy(tr.states.back(), bg);
    CHECK(e1 == doctest::Approx(e0).epsilon(2e-2));
}

}
