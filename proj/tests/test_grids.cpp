#include "mixkin/errors.hpp"
#include "mixkin/grids.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mixkin;

TEST_SUITE("grids") {

TEST_CASE("velocity grid rejects odd and tiny N") {
    CHECK_THROWS_AS(VelocityGrid(4.0, 13), ConfigError);
    CHECK_THROWS_AS(VelocityGrid(4.0, 2), ConfigError);
    CHECK_NOTHROW(VelocityGrid(4.0, 4));
}

TEST_CASE("nodes are cell centered and symmetric") {
    const VelocityGrid g(3.0, 6);
    CHECK(g.h() == doctest::Approx(1.0));
    CHECK(g.coord(0) == doctest::Approx(-2.5));
    CHECK(g.coord(5) == doctest::Approx(2.5));
    const auto v = g.node(g.index(1, 2, 3));
    CHECK(v[0] == doctest::Approx(-1.5));
    CHECK(v[1] == doctest::Approx(-0.5));
    CHECK(v[2] == doctest::Approx(0.5));
}

TEST_CASE("lattice quadrature of a Gaussian") {
    // Midpoint rule on a periodic-like Gaussian is spectrally accurate once the box covers the tails.
    const VelocityGrid g(7.0, 24);
    const auto f = g.sample([](const Vec3& v) { return std::exp(-norm2(v)); });
    CHECK(quad_v(f, g) == doctest::Approx(std::pow(std::numbers::pi, 1.5)).epsilon(1e-10));
}

TEST_CASE("angular rule integrates low-order polynomials on the sphere") {
    const auto r = lebedev_like_rule(6);
    double one = 0.0, x2 = 0.0, x2y2 = 0.0, x = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const auto& d = r.dirs[k];
        one += r.weights[k];
        x += r.weights[k] * d[0];
        x2 += r.weights[k] * d[0] * d[0];
        x2y2 += r.weights[k] * d[0] * d[0] * d[1] * d[1];
    }
    const double pi = std::numbers::pi;
    CHECK(one == doctest::Approx(4.0 * pi));
    CHECK(std::abs(x) < 1e-13);
    CHECK(x2 == doctest::Approx(4.0 * pi / 3.0));
    CHECK(x2y2 == doctest::Approx(4.0 * pi / 15.0));
}

TEST_CASE("hemisphere rule matches the full rule on even integrands") {
    const auto full = lebedev_like_rule(6);
    const auto half = full.hemisphere();
    CHECK(half.size() * 2 == full.size());
    auto integrate = [](const AngularRule& r) {
        double s = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) s += r.weights[k] * std::pow(r.dirs[k][2], 4);
        return s;
    };
    CHECK(integrate(half) == doctest::Approx(integrate(full)).epsilon(1e-13));
}

TEST_CASE("spatial grid wraps periodically") {
    const SpatialGrid g(1.0, 8, 1);
    CHECK(g.wrap(-1) == 7);
    CHECK(g.wrap(8) == 0);
    CHECK(g.cells() == 8);
    CHECK_THROWS(SpatialGrid(1.0, 8, 4));
}

}
