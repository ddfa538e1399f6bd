#include "mixkin/errors.hpp"
#include "mixkin/species.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixkin;

TEST_SUITE("species") {

TEST_CASE("gamma outside (-3, 1] is rejected") {
    SpeciesPair s;
    s.gamma = 1.5;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.gamma = -3.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.gamma = 1.0;
    CHECK_NOTHROW(s.validate());
    s.gamma = -2.9;
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("non-positive masses are rejected") {
    SpeciesPair s;
    s.m = {0.0, 2.0};
    CHECK_THROWS(s.validate());
}

TEST_CASE("discrete moments of a Maxwellian") {
    const SpeciesPair s;
    const VelocityGrid g(7.0, 28);
    const MaxwellParams pa{1.3, {0.2, -0.1, 0.05}, 1.1};
    const MaxwellParams pb{0.7, {0.2, -0.1, 0.05}, 1.1};
    const auto FA = maxwellian_field(pa, s.m[0], g);
    const auto FB = maxwellian_field(pb, s.m[1], g);
    const auto mm = moments(FA, FB, s, g);
    CHECK(mm.species[0].n == doctest::Approx(1.3).epsilon(1e-8));
    CHECK(mm.species[1].n == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(mm.u[0] == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(mm.u[1] == doctest::Approx(-0.1).epsilon(1e-8));
    CHECK(mm.theta == doctest::Approx(1.1).epsilon(1e-8));
    CHECK(mm.rho == doctest::Approx(1.3 * 1.0 + 0.7 * 2.0).epsilon(1e-8));
}

TEST_CASE("Maxwellian normalisation by direct formula") {
    // n (m / (2 pi theta))^{3/2} exp(-m |v-u|^2 / (2 theta))
    const MaxwellParams p{2.0, {0.5, 0.0, 0.0}, 0.8};
    const double m = 2.0;
    const Vec3 v{1.0, 0.3, -0.2};
    const double r2 = 0.25 + 0.09 + 0.04;
    const double expect = 2.0 * std::pow(m / (2.0 * M_PI * 0.8), 1.5) * std::exp(-m * r2 / 1.6);
    CHECK(maxwellian(p, m, v) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("polynomial weight") {
    CHECK(weight_w({3.0, 4.0, 0.0}, 2.0) == doctest::Approx(36.0));
}

TEST_CASE("theta_M selection and the mass-ratio bound") {
    const SpeciesPair s;
    const std::vector<double> ok{1.0, 1.2, 1.1};
    const auto f = select_theta_M(ok, s);
    CHECK(f.theta_M == doctest::Approx(1.0));
    const std::vector<double> bad{1.0, 3.0};
    CHECK_THROWS_AS(select_theta_M(bad, s), FrameError);
}

}
