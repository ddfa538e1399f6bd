#include "mixkin/collision.hpp"
#include "mixkin/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mixkin;

namespace {

Vec3 unit(std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Vec3 w{z(rng), z(rng), z(rng)};
    const double n = std::sqrt(norm2(w));
    for (auto& x : w) x /= n;
    return w;
}

DistributionField pair_maxwellian(const SpeciesPair& s, const VelocityGrid& g, const Vec3& u, double th) {
    DistributionField F;
    F.A = maxwellian_field({1.0, u, th}, s.m[0], g);
    F.B = maxwellian_field({0.8, u, th}, s.m[1], g);
    return F;
}

} // namespace

TEST_SUITE("collision") {

TEST_CASE("post-collision velocities conserve momentum and energy") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    const double ma = 1.0, mb = 3.0;
    for (int k = 0; k < 50; ++k) {
        const Vec3 v{U(rng), U(rng), U(rng)}, vs{U(rng), U(rng), U(rng)};
        const auto w = unit(rng);
        const auto [vp, vsp] = post_collision(v, vs, w, ma, mb);
        for (int i = 0; i < 3; ++i) CHECK(ma * vp[i] + mb * vsp[i] == doctest::Approx(ma * v[i] + mb * vs[i]));
        CHECK(ma * norm2(vp) + mb * norm2(vsp) == doctest::Approx(ma * norm2(v) + mb * norm2(vs)));
    }
}

TEST_CASE("post_collision rejects a non-unit direction") {
    CHECK_THROWS_AS(post_collision({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, 1.0, 2.0), DomainError);
}

TEST_CASE("trilinear interpolation is exact on affine data and zero outside") {
    const VelocityGrid g(2.0, 8);
    const auto f = g.sample([](const Vec3& v) { return 1.0 + 2.0 * v[0] - v[1] + 0.5 * v[2]; });
    const Vec3 x{0.31, -0.77, 1.12};
    CHECK(interp_trilinear(f, g, x) == doctest::Approx(1.0 + 0.62 + 0.77 + 0.56));
    CHECK(interp_trilinear(f, g, {5.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("conservative collision term pairs to zero with the invariants") {
    const SpeciesPair s;
    const VelocityGrid g(4.0, 8);
    const CollisionOperator op(s, g, lebedev_like_rule(4));
    const auto F = seeded_nonequilibrium(s, g, 11);
    const auto Q = op.collide(F);
    for (double d : op.invariant_defects(Q)) CHECK(d < 1e-10);
}

TEST_CASE("entropy production: zero at equilibrium, negative away from it") {
    const SpeciesPair s;
    const VelocityGrid g(4.0, 8);
    const CollisionOperator op(s, g, lebedev_like_rule(4));
    CHECK(std::abs(op.entropy_production(pair_maxwellian(s, g, {0.2, 0.0, -0.1}, 1.1))) < 1e-10);
    CHECK(op.entropy_production(seeded_nonequilibrium(s, g, 5)) < -1e-4);
}

TEST_CASE("seeded states are positive and reproducible") {
    const SpeciesPair s;
    const VelocityGrid g(4.0, 6);
    const auto a = seeded_nonequilibrium(s, g, 9);
    const auto b = seeded_nonequilibrium(s, g, 9);
    CHECK(a.A == b.A);
    CHECK(a.B == b.B);
    for (double x : a.flat()) CHECK(x > 0.0);
}

TEST_CASE("equilibrium residual shrinks under refinement") {
    const SpeciesPair s;
    auto sup_eq = [&](int N) {
        const VelocityGrid g(3.0, N);
        const CollisionOperator op(s, g, lebedev_like_rule(4));
        const auto F = pair_maxwellian(s, g, {0, 0, 0}, 1.0);
        const auto q = op.Q(F.A, F.B, 0, 1);
        double m = 0.0;
        for (double x : q) m = std::max(m, std::abs(x));
        return m;
    };
    CHECK(sup_eq(8) < sup_eq(4));
}

TEST_CASE("Monte Carlo estimate agrees with the deterministic term") {
    const SpeciesPair s;
    const VelocityGrid g(3.0, 4);
    const CollisionOperator op(s, g, lebedev_like_rule(4));
    const auto F = seeded_nonequilibrium(s, g, 2);
    const auto det = op.Q(F.A, F.A, 0, 0);
    const auto [mc, var] = op.Q_monte_carlo(F.A, F.A, 0, 0, 20000, 7);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < det.size(); ++k) {
        err = std::max(err, std::abs(mc[k] - det[k]) - 5.0 * std::sqrt(var[k]));
        scale = std::max(scale, std::abs(det[k]));
    }
    CHECK(err < 0.05 * scale);
}

}
