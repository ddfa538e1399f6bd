#include "mixkin/kernel_estimates.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mixkin;

TEST_SUITE("kernel_estimates") {

TEST_CASE("cutoff profile") {
    const CutoffSpec c{0.1};
    CHECK(chi(0.0, c) == 1.0);
    CHECK(chi(0.1, c) == 1.0);
    CHECK(chi(0.2, c) == 0.0);
    CHECK(chi(0.15, c) == doctest::Approx(0.5));
    CHECK(chi(0.12, c) + chi(0.18, c) == doctest::Approx(1.0));
    CHECK_THROWS(CutoffSpec{0.0}.validate());
}

TEST_CASE("cross-species Jacobian: finite differences against the closed form") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::normal_distribution<double> Z;
    for (auto [ma, mb] : {std::pair{1.0, 2.0}, std::pair{3.0, 1.0}, std::pair{1.0, 1.0}}) {
        for (int k = 0; k < 20; ++k) {
            Vec3 w{Z(rng), Z(rng), Z(rng)};
            const double n = std::sqrt(norm2(w));
            for (auto& x : w) x /= n;
            const Vec3 v{U(rng), U(rng), U(rng)}, vs{U(rng), U(rng), U(rng)};
            CHECK(jacobian_cross_fd(v, vs, w, ma, mb) == doctest::Approx((mb - ma) / (ma + mb)).epsilon(1e-8));
        }
    }
}

TEST_CASE("perp_basis is orthonormal and orthogonal to e") {
    const Vec3 e{0.6, 0.0, 0.8};
    const auto b = perp_basis(e);
    CHECK(std::abs(dot(b[0], e)) < 1e-14);
    CHECK(std::abs(dot(b[1], e)) < 1e-14);
    CHECK(std::abs(dot(b[0], b[1])) < 1e-14);
    CHECK(norm2(b[0]) == doctest::Approx(1.0));
    CHECK(norm2(b[1]) == doctest::Approx(1.0));
}

TEST_CASE("equal-mass hybrid and typical kernels coincide in the mirrored configuration") {
    const auto f = default_kernel_frame(SpeciesPair{}, 0.1);
    const Vec3 v{0.3, -0.7, 1.1}, u{0.4, 0.2, -0.9};
    CHECK(k_M2_hybrid_equal(v, u, 0, f) == doctest::Approx(k_M2_typical(v, u, 0, 0, f)).epsilon(1e-10));
}

TEST_CASE("M1 and cross-hybrid bound reports pass at modest sample counts") {
    const auto f = default_kernel_frame(SpeciesPair{}, 0.1);
    const auto r1 = check_bound_M1(f, 0, 1, 4000);
    CHECK(r1.pass);
    CHECK(std::isfinite(r1.max_ratio));
    const auto r2 = check_bound_hybrid_cross(f, 0, 1, 4000);
    CHECK(r2.pass);
}

TEST_CASE("kernels are non-negative") {
    const auto f = default_kernel_frame(SpeciesPair{}, 0.1);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const Vec3 v{U(rng), U(rng), U(rng)}, w{U(rng), U(rng), U(rng)};
        CHECK(k_M1(v, w, 0, 1, f) >= 0.0);
        CHECK(k_M2_typical(v, w, 1, 0, f) >= 0.0);
    }
}

}
