#include "mixkin/linearized.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace mixkin;

namespace {

struct Small {
    SpeciesPair s;
    VelocityGrid g{4.0, 6};
    BiMaxwell bg{1.0, 0.8, {0.1, 0.0, 0.0}, 1.1};
    OperatorMatrix L = assemble_L(bg, s, g, lebedev_like_rule(4));
    KernelBasis basis = kernel_basis(bg, s, g);
};

const Small& small() {
    static const Small S;
    return S;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_SUITE("linearized") {

TEST_CASE("weak-form operator is symmetric and positive semidefinite") {
    const auto& S = small();
    CHECK(S.L.symmetry_defect() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(S.L.Ld));
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
}

TEST_CASE("collision invariants span the kernel") {
    const auto& S = small();
    for (int i = 0; i < 6; ++i) {
        const auto LX = S.L.apply(S.basis.X_orth[i]);
        CHECK(norm(LX) < 1e-10 * S.L.frobenius());
    }
}

TEST_CASE("orthonormalized basis is orthonormal under the lattice inner product") {
    const auto& S = small();
    const std::size_t n = S.g.size();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            const auto& a = S.basis.X_orth[i];
            const auto& b = S.basis.X_orth[j];
            double ip = 0.0;
            for (std::size_t k = 0; k < 2 * n; ++k) ip += a[k] * b[k];
            ip *= S.g.weight();
            CHECK(ip == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
        }
}

TEST_CASE("projection is idempotent") {
    const auto& S = small();
    std::vector<double> f(S.L.dim());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = std::sin(0.37 * k);
    const auto p1 = project_macro(f, S.basis, S.g);
    const auto p2 = project_macro(p1, S.basis, S.g);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(p2[k] == doctest::Approx(p1[k]).epsilon(1e-10));
}

TEST_CASE("micro solve inverts L on the orthogonal complement") {
    const auto& S = small();
    std::vector<double> r(S.L.dim());
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = std::cos(0.11 * k) * std::exp(-1e-3 * k);
    const auto pr = project_macro(r, S.basis, S.g);
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= pr[k];
    const auto f = solve_micro(S.L, r, S.basis);
    const auto Lf = S.L.apply(f);
    double err = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) err = std::max(err, std::abs(Lf[k] - r[k]));
    CHECK(err < 1e-8 * norm(r));
    for (double c : macro_coefficients(f, S.basis, S.g)) CHECK(std::abs(c) < 1e-10 * norm(f));
}

TEST_CASE("micro solve refuses an incompatible right-hand side") {
    const auto& S = small();
    CHECK_THROWS(solve_micro(S.L, S.basis.X_orth[0], S.basis));
}

TEST_CASE("coercivity constant is positive and bounds the Rayleigh quotient on micro vectors") {
    const auto& S = small();
    const auto co = coercivity(S.L, S.basis);
    CHECK(co.c0 > 0.0);
    CHECK(co.c0 < 1.0);
}

TEST_CASE("single precision assembly stays close to double") {
    const auto& S = small();
    AssemblyOptions opt;
    opt.single_precision = true;
    const auto Lf = assemble_L(S.bg, S.s, S.g, lebedev_like_rule(4), opt);
    double err = 0.0;
    for (std::size_t r = 0; r < S.L.dim(); ++r)
        for (std::size_t c = 0; c < S.L.dim(); ++c) err = std::max(err, std::abs(Lf.entry(r, c) - S.L.entry(r, c)));
    CHECK(err < 1e-5 * S.L.frobenius());
}

}
