#include "mixkin/grids.hpp"

#include "mixkin/errors.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <numbers>
#include <string>

namespace mixkin {

VelocityGrid::VelocityGrid(double R, int N) : R_(R), N_(N), h_(2.0 * R / N) {
    if (N < 4 || N % 2 != 0) throw ConfigError("velocity grid: N must be even and >= 4, got " + std::to_string(N));
    if (!(R > 0.0)) throw ConfigError("velocity grid: R must be positive");
}

Vec3 VelocityGrid::node(std::size_t k) const {
    const int l = static_cast<int>(k % N_);
    const int j = static_cast<int>((k / N_) % N_);
    const int i = static_cast<int>(k / (static_cast<std::size_t>(N_) * N_));
    return {coord(i), coord(j), coord(l)};
}

SpatialGrid::SpatialGrid(double Lx, int M, int d) : Lx_(Lx), M_(M), d_(d) {
    if (d != 1 && d != 3) throw ConfigError("spatial grid: dimension must be 1 or 3");
    if (M < 2) throw ConfigError("spatial grid: M must be >= 2");
    if (!(Lx > 0.0)) throw ConfigError("spatial grid: period must be positive");
}

std::size_t SpatialGrid::cells() const {
    return d_ == 1 ? static_cast<std::size_t>(M_) : static_cast<std::size_t>(M_) * M_ * M_;
}

std::size_t SpatialGrid::index(int i, int j, int k) const {
    if (d_ == 1) return static_cast<std::size_t>(wrap(i));
    return (static_cast<std::size_t>(wrap(i)) * M_ + wrap(j)) * M_ + wrap(k);
}

AngularRule lebedev_like_rule(int order) {
    if (order < 2 || order > 64 || order % 2 != 0)
        throw ConfigError("angular rule: order must be even in [2, 64], got " + std::to_string(order));
    AngularRule rule;
    rule.order = order;
    gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(order);
    const int nphi = 2 * order;
    const double dphi = 2.0 * std::numbers::pi / nphi;
    for (int a = 0; a < order; ++a) {
        double x = 0.0, w = 0.0;
        gsl_integration_glfixed_point(-1.0, 1.0, a, &x, &w, table);
        const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
        for (int b = 0; b < nphi; ++b) {
            const double phi = (b + 0.5) * dphi;
            rule.dirs.push_back({s * std::cos(phi), s * std::sin(phi), x});
            rule.weights.push_back(w * dphi);
        }
    }
    gsl_integration_glfixed_table_free(table);
    return rule;
}

AngularRule AngularRule::hemisphere() const {
    // Directions pair up as (x, phi) <-> (-x, phi + pi); keep the x > 0 member.
    AngularRule half;
    half.order = order;
    for (std::size_t j = 0; j < dirs.size(); ++j) {
        if (dirs[j][2] > 0.0) {
            half.dirs.push_back(dirs[j]);
            half.weights.push_back(2.0 * weights[j]);
        }
    }
    return half;
}

namespace {
double tree_sum(const double* p, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += p[i];
        return s;
    }
    const std::size_t half = n / 2;
    return tree_sum(p, half) + tree_sum(p + half, n - half);
}
} // namespace

double pairwise_sum(std::span<const double> v) { return tree_sum(v.data(), v.size()); }

double quad_v(std::span<const double> values, const VelocityGrid& grid) {
    if (values.size() != grid.size())
        throw ShapeError("quad_v: expected " + std::to_string(grid.size()) + " values, got " +
                         std::to_string(values.size()));
    return grid.weight() * pairwise_sum(values);
}

double inner_v(std::span<const double> a, std::span<const double> b, const VelocityGrid& grid) {
    if (a.size() != b.size()) throw ShapeError("inner_v: size mismatch");
    std::vector<double> prod(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) prod[k] = a[k] * b[k];
    return grid.weight() * pairwise_sum(prod);
}

} // namespace mixkin
