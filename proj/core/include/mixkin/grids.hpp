#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mixkin {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec3& a) { return dot(a, a); }

// Cell-centered cubic lattice on [-R, R]^3, index k = (i*N + j)*N + l.
class VelocityGrid {
public:
    VelocityGrid(double R, int N);

    double R() const { return R_; }
    int N() const { return N_; }
    double h() const { return h_; }
    double weight() const { return h_ * h_ * h_; }
    std::size_t size() const { return static_cast<std::size_t>(N_) * N_ * N_; }

    double coord(int i) const { return -R_ + (i + 0.5) * h_; }
    Vec3 node(std::size_t k) const;
    std::size_t index(int i, int j, int l) const {
        return (static_cast<std::size_t>(i) * N_ + j) * N_ + l;
    }

    template <class F>
    std::vector<double> sample(F&& f) const {
        std::vector<double> out(size());
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = f(node(k));
        return out;
    }

private:
    double R_;
    int N_;
    double h_;
};

// Periodic grid; d = 1 means fields vary along x1 only.
class SpatialGrid {
public:
    SpatialGrid(double Lx, int M, int d = 1);

    double Lx() const { return Lx_; }
    int M() const { return M_; }
    int dim() const { return d_; }
    double dx() const { return Lx_ / M_; }
    std::size_t cells() const;
    int wrap(int i) const { return ((i % M_) + M_) % M_; }
    double x(int i) const { return (i + 0.5) * dx(); }
    std::size_t index(int i, int j = 0, int k = 0) const;

private:
    double Lx_;
    int M_;
    int d_;
};

struct AngularRule {
    std::vector<Vec3> dirs;
    std::vector<double> weights;
    int order = 0;

    std::size_t size() const { return dirs.size(); }
    // Rule on the half sphere with doubled weights; exact for integrands even in omega.
    AngularRule hemisphere() const;
};

// Product Gauss-Legendre (cos theta) x trapezoid (phi, 2*order points).
AngularRule lebedev_like_rule(int order);

// Fixed-order pairwise tree sum.
double pairwise_sum(std::span<const double> v);

// h^3 * sum over nodes.
double quad_v(std::span<const double> values, const VelocityGrid& grid);

// Sum over nodes of a*b*h^3.
double inner_v(std::span<const double> a, std::span<const double> b, const VelocityGrid& grid);

} // namespace mixkin
