#include "mixkin/linearized.hpp"

#include "mixkin/errors.hpp"
#include "mixkin/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>

namespace mixkin {

namespace {

// Trilinear weights plus a (1,-2,1) correction along the first axis that cancels the trilinear
// excess on |v|^2, so quadratics are reproduced exactly. Nine distinct nodes.
struct Stencil {
    static constexpr int kSize = 9;
    int idx[kSize];
    double w[kSize];
};

// False when x leaves the node hull, where the field is continued by zero.
inline bool stencil(const VelocityGrid& g, const double* x, Stencil& st) {
    const int N = g.N();
    const double inv_h = 1.0 / g.h(), off = g.R() / g.h() - 0.5;
    int i0[3];
    double t[3];
    for (int d = 0; d < 3; ++d) {
        const double s = x[d] * inv_h + off;
        if (s < 0.0 || s > N - 1) return false;
        i0[d] = std::min(static_cast<int>(s), N - 2);
        t[d] = s - i0[d];
    }
    int n = 0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int e = 0; e < 2; ++e) {
                st.idx[n] = ((i0[0] + a) * N + (i0[1] + b)) * N + (i0[2] + e);
                st.w[n++] = (a ? t[0] : 1.0 - t[0]) * (b ? t[1] : 1.0 - t[1]) * (e ? t[2] : 1.0 - t[2]);
            }
    const double kappa = -0.5 * (t[0] * (1.0 - t[0]) + t[1] * (1.0 - t[1]) + t[2] * (1.0 - t[2]));
    // Cube entries 0 and 4 sit at (i0x, i0y, i0z) and (i0x+1, i0y, i0z).
    const int NN = N * N;
    if (i0[0] >= 1) {
        st.w[0] += -2.0 * kappa;
        st.w[4] += kappa;
        st.idx[8] = st.idx[0] - NN;
    } else {
        st.w[0] += kappa;
        st.w[4] += -2.0 * kappa;
        st.idx[8] = st.idx[4] + NN;
    }
    st.w[8] = kappa;
    return true;
}

inline double gauss(const MaxwellParams& p, double m, const double* x) {
    const double dx = x[0] - p.u[0], dy = x[1] - p.u[1], dz = x[2] - p.u[2];
    return p.n * std::pow(m / (2.0 * std::numbers::pi * p.theta), 1.5) *
           std::exp(-m * (dx * dx + dy * dy + dz * dz) / (2.0 * p.theta));
}

template <class Mat>
void accumulate(Mat& A, const int* idx, const double* l, const double* r, int len, double C) {
    for (int a = 0; a < len; ++a) {
        const double ca = C * l[a];
        auto* row = &A(idx[a], 0);
        for (int b = 0; b < len; ++b) row[idx[b]] += static_cast<typename Mat::Scalar>(ca * r[b]);
    }
}

OperatorMatrix assemble(const BiMaxwell& bg, const std::optional<GlobalFrame>& gf, const SpeciesPair& s,
                        const VelocityGrid& grid, const AngularRule& rule, const AssemblyOptions& opt) {
    s.validate();
    if (!(bg.nA > 0.0 && bg.nB > 0.0 && bg.theta > 0.0)) throw DomainError("assemble_L: invalid background");
    const std::size_t n = grid.size(), dim = 2 * n;
    const AngularRule half = rule.hemisphere();
    const std::size_t nw = half.size();
    const bool local = !gf.has_value();

    std::array<MaxwellParams, 2> bp, fp;
    std::array<std::vector<double>, 2> mu, w;
    for (int a = 0; a < 2; ++a) {
        bp[a] = bg.species(a);
        fp[a] = local ? bp[a] : MaxwellParams{1.0, Vec3{0.0, 0.0, 0.0}, gf->theta_M};
        mu[a] = maxwellian_field(bp[a], s.m[a], grid);
        w[a] = maxwellian_field(fp[a], s.m[a], grid);
    }
    std::array<std::vector<double>, 2> sqmu;
    for (int a = 0; a < 2; ++a) {
        sqmu[a].resize(n);
        for (std::size_t k = 0; k < n; ++k) sqmu[a][k] = std::sqrt(mu[a][k]);
    }
    std::vector<Vec3> nodes(n);
    for (std::size_t k = 0; k < n; ++k) nodes[k] = grid.node(k);

    OperatorMatrix L;
    L.frame = local ? OperatorFrame::Local : OperatorFrame::Global;
    L.background = bg;
    L.global = gf;
    L.species = s;
    L.grid = grid;
    L.single_precision = opt.single_precision;
    if (opt.single_precision)
        L.Lf = OperatorMatrix::RowMajorF::Zero(dim, dim);
    else
        L.Ld = OperatorMatrix::RowMajorD::Zero(dim, dim);
    L.nu.assign(dim, 0.0);

    const double cut2 = 4.0 * grid.R() * grid.R();
    const double h3 = grid.weight();
    const double bscale = s.b(1.0);
    constexpr int kLen = 2 * Stencil::kSize + 2;
    int idx[kLen];
    double lv[kLen], rv[kLen];
    Stencil s1, s2;

    // The weak form pairs test vector l with trial vector r at each quadrature point (v_i, v_j, w):
    //   <L g, p> = sum C (l . p)(r . g),  C = kappa h^3 B mu_i mu*_j,
    // l = (p'/sqrt w', p*'/sqrt w*', -p_i/sqrt w_i, -p_j/sqrt w_j), r likewise with sqrt w / mu.
    // Post-collision values of g, p come from the stencil. Local frame: l = r, hence exact symmetry.
    // Sequential: every quadrature point scatters into rows shared by all pairs.
    for (int alpha = 0; alpha < 2; ++alpha)
        for (int beta = alpha; beta < 2; ++beta) {
            const double ma = s.m[alpha], mb = s.m[beta];
            const double cb = 2.0 * mb / (ma + mb), ca = 2.0 * ma / (ma + mb);
            // 1/4 per ordered pair: same-species loops run j > i (1/2), cross loops every (i, j) once (1/2).
            const double kappa = 0.5;
            const double pref0 = h3 * s.C_phi[alpha][beta] * bscale;
            const std::size_t oa = alpha * n, ob = beta * n;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 v = nodes[i];
                const double sqi = std::sqrt(mu[alpha][i]), swi = std::sqrt(w[alpha][i]);
                for (std::size_t j = alpha == beta ? i + 1 : 0; j < n; ++j) {
                    const Vec3& vs = nodes[j];
                    const double gx = v[0] - vs[0], gy = v[1] - vs[1], gz = v[2] - vs[2];
                    const double g2 = gx * gx + gy * gy + gz * gz;
                    if (g2 == 0.0) continue;
                    const double pref = pref0 * (s.gamma == 1.0 ? 1.0 : std::pow(std::sqrt(g2), s.gamma - 1.0));
                    const double sqj = std::sqrt(mu[beta][j]), swj = std::sqrt(w[beta][j]);
                    double wsum = 0.0;
                    for (std::size_t q = 0; q < nw; ++q) {
                        const Vec3& om = half.dirs[q];
                        const double gw = gx * om[0] + gy * om[1] + gz * om[2];
                        const double coef = half.weights[q] * std::abs(gw);
                        wsum += coef;
                        if (g2 > cut2) continue;
                        const double a = cb * gw, b = ca * gw;
                        const double vp[3] = {v[0] - a * om[0], v[1] - a * om[1], v[2] - a * om[2]};
                        const double vsp[3] = {vs[0] + b * om[0], vs[1] + b * om[1], vs[2] + b * om[2]};
                        int len = 0;
                        double C;
                        if (local) {
                            // l = r = sqrt(mu_i mu_j) (g'/sqrt mu', ...), using mu' mu*' = mu_i mu_j.
                            const double sp = std::sqrt(gauss(bp[alpha], ma, vp));
                            const double ssp = std::sqrt(gauss(bp[beta], mb, vsp));
                            C = kappa * pref * coef;
                            const bool in1 = stencil(grid, vp, s1), in2 = stencil(grid, vsp, s2);
                            if (opt.exact_kernel && !(in1 && in2)) continue;
                            if (in1)
                                for (int k = 0; k < Stencil::kSize; ++k) {
                                    idx[len] = static_cast<int>(oa) + s1.idx[k];
                                    lv[len] = rv[len] = s1.w[k] * ssp * (opt.exact_kernel ? sp / sqmu[alpha][s1.idx[k]] : 1.0);
                                    ++len;
                                }
                            if (in2)
                                for (int k = 0; k < Stencil::kSize; ++k) {
                                    idx[len] = static_cast<int>(ob) + s2.idx[k];
                                    lv[len] = rv[len] = s2.w[k] * sp * (opt.exact_kernel ? ssp / sqmu[beta][s2.idx[k]] : 1.0);
                                    ++len;
                                }
                            idx[len] = static_cast<int>(oa + i);
                            lv[len] = rv[len] = -sqj;
                            ++len;
                            idx[len] = static_cast<int>(ob + j);
                            lv[len] = rv[len] = -sqi;
                            ++len;
                        } else {
                            const double wp = std::sqrt(gauss(fp[alpha], ma, vp));
                            const double wsp = std::sqrt(gauss(fp[beta], mb, vsp));
                            const double mp = gauss(bp[alpha], ma, vp), msp = gauss(bp[beta], mb, vsp);
                            C = kappa * pref * coef * mu[alpha][i] * mu[beta][j];
                            if (stencil(grid, vp, s1))
                                for (int k = 0; k < Stencil::kSize; ++k) {
                                    idx[len] = static_cast<int>(oa) + s1.idx[k];
                                    lv[len] = s1.w[k] / wp;
                                    rv[len] = s1.w[k] * wp / mp;
                                    ++len;
                                }
                            if (stencil(grid, vsp, s2))
                                for (int k = 0; k < Stencil::kSize; ++k) {
                                    idx[len] = static_cast<int>(ob) + s2.idx[k];
                                    lv[len] = s2.w[k] / wsp;
                                    rv[len] = s2.w[k] * wsp / msp;
                                    ++len;
                                }
                            idx[len] = static_cast<int>(oa + i);
                            lv[len] = -1.0 / swi;
                            rv[len] = -swi / mu[alpha][i];
                            ++len;
                            idx[len] = static_cast<int>(ob + j);
                            lv[len] = -1.0 / swj;
                            rv[len] = -swj / mu[beta][j];
                            ++len;
                        }
                        if (opt.single_precision)
                            accumulate(L.Lf, idx, lv, rv, len, C);
                        else
                            accumulate(L.Ld, idx, lv, rv, len, C);
                    }
                    L.nu[oa + i] += pref * wsum * mu[beta][j];
                    L.nu[ob + j] += pref * wsum * mu[alpha][i];
                }
            }
        }
    return L;
}

double inner(std::span<const double> a, std::span<const double> b, double w) {
    std::vector<double> p(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) p[k] = a[k] * b[k];
    return w * pairwise_sum(p);
}

} // namespace

std::vector<double> OperatorMatrix::apply(std::span<const double> f) const {
    if (f.size() != dim()) throw ShapeError("operator apply: size mismatch");
    std::vector<double> out(dim());
    if (single_precision) {
        const Eigen::VectorXf x = Eigen::Map<const Eigen::VectorXd>(f.data(), f.size()).cast<float>();
        Eigen::VectorXd y = (Lf * x).cast<double>();
        std::copy(y.data(), y.data() + y.size(), out.begin());
    } else {
        Eigen::Map<Eigen::VectorXd>(out.data(), out.size()).noalias() =
            Ld * Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
    }
    return out;
}

double OperatorMatrix::symmetry_defect() const {
    double num = 0.0, den = 0.0;
    const std::size_t d = dim();
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < d; ++c) {
            const double a = entry(r, c), b = entry(c, r);
            num += (a - b) * (a - b);
            den += a * a;
        }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

double OperatorMatrix::frobenius() const { return single_precision ? static_cast<double>(Lf.norm()) : Ld.norm(); }

double nu_alpha(const Vec3& v, int alpha, const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid,
                const AngularRule& rule) {
    const AngularRule half = rule.hemisphere();
    const double bscale = s.b(1.0);
    std::vector<double> terms;
    terms.reserve(2 * grid.size());
    for (int beta = 0; beta < 2; ++beta) {
        const auto mu = maxwellian_field(bg.species(beta), s.m[beta], grid);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const Vec3 vs = grid.node(j);
            const Vec3 g{v[0] - vs[0], v[1] - vs[1], v[2] - vs[2]};
            const double gn = std::sqrt(norm2(g));
            if (gn == 0.0) continue;
            double a = 0.0;
            for (std::size_t q = 0; q < half.size(); ++q) a += half.weights[q] * std::abs(dot(g, half.dirs[q]));
            terms.push_back(grid.weight() * s.C_phi[alpha][beta] * bscale * std::pow(gn, s.gamma - 1.0) * a * mu[j]);
        }
    }
    return pairwise_sum(terms);
}

OperatorMatrix assemble_L(const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid,
                          const AngularRule& rule, const AssemblyOptions& opt) {
    return assemble(bg, std::nullopt, s, grid, rule, opt);
}

OperatorMatrix assemble_L_global(const BiMaxwell& bg, const GlobalFrame& gf, const SpeciesPair& s,
                                 const VelocityGrid& grid, const AngularRule& rule, const AssemblyOptions& opt) {
    return assemble(bg, gf, s, grid, rule, opt);
}

std::vector<double> apply_L_definition(std::span<const double> f, const BiMaxwell& bg, const CollisionOperator& op) {
    const auto& grid = op.grid();
    const auto& s = op.species();
    const std::size_t n = grid.size();
    if (f.size() != 2 * n) throw ShapeError("apply_L_definition: size mismatch");
    std::array<std::vector<double>, 2> mu, smf;
    for (int a = 0; a < 2; ++a) {
        mu[a] = maxwellian_field(bg.species(a), s.m[a], grid);
        smf[a].resize(n);
        for (std::size_t k = 0; k < n; ++k) smf[a][k] = std::sqrt(mu[a][k]) * f[a * n + k];
    }
    std::vector<double> out(2 * n, 0.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const auto q1 = op.Q(mu[a], smf[b], a, b);
            const auto q2 = op.Q(smf[a], mu[b], a, b);
            for (std::size_t k = 0; k < n; ++k) out[a * n + k] -= (q1[k] + q2[k]) / std::sqrt(mu[a][k]);
        }
    return out;
}

KernelBasis kernel_basis(const BiMaxwell& bg, const SpeciesPair& s, const VelocityGrid& grid) {
    if (!(bg.nA > 0.0 && bg.nB > 0.0 && bg.theta > 0.0)) throw DomainError("kernel_basis: parameters must be positive");
    const std::size_t n = grid.size();
    KernelBasis kb;
    kb.params = bg;
    for (auto& x : kb.X) x.assign(2 * n, 0.0);
    const double th = bg.theta, rho = bg.rho(s), ntot = bg.n();
    for (int a = 0; a < 2; ++a) {
        const auto mu = maxwellian_field(bg.species(a), s.m[a], grid);
        const double na = a == 0 ? bg.nA : bg.nB;
        const double m = s.m[a];
        for (std::size_t k = 0; k < n; ++k) {
            const Vec3 v = grid.node(k);
            const Vec3 c{v[0] - bg.u[0], v[1] - bg.u[1], v[2] - bg.u[2]};
            const double sm = std::sqrt(mu[k]);
            kb.X[a][a * n + k] = sm / std::sqrt(na);
            for (int d = 0; d < 3; ++d) kb.X[2 + d][a * n + k] = c[d] * m * sm / std::sqrt(th * rho);
            kb.X[5][a * n + k] = (m * norm2(c) / th - 3.0) * sm / std::sqrt(6.0 * ntot);
        }
    }
    for (int i = 0; i < 6; ++i)
        for (int j = i; j < 6; ++j) kb.gram(i, j) = kb.gram(j, i) = inner(kb.X[i], kb.X[j], grid.weight());
    // Loewdin: X_orth = X G^{-1/2}.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(kb.gram);
    const Eigen::Matrix<double, 6, 6> Gih = es.operatorInverseSqrt();
    for (int i = 0; i < 6; ++i) {
        kb.X_orth[i].assign(2 * n, 0.0);
        for (int j = 0; j < 6; ++j)
            for (std::size_t k = 0; k < 2 * n; ++k) kb.X_orth[i][k] += kb.X[j][k] * Gih(j, i);
    }
    return kb;
}

std::array<double, 6> macro_coefficients(std::span<const double> f, const KernelBasis& basis, const VelocityGrid& grid) {
    if (f.size() != basis.dim()) throw ShapeError("projection: size mismatch");
    std::array<double, 6> c{};
    for (int i = 0; i < 6; ++i) c[i] = inner(f, basis.X_orth[i], grid.weight());
    return c;
}

std::vector<double> project_macro(std::span<const double> f, const KernelBasis& basis, const VelocityGrid& grid) {
    const auto c = macro_coefficients(f, basis, grid);
    std::vector<double> out(f.size(), 0.0);
    for (int i = 0; i < 6; ++i)
        for (std::size_t k = 0; k < f.size(); ++k) out[k] += c[i] * basis.X_orth[i][k];
    return out;
}

namespace {

constexpr std::size_t kDenseMicroLimit = 4096;

void remove_macro(std::vector<double>& f, const KernelBasis& basis, const VelocityGrid& grid) {
    const auto p = project_macro(f, basis, grid);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] -= p[k];
}

} // namespace

std::vector<double> solve_micro(const OperatorMatrix& L, std::span<const double> R, const KernelBasis& basis,
                                const MicroSolveOptions& opt) {
    const auto& grid = L.grid;
    const double w = grid.weight();
    if (R.size() != L.dim()) throw ShapeError("solve_micro: size mismatch");
    const double rn = std::sqrt(inner(R, R, w));
    std::vector<double> f(R.size(), 0.0);
    if (rn == 0.0) return f;
    const auto c = macro_coefficients(R, basis, grid);
    for (int i = 0; i < 6; ++i)
        if (std::abs(c[i]) > opt.tol_compat * rn)
            throw SolvabilityError("solve_micro: right-hand side has macroscopic component " + std::to_string(c[i]) +
                                   " along X" + std::to_string(i));
    std::vector<double> b(R.begin(), R.end());
    remove_macro(b, basis, grid);

    double trace = 0.0;
    for (std::size_t k = 0; k < L.dim(); ++k) trace += L.entry(k, k);
    const double ridge = 1e-12 * trace / L.dim();
    if (L.dim() <= kDenseMicroLimit) {
        // L plus a positive multiple of the kernel projector is definite and keeps micro data micro.
        const Eigen::Index d = static_cast<Eigen::Index>(L.dim());
        Eigen::MatrixXd A(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) A(r, c) = L.entry(r, c);
        const double shift = trace / L.dim();
        for (int i = 0; i < 6; ++i) {
            const Eigen::Map<const Eigen::VectorXd> x(basis.X_orth[i].data(), d);
            A.noalias() += (shift * w) * x * x.transpose();
        }
        const Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) throw NumericalError("solve_micro: kernel-shifted operator is not definite");
        const Eigen::VectorXd x = llt.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), d));
        f.assign(x.data(), x.data() + d);
        remove_macro(f, basis, grid);
        return f;
    }
    auto A = [&](const std::vector<double>& x) {
        auto y = L.apply(x);
        remove_macro(y, basis, grid);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += ridge * x[k];
        return y;
    };
    // Conjugate gradients on the micro subspace.
    std::vector<double> r = b, p = b;
    double rr = inner(r, r, w);
    const double target = opt.solver_tol * opt.solver_tol * inner(b, b, w);
    int it = 0;
    for (; it < opt.max_iter && rr > target; ++it) {
        const auto Ap = A(p);
        const double alpha = rr / inner(p, Ap, w);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f[k] += alpha * p[k];
            r[k] -= alpha * Ap[k];
        }
        const double rr_new = inner(r, r, w);
        for (std::size_t k = 0; k < f.size(); ++k) p[k] = r[k] + (rr_new / rr) * p[k];
        rr = rr_new;
    }
    if (rr > target) throw NumericalError("solve_micro: conjugate gradients stagnated");
    remove_macro(f, basis, grid);
    return f;
}

double rayleigh_quotient(const OperatorMatrix& L, std::span<const double> f) {
    const auto Lf = L.apply(f);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        num += Lf[k] * f[k];
        den += L.nu[k] * f[k] * f[k];
    }
    return num / den;
}

CoercivityResult coercivity(const OperatorMatrix& L, const KernelBasis& basis, int max_iter, double tol) {
    if (L.frame != OperatorFrame::Local) throw FrameError("coercivity: local-frame operator expected");
    const Eigen::Index d = static_cast<Eigen::Index>(L.dim());
    Eigen::VectorXd dinv(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        if (!(L.nu[k] > 0.0)) throw NumericalError("coercivity: nonpositive collision frequency");
        dinv[k] = 1.0 / std::sqrt(L.nu[k]);
    }
    // Micro constraint <f, X_i> = 0 becomes y orthogonal to nu^{-1/2} X_i for y = nu^{1/2} f.
    Eigen::MatrixXd Y(d, 6);
    for (int i = 0; i < 6; ++i)
        for (Eigen::Index k = 0; k < d; ++k) Y(k, i) = basis.X_orth[i][k] * dinv[k];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
    const Eigen::MatrixXd Yq = qr.householderQ() * Eigen::MatrixXd::Identity(d, 6);

    // T = P S P + sigma Y Y^T with S = nu^{-1/2} L nu^{-1/2}; T^{-1} has 1/c0 as its top eigenvalue on Y-perp.
    Eigen::MatrixXd T(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c) T(r, c) = L.entry(r, c) * (dinv[r] * dinv[c]);
    const Eigen::MatrixXd SY = T * Yq;
    const Eigen::MatrixXd YSY = Yq.transpose() * SY;
    const double sigma = 10.0 * T.diagonal().maxCoeff();
    T.noalias() -= Yq * SY.transpose();
    T.noalias() -= SY * Yq.transpose();
    T.noalias() += Yq * (YSY + sigma * Eigen::MatrixXd::Identity(6, 6)) * Yq.transpose();
    T = (0.5 * (T + T.transpose())).eval();
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(T);
    if (llt.info() != Eigen::Success)
        throw NumericalError("coercivity: restricted operator is not positive definite (grid too coarse)");
    auto deflate = [&](Eigen::VectorXd& x) {
        for (int pass = 0; pass < 2; ++pass) x -= Yq * (Yq.transpose() * x);
    };

    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::VectorXd q(d);
    for (Eigen::Index k = 0; k < d; ++k) q[k] = nd(rng);
    deflate(q);
    q.normalize();

    const int m = std::min<int>(max_iter, static_cast<int>(d) - 6);
    Eigen::MatrixXd V(d, m + 1);
    std::vector<double> alpha, beta;
    V.col(0) = q;
    CoercivityResult res;
    for (int k = 0; k < m; ++k) {
        Eigen::VectorXd w = llt.solve(V.col(k));
        alpha.push_back(V.col(k).dot(w));
        for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(k + 1) * (V.leftCols(k + 1).transpose() * w);
        deflate(w);
        const double b = w.norm();
        const int sz = k + 1;
        Eigen::MatrixXd Tk = Eigen::MatrixXd::Zero(sz, sz);
        for (int i = 0; i < sz; ++i) {
            Tk(i, i) = alpha[i];
            if (i + 1 < sz) Tk(i, i + 1) = Tk(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Tk);
        const double top = es.eigenvalues()[sz - 1];
        res.c0 = 1.0 / top;
        res.residual = std::abs(b * es.eigenvectors()(sz - 1, sz - 1)) / top;
        res.iterations = sz;
        if (res.residual < tol || b < 1e-14 * top || k + 1 == m) {
            const Eigen::VectorXd y = V.leftCols(sz) * es.eigenvectors().col(sz - 1);
            const Eigen::VectorXd f = dinv.cwiseProduct(y);
            res.eigenvector.assign(f.data(), f.data() + d);
            break;
        }
        beta.push_back(b);
        V.col(k + 1) = w / b;
    }
    if (!(res.c0 > 0.0) || !(res.c0 < sigma))
        throw NumericalError("coercivity: nonpositive estimate (grid too coarse)");
    return res;
}

void export_operator(const OperatorMatrix& L, const std::string& stem) {
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw ConfigError("export_operator: cannot open " + stem + ".bin");
    const std::size_t d = L.dim();
    std::vector<double> row(d);
    for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) row[c] = L.entry(r, c);
        bin.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(d * sizeof(double)));
    }
    nlohmann::json j;
    j["rows"] = d;
    j["cols"] = d;
    j["dtype"] = "float64-le";
    j["order"] = "row-major, species-major";
    j["frame"] = L.frame == OperatorFrame::Local ? "L_delta" : "L_M";
    j["grid"] = {{"R", L.grid.R()}, {"N", L.grid.N()}};
    j["params"] = {{"nA", L.background.nA}, {"nB", L.background.nB}, {"u", L.background.u},
                   {"theta", L.background.theta}};
    j["masses"] = L.species.m;
    j["gamma"] = L.species.gamma;
    if (L.global) j["theta_M"] = L.global->theta_M;
    std::ofstream(stem + ".json") << j.dump(2) << "\n";
}

} // namespace mixkin
