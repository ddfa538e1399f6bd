#include "mixkin/hilbert.hpp"

#include "mixkin/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mixkin {

namespace {

std::size_t neighbour_cell(const SpatialGrid& g, std::size_t c, int axis, int s) {
    const int M = g.M();
    if (g.dim() == 1) return g.index(static_cast<int>(c) + s);
    int idx[3] = {static_cast<int>(c / (static_cast<std::size_t>(M) * M)), static_cast<int>((c / M) % M),
                  static_cast<int>(c % M)};
    idx[axis] += s;
    return g.index(idx[0], idx[1], idx[2]);
}

DistributionField zero_field(FrameTag tag, std::size_t n) {
    DistributionField f;
    f.frame = tag;
    f.A.assign(n, 0.0);
    f.B.assign(n, 0.0);
    return f;
}

double field_norm(const DistributionField& f, double w) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (double x : f.species(a)) s += x * x;
    return std::sqrt(s * w);
}

FluidState shifted(const FluidState& s, const FluidState& d, double tau) {
    FluidState r = s;
    for (std::size_t c = 0; c < s.size(); ++c) {
        r.nA[c] += tau * d.nA[c];
        r.nB[c] += tau * d.nB[c];
        r.theta[c] += tau * d.theta[c];
        for (int k = 0; k < 3; ++k) r.u[k][c] += tau * d.u[k][c];
    }
    return r;
}

// sqrt(mu) times the micro part of f1.
DistributionField raw_micro(const CellCorrector& cc) {
    DistributionField r = cc.f1.micro;
    r.frame = FrameTag::Raw;
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k < r.species(a).size(); ++k) r.species(a)[k] *= cc.sqrt_mu.species(a)[k];
    return r;
}

} // namespace

void HilbertSetup::validate() const {
    species.validate();
    if (angular_order < 2 || angular_order % 2 != 0) throw ConfigError("hilbert: angular order must be even >= 2");
    if (!(tau > 0.0)) throw ConfigError("hilbert: tau must be positive");
}

void ExpansionTruncation::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("expansion: eps must be positive");
    if (K < 0 || K > 1) throw ConfigError("expansion: only K = 0 and K = 1 are validated");
}

BiMaxwell local_state(const FluidState& s, std::size_t c) {
    return BiMaxwell{s.nA[c], s.nB[c], {s.u[0][c], s.u[1][c], s.u[2][c]}, s.theta[c]};
}

DistributionField build_F0(const FluidState& s, std::size_t cell, const VelocityGrid& vgrid) {
    if (!(s.nA[cell] > 0.0 && s.nB[cell] > 0.0 && s.theta[cell] > 0.0))
        throw DomainError("build_F0: non-positive state in cell " + std::to_string(cell));
    DistributionField F;
    F.frame = FrameTag::Raw;
    F.A = maxwellian_field(s.local(0, cell), s.m[0], vgrid);
    F.B = maxwellian_field(s.local(1, cell), s.m[1], vgrid);
    return F;
}

std::vector<DistributionField> build_F0(const FluidState& s, const VelocityGrid& vgrid) {
    s.validate();
    std::vector<DistributionField> out;
    out.reserve(s.size());
    for (std::size_t c = 0; c < s.size(); ++c) out.push_back(build_F0(s, c, vgrid));
    return out;
}

DistributionField build_R0(const FluidState& s, const FluidState& rhs, std::size_t cell, const VelocityGrid& vgrid) {
    const auto& g = s.grid;
    const int d = g.dim();
    // Gradients at the cell from centered differences.
    std::array<std::array<double, 6>, 3> grad{};
    for (int a = 0; a < d; ++a) {
        const std::size_t cp = neighbour_cell(g, cell, a, 1), cm = neighbour_cell(g, cell, a, -1);
        const double inv = 0.5 / g.dx();
        grad[a] = {(s.nA[cp] - s.nA[cm]) * inv, (s.nB[cp] - s.nB[cm]) * inv, (s.u[0][cp] - s.u[0][cm]) * inv,
                   (s.u[1][cp] - s.u[1][cm]) * inv, (s.u[2][cp] - s.u[2][cm]) * inv,
                   (s.theta[cp] - s.theta[cm]) * inv};
    }
    const std::array<double, 6> dt{rhs.nA[cell], rhs.nB[cell], rhs.u[0][cell], rhs.u[1][cell], rhs.u[2][cell],
                                   rhs.theta[cell]};
    const double th = s.theta[cell];
    const Vec3 u{s.u[0][cell], s.u[1][cell], s.u[2][cell]};
    DistributionField R = zero_field(FrameTag::Fluctuation, vgrid.size());
    for (int al = 0; al < 2; ++al) {
        const double m = s.m[al], n = al == 0 ? s.nA[cell] : s.nB[cell];
        const auto p = s.local(al, cell);
        auto dlog = [&](const std::array<double, 6>& q, const Vec3& c, double A) {
            return q[al] / n - 1.5 * q[5] / th + m * (c[0] * q[2] + c[1] * q[3] + c[2] * q[4]) / th + A * q[5] / th;
        };
        auto& out = R.species(al);
        for (std::size_t k = 0; k < vgrid.size(); ++k) {
            const Vec3 v = vgrid.node(k);
            const Vec3 c{v[0] - u[0], v[1] - u[1], v[2] - u[2]};
            const double A = m * norm2(c) / (2.0 * th);
            double D = dlog(dt, c, A);
            for (int a = 0; a < d; ++a) D += v[a] * dlog(grad[a], c, A);
            out[k] = -std::sqrt(maxwellian(p, m, v)) * D;
        }
    }
    return R;
}

std::vector<DistributionField> build_R0(const FluidState& s, const VelocityGrid& vgrid) {
    const FluidState rhs = euler_rhs(s);
    std::vector<DistributionField> out;
    out.reserve(s.size());
    for (std::size_t c = 0; c < s.size(); ++c) out.push_back(build_R0(s, rhs, c, vgrid));
    return out;
}

std::array<double, 6> compatibility(const DistributionField& R0, const KernelBasis& basis, const VelocityGrid& vgrid) {
    const auto flat = R0.flat();
    auto c = macro_coefficients(flat, basis, vgrid);
    const double n = field_norm(R0, vgrid.weight());
    if (n > 0.0)
        for (double& x : c) x /= n;
    return c;
}

DistributionField macro_part(const BiMaxwell& bg, const std::array<double, 6>& coeffs, const SpeciesPair& s,
                             const VelocityGrid& vgrid) {
    DistributionField P = zero_field(FrameTag::Fluctuation, vgrid.size());
    const double th = bg.theta;
    for (int al = 0; al < 2; ++al) {
        const double m = s.m[al], n = al == 0 ? bg.nA : bg.nB;
        const auto p = bg.species(al);
        auto& out = P.species(al);
        for (std::size_t k = 0; k < vgrid.size(); ++k) {
            const Vec3 v = vgrid.node(k);
            const Vec3 c{v[0] - bg.u[0], v[1] - bg.u[1], v[2] - bg.u[2]};
            const double val = coeffs[al] / n + m * (c[0] * coeffs[2] + c[1] * coeffs[3] + c[2] * coeffs[4]) / th +
                               coeffs[5] / (6.0 * th) * (m * norm2(c) / th - 3.0);
            out[k] = val * std::sqrt(maxwellian(p, m, v));
        }
    }
    return P;
}

FirstCorrector build_f1(const DistributionField& R0, const OperatorMatrix& L, const KernelBasis& basis,
                        const std::array<double, 6>& macro_coeffs, const MicroSolveOptions& opt) {
    const auto& vgrid = L.grid;
    FirstCorrector f;
    const auto micro = solve_micro(L, R0.flat(), basis, opt);
    f.micro = DistributionField::from_flat(FrameTag::Fluctuation, micro);
    f.macro = macro_part(L.background, macro_coeffs, L.species, vgrid);
    f.total = f.micro;
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k < vgrid.size(); ++k) f.total.species(a)[k] += f.macro.species(a)[k];
    const double n = field_norm(f.micro, vgrid.weight());
    if (n > 0.0) {
        for (double c : macro_coefficients(micro, basis, vgrid))
            f.projection_defect = std::max(f.projection_defect, std::abs(c) / n);
    }
    return f;
}

CellCorrector corrector_at(const FluidState& s, const FluidState& rhs, std::size_t cell, const HilbertSetup& h) {
    CellCorrector cc;
    cc.bg = local_state(s, cell);
    const auto rule = lebedev_like_rule(h.angular_order);
    const OperatorMatrix L = assemble_L(cc.bg, h.species, h.vgrid, rule, h.assembly);
    const KernelBasis basis = kernel_basis(cc.bg, h.species, h.vgrid);
    cc.R0 = build_R0(s, rhs, cell, h.vgrid);
    cc.f1 = build_f1(cc.R0, L, basis, {}, h.micro);
    cc.Lf1 = DistributionField::from_flat(FrameTag::Fluctuation, L.apply(cc.f1.micro.flat()));
    cc.sqrt_mu = build_F0(s, cell, h.vgrid);
    cc.sqrt_mu.frame = FrameTag::Raw;
    for (int a = 0; a < 2; ++a)
        for (double& x : cc.sqrt_mu.species(a)) x = std::sqrt(x);
    return cc;
}

double weighted_decay_sup(const DistributionField& f, const BiMaxwell& bg, const SpeciesPair& s,
                          const VelocityGrid& vgrid, double b, double p) {
    double sup = 0.0;
    for (int a = 0; a < 2; ++a) {
        const auto par = bg.species(a);
        const auto vals = f.species(a);
        for (std::size_t k = 0; k < vgrid.size(); ++k) {
            const Vec3 v = vgrid.node(k);
            const double mu = maxwellian(par, s.m[a], v);
            sup = std::max(sup, std::pow(1.0 + std::sqrt(norm2(v)), p) * std::pow(mu, -b) * std::abs(vals[k]));
        }
    }
    return sup;
}

ResidualTerms residual_terms(const FluidState& s, const std::vector<std::size_t>& cells, const HilbertSetup& h) {
    h.validate();
    s.validate();
    const auto& g = s.grid;
    const auto& vg = h.vgrid;
    const std::size_t nv = vg.size();
    const FluidState rhs = euler_rhs(s);
    const FluidState sp = shifted(s, rhs, h.tau), sm = shifted(s, rhs, -h.tau);
    const FluidState rhs_p = euler_rhs(sp), rhs_m = euler_rhs(sm);
    const auto rule = lebedev_like_rule(h.angular_order);
    const CollisionOperator op(h.species, vg, rule);
    const GlobalFrame frame = select_theta_M(s.theta, h.species);
    const double b = 0.5 * (0.5 + h.species.max_mass() / (2.0 * h.species.M()));

    ResidualTerms t;
    t.cells = cells;
    t.grid = g;
    t.vgrid = vg;
    t.weight.resize(2 * nv);
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k < nv; ++k) {
            const Vec3 v = vg.node(k);
            t.weight[a * nv + k] = weight_w(v, frame.l) / std::sqrt(frame.mu_M(a, h.species, v));
        }

    for (std::size_t c : cells) {
        if (c >= s.size()) throw ShapeError("residual_terms: cell index out of range");
        const CellCorrector cc = corrector_at(s, rhs, c, h);
        const auto basis = kernel_basis(cc.bg, h.species, vg);
        for (double x : compatibility(cc.R0, basis, vg)) t.max_compatibility = std::max(t.max_compatibility, std::abs(x));
        t.decay_sup.push_back(weighted_decay_sup(cc.f1.micro, cc.bg, h.species, vg, b));

        DistributionField D0 = zero_field(FrameTag::Raw, nv), D1 = zero_field(FrameTag::Raw, nv);
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < nv; ++k) {
                D0.species(a)[k] = -cc.sqrt_mu.species(a)[k] * cc.R0.species(a)[k];
                D1.species(a)[k] = cc.sqrt_mu.species(a)[k] * cc.Lf1.species(a)[k];
            }

        // d/dt of the micro part along the Euler flow.
        const DistributionField Fp = raw_micro(corrector_at(sp, rhs_p, c, h));
        const DistributionField Fm = raw_micro(corrector_at(sm, rhs_m, c, h));
        DistributionField E1 = zero_field(FrameTag::Raw, nv);
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < nv; ++k)
                E1.species(a)[k] = (Fp.species(a)[k] - Fm.species(a)[k]) / (2.0 * h.tau);

        // v . grad of the micro part; the macro data of the neighbours feed the linear Euler sources.
        std::vector<DistributionField> fk(s.size(), zero_field(FrameTag::Fluctuation, nv));
        for (int ax = 0; ax < g.dim(); ++ax) {
            const std::size_t cp = neighbour_cell(g, c, ax, 1), cm = neighbour_cell(g, c, ax, -1);
            const CellCorrector np = corrector_at(s, rhs, cp, h), nm = corrector_at(s, rhs, cm, h);
            fk[cp] = np.f1.micro;
            fk[cm] = nm.f1.micro;
            const DistributionField Gp = raw_micro(np), Gm = raw_micro(nm);
            for (int a = 0; a < 2; ++a)
                for (std::size_t k = 0; k < nv; ++k)
                    E1.species(a)[k] +=
                        vg.node(k)[ax] * (Gp.species(a)[k] - Gm.species(a)[k]) / (2.0 * g.dx());
        }

        // The macro coefficients vanish at the snapshot; their rates come from the forced linear system.
        const LinearSources src = linear_euler_sources(fk, s, vg);
        LinearState w0(g, s.m);
        const LinearState dw = linear_euler_rhs(w0, s, &src);
        const DistributionField dP = macro_part(
            cc.bg, {dw.nA[c], dw.nB[c], dw.u[0][c], dw.u[1][c], dw.u[2][c], dw.theta[c]}, h.species, vg);
        DistributionField F1 = raw_micro(cc);
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < nv; ++k) E1.species(a)[k] += cc.sqrt_mu.species(a)[k] * dP.species(a)[k];

        const DistributionField Q11 = op.collide_raw(F1);
        for (int a = 0; a < 2; ++a)
            for (std::size_t k = 0; k < nv; ++k) E1.species(a)[k] -= Q11.species(a)[k];

        t.D0.push_back(std::move(D0));
        t.D1.push_back(std::move(D1));
        t.E1.push_back(std::move(E1));
    }
    return t;
}

nlohmann::json ResidualReport::to_json() const {
    return {{"eps", eps}, {"K", K}, {"l2", l2}, {"sup", sup}, {"l2_total", l2_total}, {"sup_total", sup_total}};
}

ResidualReport expansion_residual(const ResidualTerms& terms, const ExpansionTruncation& tr) {
    tr.validate();
    ResidualReport r;
    r.eps = tr.eps;
    r.K = tr.K;
    const std::size_t nv = terms.vgrid.size();
    const double w = terms.vgrid.weight() * std::pow(terms.grid.dx(), terms.grid.dim());
    std::array<double, 2> ss{};
    for (std::size_t i = 0; i < terms.cells.size(); ++i) {
        for (int a = 0; a < 2; ++a) {
            for (std::size_t k = 0; k < nv; ++k) {
                double x = terms.D0[i].species(a)[k];
                if (tr.K >= 1) x += terms.D1[i].species(a)[k] + tr.eps * terms.E1[i].species(a)[k];
                ss[a] += x * x;
                r.sup[a] = std::max(r.sup[a], std::abs(x) * terms.weight[a * nv + k]);
            }
        }
    }
    for (int a = 0; a < 2; ++a) r.l2[a] = std::sqrt(ss[a] * w);
    r.l2_total = std::sqrt((ss[0] + ss[1]) * w);
    r.sup_total = std::max(r.sup[0], r.sup[1]);
    return r;
}

DistributionField weighted_remainder(const DistributionField& FR, const GlobalFrame& frame, const SpeciesPair& s,
                                     const VelocityGrid& vgrid) {
    if (FR.A.size() != vgrid.size() || FR.B.size() != vgrid.size())
        throw ShapeError("weighted_remainder: field size mismatch");
    if (!(frame.theta_M > 0.0)) throw FrameError("weighted_remainder: theta_M must be positive");
    DistributionField h = zero_field(FrameTag::Weighted, vgrid.size());
    for (int a = 0; a < 2; ++a)
        for (std::size_t k = 0; k < vgrid.size(); ++k) {
            const Vec3 v = vgrid.node(k);
            h.species(a)[k] = weight_w(v, frame.l) * FR.species(a)[k] / std::sqrt(frame.mu_M(a, s, v));
        }
    return h;
}

std::vector<std::size_t> sample_cells(const SpatialGrid& g, int count) {
    if (count < 1) throw ConfigError("sample_cells: count must be positive");
    const std::size_t n = g.cells();
    std::vector<std::size_t> out;
    for (int i = 0; i < count; ++i) out.push_back(n * static_cast<std::size_t>(i) / static_cast<std::size_t>(count));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace mixkin
