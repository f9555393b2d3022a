// SPDX-License-Identifier: Apache-2.0
#include "jsdm/largesystem.hpp"
#include "jsdm/beamforming.hpp"
#include "jsdm/grouping.hpp"
#include "jsdm/linalg.hpp"
#include "jsdm/scheduling.hpp"
#include "jsdm/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace jsdm {

namespace {

double wrap(double x)
{
    double y = x - std::floor(x + 0.5);
    if (y >= 0.5)
        y -= 1.0;
    return y;
}

int wrap_index(int i, int size)
{
    // Centered representative in (-size/2, size/2].
    int r = ((i % size) + size) % size;
    if (r > size / 2)
        r -= size;
    return r;
}

double shape_value(SpectrumShape shape, double spacing, double x)
{
    return shape == SpectrumShape::flat ? 1.0 : 1.0 / std::sqrt(spacing * spacing - x * x);
}

// Index of a subgroup across all groups.
struct SubgroupIndex {
    std::vector<int> offset; // per group
    std::vector<std::pair<int, int>> owner;

    explicit SubgroupIndex(const LsProblem& p)
    {
        int at = 0;
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
            offset.push_back(at);
            for (std::size_t k = 0; k < p.groups[g].subgroups.size(); ++k)
                owner.emplace_back(static_cast<int>(g), static_cast<int>(k));
            at += static_cast<int>(p.groups[g].subgroups.size());
        }
    }
    int id(int g, int k) const { return offset[static_cast<std::size_t>(g)] + k; }
    int size() const { return static_cast<int>(owner.size()); }
};

const LsSubgroup& subgroup_at(const LsProblem& p, const SubgroupIndex& idx, int id)
{
    const auto [g, k] = idx.owner[static_cast<std::size_t>(id)];
    return p.groups[static_cast<std::size_t>(g)].subgroups[static_cast<std::size_t>(k)];
}

// Pieces of [lo, hi] (a support inside (-1/2, 1/2)) that fall inside the
// window, in unwrapped window coordinates.
std::vector<Interval> window_pieces(const LsGroup& win, double lo, double hi)
{
    std::vector<Interval> out;
    for (int shift = -1; shift <= 1; ++shift) {
        const double a = std::max(win.window_lo, lo + shift);
        const double b = std::min(win.window_hi, hi + shift);
        if (b > a)
            out.push_back({a, b});
    }
    return out;
}

struct Segment {
    std::vector<int> active; // global subgroup ids with density here
    RVector s;               // shape at the nodes
    RVector w;               // weights (sum over a window = window measure)
};

struct WindowGrid {
    double kappa = 1.0;
    std::vector<Segment> segments;
};

void subgroup_index_range(const LsSubgroup& sg, int size, int& l, int& u)
{
    l = static_cast<int>(std::floor(sg.lo * size + 1e-9));
    u = static_cast<int>(std::ceil(sg.hi * size - 1e-9));
    if (u < l)
        u = l;
}

WindowGrid continuous_grid(const LsProblem& p, const SubgroupIndex& idx, int gp, int nodes)
{
    const LsGroup& win = p.groups[static_cast<std::size_t>(gp)];
    WindowGrid grid;
    grid.kappa = 1.0 / win.window_measure();

    std::vector<std::vector<Interval>> pieces(static_cast<std::size_t>(idx.size()));
    std::vector<double> cuts{win.window_lo, win.window_hi};
    for (int id = 0; id < idx.size(); ++id) {
        const auto& sg = subgroup_at(p, idx, id);
        pieces[static_cast<std::size_t>(id)] = window_pieces(win, sg.lo, sg.hi);
        for (const auto& iv : pieces[static_cast<std::size_t>(id)]) {
            cuts.push_back(iv.lo);
            cuts.push_back(iv.hi);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = cuts[c], b = cuts[c + 1];
        if (b - a <= 1e-15)
            continue;
        const double mid = 0.5 * (a + b);
        Segment seg;
        for (int id = 0; id < idx.size(); ++id)
            for (const auto& iv : pieces[static_cast<std::size_t>(id)])
                if (iv.lo <= mid && mid <= iv.hi) {
                    seg.active.push_back(id);
                    break;
                }
        if (seg.active.empty())
            continue;

        const double shift = wrap(mid) - mid;
        const double wa = a + shift, wb = b + shift; // wrapped coordinates
        const double d = p.spacing;
        const bool near_pole = p.shape == SpectrumShape::one_ring &&
                               (std::abs(std::abs(wa) - d) < 1e-6 || std::abs(std::abs(wb) - d) < 1e-6) &&
                               std::abs(wa) <= d && std::abs(wb) <= d;
        if (near_pole) {
            // x = D sin t removes the inverse square-root endpoint singularity.
            const QuadratureRule q = composite_gauss_legendre(std::asin(wa / d), std::asin(wb / d), nodes);
            seg.s.resize(q.nodes.size());
            seg.w.resize(q.nodes.size());
            for (Eigen::Index i = 0; i < q.nodes.size(); ++i) {
                const double cos_t = std::cos(q.nodes(i));
                seg.s(i) = 1.0 / (d * cos_t);
                seg.w(i) = q.weights(i) * d * cos_t;
            }
        } else {
            const QuadratureRule q = composite_gauss_legendre(wa, wb, nodes);
            seg.s.resize(q.nodes.size());
            for (Eigen::Index i = 0; i < q.nodes.size(); ++i)
                seg.s(i) = shape_value(p.shape, d, q.nodes(i));
            seg.w = q.weights;
        }
        grid.segments.push_back(std::move(seg));
    }
    return grid;
}

WindowGrid finite_grid(const LsProblem& p, const SubgroupIndex& idx, int gp, int n)
{
    const LsGroup& win = p.groups[static_cast<std::size_t>(gp)];
    const int size = p.antennas * n;
    const auto [first, last] = window_indices(win, p.antennas, n);
    const int count = last - first + 1;
    WindowGrid grid;
    grid.kappa = 1.0 / win.window_measure();
    const double weight = win.window_measure() / count;

    std::vector<std::pair<int, int>> ranges;
    for (int id = 0; id < idx.size(); ++id) {
        int l = 0, u = 0;
        subgroup_index_range(subgroup_at(p, idx, id), size, l, u);
        ranges.emplace_back(l, u);
    }

    std::vector<std::vector<int>> active(static_cast<std::size_t>(count));
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const int i = wrap_index(first + j, size);
        xs[static_cast<std::size_t>(j)] = static_cast<double>(i) / size;
        for (int id = 0; id < idx.size(); ++id)
            if (ranges[static_cast<std::size_t>(id)].first <= i && i <= ranges[static_cast<std::size_t>(id)].second)
                active[static_cast<std::size_t>(j)].push_back(id);
    }
    int j = 0;
    while (j < count) {
        int e = j + 1;
        while (e < count && active[static_cast<std::size_t>(e)] == active[static_cast<std::size_t>(j)])
            ++e;
        if (!active[static_cast<std::size_t>(j)].empty()) {
            Segment seg;
            seg.active = active[static_cast<std::size_t>(j)];
            seg.s.resize(e - j);
            seg.w = RVector::Constant(e - j, weight);
            for (int t = j; t < e; ++t)
                seg.s(t - j) = shape_value(p.shape, p.spacing, xs[static_cast<std::size_t>(t)]);
            grid.segments.push_back(std::move(seg));
        }
        j = e;
    }
    return grid;
}

// Fixed-point state of one group.
struct GroupSolve {
    std::vector<double> m;
    RVector v;
    RMatrix j;
    Eigen::PartialPivLU<RMatrix> lu;
    RVector q;
    double gamma0 = 0.0;
    double zeta_sq = 0.0;
    std::vector<double> i3; // per segment: sum w s^2 / h^2
    int iterations = 0;
    double residual = 0.0;
};

class Solver {
public:
    Solver(const LsProblem& p, SolveMode mode, const FixedPointOptions& opts) : p_(p), idx_(p), opts_(opts)
    {
        p.validate();
        if (mode.kind == SolveMode::Kind::finite && mode.n < 1)
            throw InvalidParameter("solve_fixed_point: finite mode needs N >= 1");
        for (int g = 0; g < static_cast<int>(p.groups.size()); ++g)
            grids_.push_back(mode.kind == SolveMode::Kind::finite ? finite_grid(p, idx_, g, mode.n)
                                                                    : continuous_grid(p, idx_, g, opts.quadrature_nodes));
    }

    const SubgroupIndex& index() const { return idx_; }

    GroupSolve solve_group(int g, const std::vector<double>& gamma, const std::vector<double>* warm = nullptr) const
    {
        const LsGroup& grp = p_.groups[static_cast<std::size_t>(g)];
        const WindowGrid& grid = grids_[static_cast<std::size_t>(g)];
        const int kg = static_cast<int>(grp.subgroups.size());
        const int off = idx_.offset[static_cast<std::size_t>(g)];
        const double b = grp.streams;
        const double kappa = grid.kappa;

        std::vector<double> amp(static_cast<std::size_t>(kg));
        for (int k = 0; k < kg; ++k)
            amp[static_cast<std::size_t>(k)] = grp.subgroups[static_cast<std::size_t>(k)].amplitude;

        // Own subgroups (local index) active on each segment.
        std::vector<std::vector<int>> own(grid.segments.size());
        for (std::size_t e = 0; e < grid.segments.size(); ++e)
            for (int id : grid.segments[e].active)
                if (id >= off && id < off + kg)
                    own[e].push_back(id - off);

        // Phi(m) and, optionally, its Jacobian dPhi/dm (which is the J matrix).
        auto fixed_map = [&](const std::vector<double>& m, std::vector<double>& out, std::vector<double>* c_seg,
                             RMatrix* jac) {
            std::fill(out.begin(), out.end(), 0.0);
            if (jac)
                jac->setZero(kg, kg);
            for (std::size_t e = 0; e < grid.segments.size(); ++e) {
                double c = 0.0;
                for (int k : own[e])
                    if (gamma[static_cast<std::size_t>(k)] > 0.0)
                        c += gamma[static_cast<std::size_t>(k)] * amp[static_cast<std::size_t>(k)] / m[static_cast<std::size_t>(k)];
                c /= b;
                if (c_seg)
                    (*c_seg)[e] = c;
                const auto& seg = grid.segments[e];
                const Eigen::ArrayXd h = 1.0 + c * seg.s.array();
                const double i1 = (seg.w.array() * seg.s.array() / h).sum();
                for (int k : own[e])
                    out[static_cast<std::size_t>(k)] += i1;
                if (jac) {
                    const double i3 = (seg.w.array() * seg.s.array().square() / h.square()).sum();
                    for (int r : own[e])
                        for (int q : own[e])
                            (*jac)(r, q) += i3;
                }
            }
            for (int k = 0; k < kg; ++k)
                out[static_cast<std::size_t>(k)] *= kappa * amp[static_cast<std::size_t>(k)];
            if (jac)
                for (int r = 0; r < kg; ++r)
                    for (int q = 0; q < kg; ++q) {
                        const auto qs = static_cast<std::size_t>(q);
                        (*jac)(r, q) = gamma[qs] > 0.0 ? (*jac)(r, q) * kappa * amp[static_cast<std::size_t>(r)] * amp[qs] *
                                                             gamma[qs] / (b * m[qs] * m[qs])
                                                       : 0.0;
                    }
        };
        auto rel_residual = [&](const std::vector<double>& m, const std::vector<double>& phi) {
            double r = 0.0;
            for (int k = 0; k < kg; ++k)
                if (m[static_cast<std::size_t>(k)] > 0.0)
                    r = std::max(r, std::abs(phi[static_cast<std::size_t>(k)] - m[static_cast<std::size_t>(k)]) /
                                        m[static_cast<std::size_t>(k)]);
            return r;
        };

        GroupSolve gs;
        std::vector<double> m0(static_cast<std::size_t>(kg));
        {
            // gamma = 0 value: plain integral of the density over the window.
            std::vector<double> unloaded(static_cast<std::size_t>(kg), 0.0);
            for (std::size_t e = 0; e < grid.segments.size(); ++e) {
                const double i0 = grid.segments[e].w.dot(grid.segments[e].s);
                for (int k : own[e])
                    unloaded[static_cast<std::size_t>(k)] += i0;
            }
            for (int k = 0; k < kg; ++k) {
                m0[static_cast<std::size_t>(k)] = kappa * amp[static_cast<std::size_t>(k)] * unloaded[static_cast<std::size_t>(k)];
                if (gamma[static_cast<std::size_t>(k)] > 0.0 && !(m0[static_cast<std::size_t>(k)] > 0.0))
                    throw Infeasible("solve_fixed_point: subgroup " + std::to_string(k + 1) + " of group " +
                                     std::to_string(g + 1) + " has zero-measure support in its window but positive load");
            }
        }
        {
            // A set S of loaded subgroups needs sum_{k in S} gamma_k / b below the
            // normalized measure covered by their supports, otherwise m -> 0.
            // All subsets for small groups, full set and singletons beyond that.
            std::vector<int> loaded;
            for (int k = 0; k < kg; ++k)
                if (gamma[static_cast<std::size_t>(k)] > 0.0)
                    loaded.push_back(k);
            std::vector<double> seg_measure(grid.segments.size());
            for (std::size_t e = 0; e < grid.segments.size(); ++e)
                seg_measure[e] = kappa * grid.segments[e].w.sum();
            auto check = [&](const std::vector<int>& set) {
                double load = 0.0;
                for (int k : set)
                    load += gamma[static_cast<std::size_t>(k)] / b;
                double cover = 0.0;
                for (std::size_t e = 0; e < grid.segments.size(); ++e)
                    for (int k : own[e])
                        if (std::find(set.begin(), set.end(), k) != set.end()) {
                            cover += seg_measure[e];
                            break;
                        }
                if (load >= cover * (1.0 - 1e-12)) {
                    std::ostringstream os;
                    os << "solve_fixed_point: group " << g + 1 << " subgroups {";
                    for (std::size_t i = 0; i < set.size(); ++i)
                        os << (i ? "," : "") << set[i] + 1;
                    os << "} carry load " << load << " but cover only " << cover << " of the window";
                    throw Infeasible(os.str());
                }
            };
            const int nl = static_cast<int>(loaded.size());
            if (nl <= 12) {
                for (unsigned mask = 1; mask < (1u << nl); ++mask) {
                    std::vector<int> set;
                    for (int i = 0; i < nl; ++i)
                        if (mask & (1u << i))
                            set.push_back(loaded[static_cast<std::size_t>(i)]);
                    check(set);
                }
            } else {
                for (int k : loaded)
                    check({k});
                check(loaded);
            }
        }
        std::vector<double> m = warm ? *warm : m0;
        for (int k = 0; k < kg; ++k)
            if (!(m[static_cast<std::size_t>(k)] > 0.0))
                m[static_cast<std::size_t>(k)] = m0[static_cast<std::size_t>(k)];

        // Damped iteration, with a Newton step taken whenever it stays positive
        // and lowers the residual; near full load the damped map alone
        // contracts too slowly.
        std::vector<double> next(static_cast<std::size_t>(kg)), cand(static_cast<std::size_t>(kg)),
            cand_next(static_cast<std::size_t>(kg));
        RMatrix jac, cand_jac;
        fixed_map(m, next, nullptr, &jac);
        double residual = rel_residual(m, next);
        double change = 0.0;
        int it = 0;
        for (; it < opts_.max_iter; ++it) {
            bool newton = false;
            if (kg > 0) {
                RVector r(kg);
                for (int k = 0; k < kg; ++k)
                    r(k) = next[static_cast<std::size_t>(k)] - m[static_cast<std::size_t>(k)];
                const RVector delta = (RMatrix::Identity(kg, kg) - jac).partialPivLu().solve(r);
                bool positive = delta.allFinite();
                for (int k = 0; k < kg && positive; ++k) {
                    cand[static_cast<std::size_t>(k)] = m[static_cast<std::size_t>(k)] + delta(k);
                    positive = cand[static_cast<std::size_t>(k)] > 0.0;
                }
                if (positive) {
                    fixed_map(cand, cand_next, nullptr, &cand_jac);
                    const double cand_residual = rel_residual(cand, cand_next);
                    if (cand_residual < residual) {
                        change = 0.0;
                        for (int k = 0; k < kg; ++k)
                            change = std::max(change, std::abs(delta(k)) / m[static_cast<std::size_t>(k)]);
                        m.swap(cand);
                        next.swap(cand_next);
                        jac.swap(cand_jac);
                        residual = cand_residual;
                        newton = true;
                    }
                }
            }
            if (!newton) {
                change = 0.0;
                for (int k = 0; k < kg; ++k) {
                    const auto ks = static_cast<std::size_t>(k);
                    const double updated = opts_.damping * next[ks] + (1.0 - opts_.damping) * m[ks];
                    if (m[ks] > 0.0)
                        change = std::max(change, std::abs(updated - m[ks]) / m[ks]);
                    m[ks] = updated;
                }
                fixed_map(m, next, nullptr, &jac);
                residual = rel_residual(m, next);
            }
            if (change <= opts_.tolerance && residual <= opts_.tolerance)
                break;
        }
        if (change > opts_.tolerance || residual > opts_.tolerance) {
            std::ostringstream os;
            os << "solve_fixed_point: group " << g + 1 << " did not converge in " << opts_.max_iter
               << " iterations (last relative change " << change << ", residual " << residual << ")";
            throw NumericalFailure(os.str());
        }
        for (int k = 0; k < kg; ++k)
            if (gamma[static_cast<std::size_t>(k)] > 0.0 && !(m[static_cast<std::size_t>(k)] > 1e-300))
                throw NumericalFailure("solve_fixed_point: m collapsed to zero in group " + std::to_string(g + 1));
        gs.iterations = it + 1;

        std::vector<double> c_seg(grid.segments.size());
        fixed_map(m, next, &c_seg, nullptr);
        gs.residual = rel_residual(m, next);

        gs.v = RVector::Zero(kg);
        RMatrix w = RMatrix::Zero(kg, kg);
        gs.i3.resize(grid.segments.size());
        for (std::size_t e = 0; e < grid.segments.size(); ++e) {
            const auto& seg = grid.segments[e];
            const Eigen::ArrayXd h = 1.0 + c_seg[e] * seg.s.array();
            const double i2 = (seg.w.array() * seg.s.array() / h.square()).sum();
            const double i3 = (seg.w.array() * seg.s.array().square() / h.square()).sum();
            gs.i3[e] = i3;
            for (int a : own[e]) {
                gs.v(a) += i2;
                for (int c : own[e])
                    w(a, c) += i3;
            }
        }
        gs.j = RMatrix::Zero(kg, kg);
        for (int a = 0; a < kg; ++a) {
            gs.v(a) *= kappa * amp[static_cast<std::size_t>(a)];
            for (int c = 0; c < kg; ++c) {
                w(a, c) *= kappa * amp[static_cast<std::size_t>(a)] * amp[static_cast<std::size_t>(c)];
                if (gamma[static_cast<std::size_t>(c)] > 0.0)
                    gs.j(a, c) = gamma[static_cast<std::size_t>(c)] / b * w(a, c) /
                                 (m[static_cast<std::size_t>(c)] * m[static_cast<std::size_t>(c)]);
            }
        }
        gs.lu.compute(RMatrix::Identity(kg, kg) - gs.j);
        gs.q = kg ? RVector(gs.lu.solve(gs.v)) : RVector();
        double load = 0.0;
        for (int k = 0; k < kg; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            if (gamma[ks] > 0.0)
                gs.gamma0 += gamma[ks] * gs.q(k) / (m[ks] * m[ks]);
            load += gamma[ks];
        }
        gs.gamma0 /= b;
        gs.zeta_sq = load > 0.0 ? load / gs.gamma0 : 0.0;
        gs.m = std::move(m);
        return gs;
    }

    // Interference coefficient of group gp (already solved) on global subgroup `target`.
    double upsilon(int gp, const GroupSolve& gs, const std::vector<double>& gamma_gp, int target) const
    {
        const LsGroup& grp = p_.groups[static_cast<std::size_t>(gp)];
        const WindowGrid& grid = grids_[static_cast<std::size_t>(gp)];
        const int kg = static_cast<int>(grp.subgroups.size());
        if (kg == 0)
            return 0.0;
        const int off = idx_.offset[static_cast<std::size_t>(gp)];
        const double a_t = subgroup_at(p_, idx_, target).amplitude;
        RVector vp = RVector::Zero(kg);
        bool any = false;
        for (std::size_t e = 0; e < grid.segments.size(); ++e) {
            const auto& act = grid.segments[e].active;
            if (!std::binary_search(act.begin(), act.end(), target))
                continue;
            for (int id : act)
                if (id >= off && id < off + kg) {
                    vp(id - off) += gs.i3[e];
                    any = true;
                }
        }
        if (!any)
            return 0.0;
        for (int i = 0; i < kg; ++i)
            vp(i) *= grid.kappa * grp.subgroups[static_cast<std::size_t>(i)].amplitude * a_t;
        const RVector np = gs.lu.solve(vp);
        double u = 0.0;
        for (int i = 0; i < kg; ++i) {
            const auto is = static_cast<std::size_t>(i);
            if (gamma_gp[is] > 0.0)
                u += gamma_gp[is] * np(i) / (gs.m[is] * gs.m[is]);
        }
        return std::max(0.0, u / grp.streams);
    }

    const LsProblem& problem() const { return p_; }

private:
    const LsProblem& p_;
    SubgroupIndex idx_;
    FixedPointOptions opts_;
    std::vector<WindowGrid> grids_;
};

void check_fractions(const LsProblem& p, const Fractions& gamma)
{
    if (gamma.size() != p.groups.size())
        throw InvalidParameter("fractions: one list per group required");
    for (std::size_t g = 0; g < gamma.size(); ++g) {
        if (gamma[g].size() != p.groups[g].subgroups.size())
            throw InvalidParameter("fractions: one value per subgroup required");
        double s = 0.0;
        for (double x : gamma[g]) {
            if (!(x >= 0.0 && x <= 1.0 + 1e-12))
                throw InvalidParameter("fractions: values must lie in [0, 1]");
            s += x;
        }
        if (s > p.groups[g].streams + 1e-9)
            throw InvalidParameter("fractions: group " + std::to_string(g + 1) + " load exceeds its stream budget");
    }
}

// upsilon[gp][g][k] for all pairs from per-group solves.
std::vector<std::vector<std::vector<double>>> all_upsilon(const Solver& solver, const std::vector<GroupSolve>& solves,
                                                          const Fractions& gamma)
{
    const LsProblem& p = solver.problem();
    const auto gcount = p.groups.size();
    std::vector<std::vector<std::vector<double>>> u(gcount);
    for (std::size_t gp = 0; gp < gcount; ++gp) {
        u[gp].resize(gcount);
        for (std::size_t g = 0; g < gcount; ++g) {
            u[gp][g].assign(p.groups[g].subgroups.size(), 0.0);
            if (g == gp)
                continue;
            for (std::size_t k = 0; k < p.groups[g].subgroups.size(); ++k)
                u[gp][g][k] = solver.upsilon(static_cast<int>(gp), solves[gp], gamma[gp],
                                             solver.index().id(static_cast<int>(g), static_cast<int>(k)));
        }
    }
    return u;
}

std::vector<std::vector<double>> sinr_from(const std::vector<double>& zeta_sq,
                                           const std::vector<std::vector<std::vector<double>>>& upsilon,
                                           double total_power, double total_load,
                                           const std::vector<std::vector<double>>& shape)
{
    std::vector<std::vector<double>> out(shape.size());
    for (std::size_t g = 0; g < shape.size(); ++g) {
        out[g].assign(shape[g].size(), 0.0);
        if (!(total_load > 0.0))
            continue;
        const double ps = total_power / total_load;
        for (std::size_t k = 0; k < shape[g].size(); ++k) {
            double denom = 1.0;
            for (std::size_t gp = 0; gp < shape.size(); ++gp)
                if (gp != g)
                    denom += zeta_sq[gp] * upsilon[gp][g][k] * ps;
            out[g][k] = zeta_sq[g] * ps / denom;
        }
    }
    return out;
}

double load_of(const Fractions& gamma)
{
    double s = 0.0;
    for (const auto& g : gamma)
        for (double x : g)
            s += x;
    return s;
}

} // namespace

LsSubgroup LsSubgroup::one_ring(const UserProfile& profile, double spacing)
{
    profile.validate();
    LsSubgroup s;
    s.lo = -spacing * std::sin(profile.aoa + profile.spread);
    s.hi = -spacing * std::sin(profile.aoa - profile.spread);
    s.amplitude = 1.0 / (2.0 * profile.spread);
    s.profile = profile;
    return s;
}

int LsProblem::num_subgroups() const
{
    int n = 0;
    for (const auto& g : groups)
        n += static_cast<int>(g.subgroups.size());
    return n;
}

void LsProblem::validate() const
{
    if (antennas < 1 || !(spacing > 0.0) || !(total_power > 0.0))
        throw InvalidParameter("LsProblem: antennas, spacing and power must be positive");
    if (groups.empty())
        throw InvalidParameter("LsProblem: no groups");
    for (const auto& g : groups) {
        if (g.streams < 1)
            throw InvalidParameter("LsProblem: stream budget must be positive");
        if (!(g.window_measure() > 0.0 && g.window_measure() <= 1.0))
            throw InvalidParameter("LsProblem: window measure must lie in (0, 1]");
        for (const auto& s : g.subgroups) {
            if (!(s.lo < s.hi) || s.lo <= -0.5 || s.hi >= 0.5)
                throw InvalidParameter("LsProblem: subgroup support must be a proper interval inside (-1/2, 1/2)");
            if (shape == SpectrumShape::one_ring && !(std::max(std::abs(s.lo), std::abs(s.hi)) < spacing))
                throw InvalidParameter("LsProblem: one-ring support must stay inside (-D, D)");
            if (!(s.amplitude > 0.0))
                throw InvalidParameter("LsProblem: subgroup amplitude must be positive");
        }
    }
}

LsProblem LsProblem::from_profiles(int antennas, double spacing, double total_power,
                                   std::span<const UserProfile> profiles, int groups, int pattern, int streams)
{
    LsProblem p;
    p.antennas = antennas;
    p.spacing = spacing;
    p.total_power = total_power;
    const auto centers = pattern_centers(groups, pattern);
    const double half = 0.5 * streams / antennas;
    for (double c : centers)
        p.groups.push_back({c - half, c + half, streams, {}});
    for (const auto& u : profiles)
        p.groups[static_cast<std::size_t>(simplified_group(u, spacing, centers))].subgroups.push_back(
            LsSubgroup::one_ring(u, spacing));
    p.validate();
    return p;
}

Fractions zero_fractions(const LsProblem& problem)
{
    Fractions f;
    for (const auto& g : problem.groups)
        f.emplace_back(g.subgroups.size(), 0.0);
    return f;
}

std::vector<Interval> overlap_intervals(const LsProblem& p, int g, int k, int gp)
{
    const auto& sg = p.groups.at(static_cast<std::size_t>(g)).subgroups.at(static_cast<std::size_t>(k));
    auto pieces = window_pieces(p.groups.at(static_cast<std::size_t>(gp)), sg.lo, sg.hi);
    for (auto& iv : pieces) {
        const double shift = wrap(0.5 * (iv.lo + iv.hi)) - 0.5 * (iv.lo + iv.hi);
        iv.lo += shift;
        iv.hi += shift;
    }
    return pieces;
}

double f_function(const LsProblem& p, int g, int k, int gp, double x)
{
    if (!(x > -0.5 && x < 0.5))
        throw InvalidParameter("f_function: x must lie in (-1/2, 1/2)");
    const auto& sg = p.groups.at(static_cast<std::size_t>(g)).subgroups.at(static_cast<std::size_t>(k));
    for (const auto& iv : overlap_intervals(p, g, k, gp)) {
        if (x > iv.lo && x < iv.hi) {
            if (p.shape == SpectrumShape::one_ring && !(std::abs(x) < p.spacing))
                throw InvalidParameter("f_function: x at or beyond the pole |x| = D");
            return sg.amplitude * shape_value(p.shape, p.spacing, x);
        }
    }
    return 0.0;
}

LsSolution solve_fixed_point(const LsProblem& problem, const Fractions& gamma, SolveMode mode,
                             const FixedPointOptions& opts)
{
    check_fractions(problem, gamma);
    const Solver solver(problem, mode, opts);
    std::vector<GroupSolve> solves;
    for (std::size_t g = 0; g < problem.groups.size(); ++g)
        solves.push_back(solver.solve_group(static_cast<int>(g), gamma[g]));

    LsSolution sol;
    sol.gamma = gamma;
    for (auto& gs : solves) {
        sol.m0.push_back(gs.m);
        sol.v.push_back(gs.v);
        sol.j.push_back(gs.j);
        sol.q.push_back(gs.q);
        sol.gamma0.push_back(gs.gamma0);
        sol.zeta0_sq.push_back(gs.zeta_sq);
        sol.residual = std::max(sol.residual, gs.residual);
        sol.iterations = std::max(sol.iterations, gs.iterations);
    }
    sol.upsilon = all_upsilon(solver, solves, gamma);
    sol.sinr0 = sinr_limit(sol, problem.total_power, load_of(gamma));
    return sol;
}

std::vector<std::vector<double>> sinr_limit(const LsSolution& s, double total_power, double total_load)
{
    return sinr_from(s.zeta0_sq, s.upsilon, total_power, total_load, s.gamma);
}

double network_utility(std::span<const double> rates, Utility kind, double floor)
{
    double total = 0.0;
    for (double r : rates)
        total += kind == Utility::pfs ? std::log(std::max(r, floor)) : r;
    return total;
}

FractionPlan greedy_fractions(const LsProblem& problem, Utility kind, double step, bool with_stop,
                              const GreedyOptions& opts)
{
    if (!(step > 0.0 && step <= 0.1))
        throw InvalidParameter("greedy_fractions: step must lie in (0, 0.1]");
    const Solver solver(problem, SolveMode::continuous(), opts.fixed_point);
    const auto gcount = problem.groups.size();

    std::vector<std::vector<int>> counts;
    for (const auto& g : problem.groups)
        counts.emplace_back(g.subgroups.size(), 0);
    auto fractions_of = [&](const std::vector<std::vector<int>>& c) {
        Fractions f(gcount);
        for (std::size_t g = 0; g < gcount; ++g)
            for (int x : c[g])
                f[g].push_back(x * step);
        return f;
    };

    Fractions gamma = fractions_of(counts);
    std::vector<GroupSolve> solves;
    for (std::size_t g = 0; g < gcount; ++g)
        solves.push_back(solver.solve_group(static_cast<int>(g), gamma[g]));
    auto upsilon = all_upsilon(solver, solves, gamma);

    auto evaluate = [&](const Fractions& gm, const std::vector<double>& zeta_sq,
                        const std::vector<std::vector<std::vector<double>>>& ups,
                        std::vector<std::vector<double>>* sinr_out, std::vector<std::vector<double>>* rates_out) {
        const auto sinr = sinr_from(zeta_sq, ups, problem.total_power, load_of(gm), gm);
        std::vector<double> flat;
        std::vector<std::vector<double>> rates(gcount);
        for (std::size_t g = 0; g < gcount; ++g)
            for (std::size_t k = 0; k < gm[g].size(); ++k) {
                rates[g].push_back(gm[g][k] * std::log1p(sinr[g][k]));
                flat.push_back(rates[g].back());
            }
        if (sinr_out)
            *sinr_out = sinr;
        if (rates_out)
            *rates_out = rates;
        return network_utility(flat, kind, opts.floor);
    };

    auto zetas = [&](const std::vector<GroupSolve>& s) {
        std::vector<double> z;
        for (const auto& gs : s)
            z.push_back(gs.zeta_sq);
        return z;
    };

    FractionPlan plan;
    plan.utility = kind;
    plan.step = step;
    double current = evaluate(gamma, zetas(solves), upsilon, nullptr, nullptr);
    plan.trace.push_back({0, 0.0, current});

    for (int iter = 1;; ++iter) {
        bool found = false;
        double best_value = -std::numeric_limits<double>::infinity();
        std::size_t best_g = 0, best_k = 0;
        GroupSolve best_solve;
        std::vector<std::vector<double>> best_row;

        for (std::size_t g = 0; g < gcount; ++g) {
            int load_count = 0;
            for (int x : counts[g])
                load_count += x;
            for (std::size_t k = 0; k < counts[g].size(); ++k) {
                if ((counts[g][k] + 1) * step > 1.0 + 1e-9 ||
                    (load_count + 1) * step > problem.groups[g].streams + 1e-9)
                    continue;
                Fractions trial = gamma;
                trial[g][k] = (counts[g][k] + 1) * step;
                GroupSolve gs;
                try {
                    gs = solver.solve_group(static_cast<int>(g), trial[g], &solves[g].m);
                } catch (const NumericalFailure&) {
                    continue;
                } catch (const Infeasible&) {
                    continue;
                }
                auto ups = upsilon;
                for (std::size_t h = 0; h < gcount; ++h) {
                    if (h == g)
                        continue;
                    for (std::size_t t = 0; t < problem.groups[h].subgroups.size(); ++t)
                        ups[g][h][t] = solver.upsilon(static_cast<int>(g), gs, trial[g],
                                                      solver.index().id(static_cast<int>(h), static_cast<int>(t)));
                }
                auto z = zetas(solves);
                z[g] = gs.zeta_sq;
                const double value = evaluate(trial, z, ups, nullptr, nullptr);
                if (!found || value > best_value) {
                    found = true;
                    best_value = value;
                    best_g = g;
                    best_k = k;
                    best_solve = std::move(gs);
                    best_row = std::move(ups[g]);
                }
            }
        }
        if (!found)
            break;
        if (with_stop && !(best_value > current))
            break;
        ++counts[best_g][best_k];
        gamma[best_g][best_k] = counts[best_g][best_k] * step;
        solves[best_g] = std::move(best_solve);
        upsilon[best_g] = std::move(best_row);
        current = best_value;
        plan.trace.push_back({iter, load_of(gamma), current});
    }

    plan.gamma = gamma;
    evaluate(gamma, zetas(solves), upsilon, &plan.sinr, &plan.rates);
    return plan;
}

int scheduled_users(double gamma, int n)
{
    return static_cast<int>(std::floor(gamma * n + 0.5 + 1e-12));
}

std::pair<int, int> window_indices(const LsGroup& group, int antennas, int n)
{
    const int size = antennas * n;
    const int count = static_cast<int>(std::lround(group.window_measure() * size));
    if (count < 1)
        throw InvalidParameter("window_indices: window holds no DFT column at this size");
    const int first = static_cast<int>(std::lround(group.window_lo * size));
    return {first, first + count - 1};
}

FiniteSinrStats simulate_finite_sinr(const LsProblem& problem, const Fractions& gamma,
                                     const std::vector<std::vector<double>>& limit, int n, int trials,
                                     std::uint64_t seed, FiniteSelection selection)
{
    check_fractions(problem, gamma);
    if (problem.shape != SpectrumShape::one_ring)
        throw Unsupported("simulate_finite_sinr: needs one-ring subgroups");
    if (n < 1 || trials < 1)
        throw InvalidParameter("simulate_finite_sinr: N and trials must be positive");
    const int size = problem.antennas * n;
    const auto gcount = problem.groups.size();
    const SystemGeometry geom{size, problem.spacing, problem.total_power};

    std::vector<CMatrix> pre;
    std::vector<std::vector<int>> rounded(gcount);
    std::vector<std::vector<CovarianceModel>> cov(gcount);
    for (std::size_t g = 0; g < gcount; ++g) {
        const auto& grp = problem.groups[g];
        const auto [first, last] = window_indices(grp, problem.antennas, n);
        pre.push_back(dft_columns(size, first, last));
        int total = 0;
        for (std::size_t k = 0; k < grp.subgroups.size(); ++k) {
            int u = std::min(scheduled_users(gamma[g][k], n), static_cast<int>(pre.back().cols()) - total);
            rounded[g].push_back(std::max(0, u));
            total += rounded[g].back();
            cov[g].push_back(eigendecompose(one_ring_covariance(grp.subgroups[k].profile, geom), RankPolicy::full()));
        }
    }

    double nominal_load = 0.0;
    for (const auto& g : gamma)
        for (double v : g)
            nominal_load += v;
    if (!(nominal_load > 0.0))
        throw InvalidParameter("simulate_finite_sinr: all fractions are zero");

    FiniteSinrStats st;
    std::vector<std::vector<double>> sum_sinr(gcount), sum_err(gcount), sum_rate(gcount);
    st.samples.resize(gcount);
    for (std::size_t g = 0; g < gcount; ++g) {
        const auto kg = problem.groups[g].subgroups.size();
        sum_sinr[g].assign(kg, 0.0);
        sum_err[g].assign(kg, 0.0);
        sum_rate[g].assign(kg, 0.0);
        st.samples[g].assign(kg, 0);
    }

    for (int t = 0; t < trials; ++t) {
        RngStream rng = RngStream::for_trial(seed, static_cast<std::uint64_t>(t));
        std::vector<std::vector<int>> column_subgroup(gcount);
        for (std::size_t g = 0; g < gcount; ++g) {
            if (selection == FiniteSelection::rounded) {
                for (std::size_t k = 0; k < rounded[g].size(); ++k)
                    column_subgroup[g].insert(column_subgroup[g].end(), static_cast<std::size_t>(rounded[g][k]),
                                              static_cast<int>(k));
            } else {
                const auto picks = probabilistic_select(gamma[g], problem.groups[g].streams, n, rng);
                for (const auto& a : picks)
                    if (a.subgroup >= 0)
                        column_subgroup[g].push_back(a.subgroup);
                std::sort(column_subgroup[g].begin(), column_subgroup[g].end());
            }
        }
        std::vector<CMatrix> channels(gcount);
        for (std::size_t g = 0; g < gcount; ++g) {
            channels[g].resize(size, static_cast<Eigen::Index>(column_subgroup[g].size()));
            for (std::size_t c = 0; c < column_subgroup[g].size(); ++c)
                channels[g].col(static_cast<Eigen::Index>(c)) =
                    sample_channel(cov[g][static_cast<std::size_t>(column_subgroup[g][c])], rng).coeffs;
        }
        PrecoderStack stack;
        try {
            stack = build_zf_stack(pre, channels, n, problem.total_power, true);
        } catch (const Infeasible&) {
            ++st.excluded;
            continue;
        }
        // Per-stream power follows the nominal load, P / (N S), not the
        // number of streams this slot happens to carry.
        stack.per_stream_power = problem.total_power / (n * nominal_load);
        ++st.trials;
        for (std::size_t g = 0; g < gcount; ++g)
            for (std::size_t c = 0; c < column_subgroup[g].size(); ++c) {
                const auto k = static_cast<std::size_t>(column_subgroup[g][c]);
                const double s = zf_sinr(channels, stack, static_cast<int>(g), static_cast<int>(c));
                sum_sinr[g][k] += s;
                sum_err[g][k] += std::abs(s - limit[g][k]);
                sum_rate[g][k] += std::log1p(s) / n;
                ++st.samples[g][k];
            }
    }
    if (st.trials == 0)
        throw NumericalFailure("simulate_finite_sinr: every trial had an ill-conditioned ZF selection");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    st.mean_sinr.resize(gcount);
    st.mean_abs_error.resize(gcount);
    st.mean_rate.resize(gcount);
    for (std::size_t g = 0; g < gcount; ++g)
        for (std::size_t k = 0; k < sum_sinr[g].size(); ++k) {
            const long cnt = st.samples[g][k];
            st.mean_sinr[g].push_back(cnt ? sum_sinr[g][k] / cnt : nan);
            st.mean_abs_error[g].push_back(cnt ? sum_err[g][k] / cnt : nan);
            st.mean_rate[g].push_back(sum_rate[g][k] / st.trials);
        }
    return st;
}

void write_plan_csv(std::ostream& os, const LsProblem& problem, const FractionPlan& plan)
{
    os << "group,subgroup,theta_deg,delta_deg,gamma,rate_norm\n";
    char buf[256];
    for (std::size_t g = 0; g < problem.groups.size(); ++g)
        for (std::size_t k = 0; k < problem.groups[g].subgroups.size(); ++k) {
            const auto& pr = problem.groups[g].subgroups[k].profile;
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g\n", g + 1, k + 1, rad2deg(pr.aoa),
                          rad2deg(pr.spread), plan.gamma[g][k], nats2bits(plan.rates[g][k]));
            os << buf;
        }
}

void write_trace_csv(std::ostream& os, const FractionPlan& plan)
{
    os << "iter,S,objective\n";
    char buf[128];
    for (const auto& t : plan.trace) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g\n", t.iter, t.load, t.objective);
        os << buf;
    }
}

} // namespace jsdm
