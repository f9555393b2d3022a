// SPDX-License-Identifier: Apache-2.0
#include "jsdm/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace jsdm {

SelectionOutcome gbf_all_select(const RMatrix& table, int group)
{
    if (table.rows() == 0)
        throw InvalidParameter("gbf_all_select: empty user set");
    SelectionOutcome out;
    for (Eigen::Index m = 0; m < table.cols(); ++m) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < table.rows(); ++k)
            if (table(k, m) > table(best, m))
                best = k;
        const double s = table(best, m);
        out.served.push_back({group, static_cast<int>(m), static_cast<int>(best), s, std::log1p(s)});
        out.sum_rate += std::log1p(s);
    }
    return out;
}

std::vector<BeamReport> max_reports(const RMatrix& table)
{
    std::vector<BeamReport> out;
    out.reserve(static_cast<std::size_t>(table.rows()));
    for (Eigen::Index k = 0; k < table.rows(); ++k) {
        Eigen::Index best = 0;
        for (Eigen::Index m = 1; m < table.cols(); ++m)
            if (table(k, m) > table(k, best))
                best = m;
        out.push_back({table(k, best), static_cast<int>(best)});
    }
    return out;
}

SelectionOutcome gbf_max_select(std::span<const BeamReport> reports, int num_beams, int group)
{
    std::vector<int> winner(static_cast<std::size_t>(num_beams), -1);
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const int m = reports[k].beam;
        if (m < 0 || m >= num_beams)
            throw InvalidParameter("gbf_max_select: reported beam index out of range");
        int& w = winner[static_cast<std::size_t>(m)];
        if (w < 0 || reports[k].sinr > reports[static_cast<std::size_t>(w)].sinr)
            w = static_cast<int>(k);
    }
    SelectionOutcome out;
    for (int m = 0; m < num_beams; ++m) {
        const int w = winner[static_cast<std::size_t>(m)];
        if (w < 0)
            continue;
        const double s = reports[static_cast<std::size_t>(w)].sinr;
        out.served.push_back({group, m, w, s, std::log1p(s)});
        out.sum_rate += std::log1p(s);
    }
    return out;
}

std::vector<int> sus_select(const CMatrix& h, int s_max, double alpha)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw InvalidParameter("sus_select: alpha must lie in (0, 1]");
    const auto k_count = static_cast<int>(h.cols());
    std::vector<int> candidates(static_cast<std::size_t>(k_count));
    std::iota(candidates.begin(), candidates.end(), 0);
    std::vector<int> picked;
    std::vector<CVector> directions; // orthogonalized picks
    const RVector norms = h.colwise().norm();

    while (static_cast<int>(picked.size()) < s_max && !candidates.empty()) {
        int best = -1;
        double best_norm = 0.0;
        CVector best_dir;
        for (int k : candidates) {
            CVector g = h.col(k);
            for (const auto& d : directions)
                g -= (d.dot(h.col(k)) / d.squaredNorm()) * d;
            const double gn = g.norm();
            if (gn > best_norm) {
                best_norm = gn;
                best = k;
                best_dir = g;
            }
        }
        if (best < 0 || best_norm <= 1e-12 * std::max(1.0, norms.maxCoeff()))
            break;
        picked.push_back(best);
        directions.push_back(best_dir);
        std::vector<int> next;
        for (int k : candidates) {
            if (k == best || norms(k) == 0.0)
                continue;
            const double coeff = std::abs(h.col(k).dot(best_dir)) / (norms(k) * best_norm);
            if (coeff <= alpha)
                next.push_back(k);
        }
        candidates = std::move(next);
    }
    return picked;
}

double zf_sum_rate(const CMatrix& h, std::span<const int> users, double total_power)
{
    if (users.empty())
        return 0.0;
    const auto n = static_cast<Eigen::Index>(users.size());
    if (n > h.rows())
        return -std::numeric_limits<double>::infinity();
    CMatrix sub(h.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i)
        sub.col(i) = h.col(users[static_cast<std::size_t>(i)]);
    const CMatrix gram = sub.adjoint() * sub;
    const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(gram, Eigen::EigenvaluesOnly).eigenvalues();
    if (!(ev(0) > 0.0) || ev(n - 1) / ev(0) > 1e10)
        return -std::numeric_limits<double>::infinity();
    const CMatrix inv = gram.llt().solve(CMatrix::Identity(n, n));
    const double p = total_power / static_cast<double>(n);
    double rate = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        rate += std::log1p(p / inv(i, i).real());
    return rate;
}

std::vector<int> gus_select(const CMatrix& h, int s_max, double total_power)
{
    std::vector<int> picked;
    double current = 0.0;
    const auto k_count = static_cast<int>(h.cols());
    while (static_cast<int>(picked.size()) < s_max) {
        int best = -1;
        double best_rate = current;
        for (int k = 0; k < k_count; ++k) {
            if (std::find(picked.begin(), picked.end(), k) != picked.end())
                continue;
            picked.push_back(k);
            const double r = zf_sum_rate(h, picked, total_power);
            picked.pop_back();
            if (r > best_rate) {
                best_rate = r;
                best = k;
            }
        }
        if (best < 0)
            break;
        picked.push_back(best);
        current = best_rate;
    }
    return picked;
}

std::vector<StreamAssignment> probabilistic_select(std::span<const double> gamma, int b, int n, RngStream& rng,
                                                   std::span<const int> population)
{
    if (b < 1 || n < 1)
        throw InvalidParameter("probabilistic_select: b and N must be positive");
    double total = 0.0;
    for (double g : gamma) {
        if (!(g >= 0.0 && g <= 1.0))
            throw InvalidParameter("probabilistic_select: fractions must lie in [0, 1]");
        total += g;
    }
    if (total > b * (1.0 + 1e-12))
        throw InvalidParameter("probabilistic_select: fractions sum above the stream budget");
    if (!population.empty() && population.size() != gamma.size())
        throw InvalidParameter("probabilistic_select: population size per subgroup mismatch");

    std::vector<std::vector<int>> remaining(gamma.size());
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        remaining[k].resize(static_cast<std::size_t>(population.empty() ? n : population[k]));
        std::iota(remaining[k].begin(), remaining[k].end(), 0);
    }

    std::vector<StreamAssignment> out(static_cast<std::size_t>(b) * static_cast<std::size_t>(n));
    for (auto& slot : out) {
        double u = rng.uniform() * b;
        int label = -1;
        for (std::size_t k = 0; k < gamma.size(); ++k) {
            if (u < gamma[k]) {
                label = static_cast<int>(k);
                break;
            }
            u -= gamma[k];
        }
        if (label < 0)
            continue;
        auto& pool = remaining[static_cast<std::size_t>(label)];
        if (pool.empty())
            continue; // subgroup exhausted: stream idles
        const std::size_t j = rng.below(pool.size());
        slot = {label, pool[j]};
        pool[j] = pool.back();
        pool.pop_back();
    }
    return out;
}

Policy parse_policy(std::string_view name)
{
    if (name == "gbf-all")
        return Policy::gbf_all;
    if (name == "gbf-max")
        return Policy::gbf_max;
    if (name == "zfbf-sus")
        return Policy::zfbf_sus;
    if (name == "zfbf-gus")
        return Policy::zfbf_gus;
    if (name == "prob")
        return Policy::prob;
    throw InvalidParameter("unknown policy '" + std::string(name) + "'");
}

std::string_view policy_name(Policy p)
{
    switch (p) {
    case Policy::gbf_all: return "gbf-all";
    case Policy::gbf_max: return "gbf-max";
    case Policy::zfbf_sus: return "zfbf-sus";
    case Policy::zfbf_gus: return "zfbf-gus";
    case Policy::prob: return "prob";
    }
    return "?";
}

} // namespace jsdm
