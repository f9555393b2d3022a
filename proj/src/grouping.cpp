// SPDX-License-Identifier: Apache-2.0
#include "jsdm/grouping.hpp"
#include "jsdm/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

namespace jsdm {

namespace {

constexpr double tie_tol = 1e-12;

int nearest(std::span<const Subspace> means, const Subspace& user, double* dist = nullptr)
{
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < means.size(); ++g) {
        const double d = chordal_distance(user, means[g]);
        if (d < best_d - tie_tol) {
            best_d = d;
            best = static_cast<int>(g);
        }
    }
    if (dist)
        *dist = best_d;
    return best;
}

GroupLayout layout_from_assignment(std::vector<Subspace> groups, std::span<const int> assignment)
{
    GroupLayout out;
    const auto g_count = groups.size();
    out.membership.assign(g_count, {});
    for (std::size_t k = 0; k < assignment.size(); ++k)
        out.membership[static_cast<std::size_t>(assignment[k])].push_back(static_cast<int>(k));
    out.pattern_of_group.assign(g_count, 1);
    for (const auto& s : groups)
        out.stream_budget.push_back(static_cast<int>(s.rank()));
    out.group_subspaces = std::move(groups);
    return out;
}

struct KMeansRun {
    std::vector<Subspace> means;
    std::vector<int> assignment;
    std::vector<double> trace;
    int iterations = 0;
};

KMeansRun kmeans_once(std::span<const Subspace> users, int groups, std::span<const int> init, int rank,
                      const KMeansOptions& opts)
{
    KMeansRun run;
    for (int idx : init) {
        const auto& u = users[static_cast<std::size_t>(idx)];
        // A user with rank above the target contributes its leading columns.
        // One below it is padded to the target rank through subspace_mean, so
        // every mean has the same rank and d_tot cannot jump after the first update.
        if (u.rank() >= rank)
            run.means.emplace_back(Subspace(u.basis().leftCols(rank)));
        else
            run.means.push_back(subspace_mean(std::vector<Subspace>{u}, rank));
    }
    const auto k_count = users.size();
    run.assignment.assign(k_count, 0);

    auto assign = [&] {
        double total = 0.0;
        for (std::size_t k = 0; k < k_count; ++k) {
            double d = 0.0;
            run.assignment[k] = nearest(run.means, users[k], &d);
            total += d;
        }
        return total;
    };

    run.trace.push_back(assign());
    for (int it = 0; it < opts.max_iter; ++it) {
        for (int g = 0; g < groups; ++g) {
            std::vector<Subspace> members;
            for (std::size_t k = 0; k < k_count; ++k)
                if (run.assignment[k] == g)
                    members.push_back(users[k]);
            // An empty cluster keeps its previous mean.
            if (!members.empty())
                run.means[static_cast<std::size_t>(g)] = subspace_mean(members, rank);
        }
        const double prev = run.trace.back();
        run.trace.push_back(assign());
        run.iterations = it + 1;
        if (std::abs(prev - run.trace.back()) <= opts.epsilon * prev)
            break;
    }
    return run;
}

} // namespace

int GroupLayout::num_users() const
{
    std::size_t n = 0;
    for (const auto& m : membership)
        n += m.size();
    return static_cast<int>(n);
}

std::vector<int> GroupLayout::group_of_user() const
{
    std::vector<int> out(static_cast<std::size_t>(num_users()), -1);
    for (std::size_t g = 0; g < membership.size(); ++g)
        for (int k : membership[g])
            out.at(static_cast<std::size_t>(k)) = static_cast<int>(g);
    return out;
}

std::vector<int> GroupLayout::groups_in_pattern(int pattern) const
{
    std::vector<int> out;
    for (std::size_t g = 0; g < pattern_of_group.size(); ++g)
        if (pattern_of_group[g] == pattern)
            out.push_back(static_cast<int>(g));
    return out;
}

std::vector<int> kmeans_initial_indices(int num_users, int groups, std::uint64_t seed, int restart)
{
    if (groups > num_users)
        throw InvalidParameter("kmeans: fewer users than groups");
    RngStream rng = RngStream::for_trial(seed, static_cast<std::uint64_t>(restart));
    std::vector<int> pool(static_cast<std::size_t>(num_users));
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<int> picked;
    for (int g = 0; g < groups; ++g) {
        const std::size_t j = static_cast<std::size_t>(g) + rng.below(pool.size() - static_cast<std::size_t>(g));
        std::swap(pool[static_cast<std::size_t>(g)], pool[j]);
        picked.push_back(pool[static_cast<std::size_t>(g)]);
    }
    return picked;
}

KMeansResult kmeans_group(std::span<const Subspace> users, int groups, std::uint64_t seed, const KMeansOptions& opts)
{
    const int k_count = static_cast<int>(users.size());
    if (groups < 1)
        throw InvalidParameter("kmeans: need at least one group");
    if (k_count < groups)
        throw InvalidParameter("kmeans: K = " + std::to_string(k_count) + " users is fewer than G = " +
                               std::to_string(groups));
    if (opts.restarts < 1 || opts.max_iter < 1 || !(opts.epsilon >= 0.0))
        throw InvalidParameter("kmeans: restarts and max_iter must be positive, epsilon non-negative");
    int rank = opts.group_rank;
    if (rank == 0)
        for (const auto& u : users)
            rank = std::max(rank, static_cast<int>(u.rank()));

    KMeansResult best;
    bool have = false;
    for (int r = 0; r < opts.restarts; ++r) {
        const auto init = kmeans_initial_indices(k_count, groups, seed, r);
        KMeansRun run = kmeans_once(users, groups, init, rank, opts);
        const double total = run.trace.back();
        if (!have || total < best.total_distance - tie_tol) {
            have = true;
            best.layout = layout_from_assignment(std::move(run.means), run.assignment);
            best.trace = std::move(run.trace);
            best.restart = r;
            best.iterations = run.iterations;
            best.total_distance = total;
        }
    }
    return best;
}

GroupLayout fixed_quantization_group(std::span<const Subspace> users, std::span<const Subspace> group_subspaces)
{
    if (group_subspaces.empty())
        throw InvalidParameter("fixed_quantization_group: no group subspaces");
    std::vector<int> assignment;
    assignment.reserve(users.size());
    for (const auto& u : users)
        assignment.push_back(nearest(group_subspaces, u));
    return layout_from_assignment({group_subspaces.begin(), group_subspaces.end()}, assignment);
}

double simplified_coordinate(const UserProfile& profile, double spacing)
{
    return -spacing * std::sin(profile.aoa) * std::cos(profile.spread);
}

int simplified_group(const UserProfile& profile, double spacing, std::span<const double> centers)
{
    if (centers.empty())
        throw InvalidParameter("simplified_group: empty center list");
    const double a = simplified_coordinate(profile, spacing);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < centers.size(); ++g) {
        const double d = std::abs(centers[g] - a);
        if (d < best_d - tie_tol) {
            best_d = d;
            best = static_cast<int>(g);
        }
    }
    return best;
}

std::vector<double> pattern_centers(int groups, int pattern)
{
    if (groups < 1)
        throw InvalidParameter("pattern_centers: need at least one group");
    if (pattern != 1 && pattern != 2)
        throw InvalidParameter("pattern_centers: pattern must be 1 or 2");
    const double shift = pattern == 1 ? 0.5 : 1.0;
    std::vector<double> c;
    for (int g = 0; g < groups; ++g)
        c.push_back((g + shift) / groups - 0.5);
    return c;
}

GroupLayout simplified_layout(std::span<const UserProfile> users, double spacing, int groups, int pattern)
{
    GroupLayout out;
    out.centers = pattern_centers(groups, pattern);
    out.half_widths.assign(static_cast<std::size_t>(groups), 0.5 / groups);
    out.membership.assign(static_cast<std::size_t>(groups), {});
    out.pattern_of_group.assign(static_cast<std::size_t>(groups), pattern);
    out.stream_budget.assign(static_cast<std::size_t>(groups), 1);
    for (std::size_t k = 0; k < users.size(); ++k)
        out.membership[static_cast<std::size_t>(simplified_group(users[k], spacing, out.centers))].push_back(
            static_cast<int>(k));
    return out;
}

double pattern_objective(const GroupLayout& layout, std::span<const int> pattern_of_group)
{
    double total = 0.0;
    for (int p = 1; p <= 2; ++p) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < pattern_of_group.size(); ++a)
            for (std::size_t b = a + 1; b < pattern_of_group.size(); ++b)
                if (pattern_of_group[a] == p && pattern_of_group[b] == p)
                    m = std::min(m, chordal_distance(layout.group_subspaces[a], layout.group_subspaces[b]));
        total += std::isinf(m) ? 0.0 : m;
    }
    return total;
}

GroupLayout partition_patterns(GroupLayout layout, int n_patterns, PatternMode mode)
{
    if (n_patterns != 2)
        throw Unsupported("partition_patterns: only two patterns are supported");
    const int g_count = layout.num_groups();
    if (g_count < 2)
        throw InvalidParameter("partition_patterns: need at least two groups");
    if (g_count % 2 != 0)
        throw InvalidParameter("partition_patterns: G must be even");
    layout.pattern_of_group.assign(static_cast<std::size_t>(g_count), 2);

    if (mode == PatternMode::alternating) {
        for (int g = 0; g < g_count; g += 2)
            layout.pattern_of_group[static_cast<std::size_t>(g)] = 1;
        return layout;
    }

    if (g_count > 12)
        throw Unsupported("partition_patterns: exhaustive max-min search supports G <= 12, got G = " +
                          std::to_string(g_count));
    if (static_cast<int>(layout.group_subspaces.size()) != g_count)
        throw InvalidParameter("partition_patterns: max-min mode needs group subspaces");

    // Enumerate pattern-1 sets of size G/2 in lexicographic order of their
    // sorted index lists; strict improvement keeps the lowest on ties.
    const int half = g_count / 2;
    std::vector<int> pick(static_cast<std::size_t>(half));
    std::iota(pick.begin(), pick.end(), 0);
    std::vector<int> best;
    double best_obj = -std::numeric_limits<double>::infinity();
    std::vector<int> labels(static_cast<std::size_t>(g_count));
    while (true) {
        std::fill(labels.begin(), labels.end(), 2);
        for (int g : pick)
            labels[static_cast<std::size_t>(g)] = 1;
        const double obj = pattern_objective(layout, labels);
        if (obj > best_obj + tie_tol) {
            best_obj = obj;
            best = labels;
        }
        int i = half - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == g_count - half + i)
            --i;
        if (i < 0)
            break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < half; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    layout.pattern_of_group = best;
    return layout;
}

std::vector<UserProfile> read_population_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw InvalidParameter("population file: empty");
    if (line.rfind("theta_deg,delta_deg", 0) != 0)
        throw InvalidParameter("population file: header must be 'theta_deg,delta_deg'");
    std::vector<UserProfile> users;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line[0] == '#')
            continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos)
                throw std::invalid_argument("missing comma");
            UserProfile u = UserProfile::from_degrees(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
            u.validate();
            users.push_back(u);
        } catch (const std::logic_error&) {
            throw InvalidParameter("population file: bad row " + std::to_string(row) + ": '" + line + "'");
        }
    }
    return users;
}

void write_population_csv(std::ostream& os, std::span<const UserProfile> users)
{
    os << "theta_deg,delta_deg\n";
    char buf[96];
    for (const auto& u : users) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rad2deg(u.aoa), rad2deg(u.spread));
        os << buf;
    }
}

void write_grouping_csv(std::ostream& os, const GroupLayout& layout)
{
    os << "user_id,group,pattern\n";
    const auto owner = layout.group_of_user();
    for (std::size_t k = 0; k < owner.size(); ++k) {
        const int g = owner[k];
        const int p = layout.pattern_of_group.empty() ? 1 : layout.pattern_of_group[static_cast<std::size_t>(g)];
        os << k + 1 << ',' << g + 1 << ',' << p << '\n';
    }
}

} // namespace jsdm
