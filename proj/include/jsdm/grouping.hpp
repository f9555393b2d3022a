// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/channel.hpp"
#include "jsdm/subspace.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace jsdm {

// Groups and users are 0-based in code; patterns are labelled 1 and 2.
// Files written by this module use 1-based user and group ids.
struct GroupLayout {
    std::vector<Subspace> group_subspaces;
    std::vector<std::vector<int>> membership;
    std::vector<int> pattern_of_group;
    std::vector<int> stream_budget;
    std::vector<double> centers;     // only for the simplified quantizer
    std::vector<double> half_widths; // idem

    int num_groups() const { return static_cast<int>(membership.size()); }
    int num_users() const;
    std::vector<int> group_of_user() const;
    std::vector<int> groups_in_pattern(int pattern) const;
};

struct KMeansOptions {
    double epsilon = 1e-3;
    int max_iter = 100;
    int restarts = 5;
    int group_rank = 0; // rank of the group means; 0 means the largest user rank
};

struct KMeansResult {
    GroupLayout layout;
    std::vector<double> trace; // d_tot after each assignment step of the kept restart
    int restart = 0;
    int iterations = 0;
    double total_distance = 0.0;
};

// Users picked as initial means by a given restart (distinct, in pick order).
std::vector<int> kmeans_initial_indices(int num_users, int groups, std::uint64_t seed, int restart);

KMeansResult kmeans_group(std::span<const Subspace> users, int groups, std::uint64_t seed,
                          const KMeansOptions& opts = {});

GroupLayout fixed_quantization_group(std::span<const Subspace> users, std::span<const Subspace> group_subspaces);

// Scalar coordinate used by the simplified quantizer: -D sin(aoa) cos(spread).
double simplified_coordinate(const UserProfile& profile, double spacing);

int simplified_group(const UserProfile& profile, double spacing, std::span<const double> centers);

// Quantizer centers on the normalized frequency axis. Pattern 1:
// (g + 1/2)/G - 1/2; pattern 2: (g + 1)/G - 1/2, for g = 0..G-1.
std::vector<double> pattern_centers(int groups, int pattern);

GroupLayout simplified_layout(std::span<const UserProfile> users, double spacing, int groups, int pattern);

enum class PatternMode { maxmin, alternating };

GroupLayout partition_patterns(GroupLayout layout, int n_patterns = 2, PatternMode mode = PatternMode::alternating);

// Sum over the two patterns of the minimum within-pattern chordal distance.
double pattern_objective(const GroupLayout& layout, std::span<const int> pattern_of_group);

std::vector<UserProfile> read_population_csv(std::istream& is);
void write_population_csv(std::ostream& os, std::span<const UserProfile> users);
void write_grouping_csv(std::ostream& os, const GroupLayout& layout);

} // namespace jsdm
