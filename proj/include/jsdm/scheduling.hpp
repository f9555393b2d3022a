// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/core.hpp"
#include "jsdm/random.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jsdm {

struct ServedStream {
    int group = 0;
    int beam = 0;
    int user = 0;
    double sinr = 0.0;
    double rate = 0.0; // nats
};

struct SelectionOutcome {
    std::vector<ServedStream> served;
    double sum_rate = 0.0; // nats
};

// Rows are users, columns are the beams of one group. Every beam goes to its
// best user (lowest index on ties); a user may win several beams.
SelectionOutcome gbf_all_select(const RMatrix& sinr_table, int group = 0);

struct BeamReport {
    double sinr = 0.0;
    int beam = 0;
};

// Each user reports only its best beam. Beams nobody reported stay silent.
SelectionOutcome gbf_max_select(std::span<const BeamReport> reports, int num_beams, int group = 0);

// Best-beam report of each row of a SINR table (lowest beam on ties).
std::vector<BeamReport> max_reports(const RMatrix& sinr_table);

// Semi-orthogonal user selection on channel columns; returns users in pick order.
std::vector<int> sus_select(const CMatrix& channels, int s_max, double alpha = 0.3);

// Sum rate (nats) of zero-forcing with unit-norm beam columns and equal power
// total_power / |users| per stream. Returns -inf for a rank-deficient set.
double zf_sum_rate(const CMatrix& channels, std::span<const int> users, double total_power);

// Greedy ZF user selection maximizing zf_sum_rate; returns users in pick order.
std::vector<int> gus_select(const CMatrix& channels, int s_max, double total_power);

struct StreamAssignment {
    int subgroup = -1; // -1: idle stream
    int user = -1;     // index within the subgroup
};

// One slot of probabilistic selection for a group with b_g = streams_per_dim
// and N: b_g * N i.i.d. labels with P(k) = gamma_k / b_g and P(idle) the rest.
// population[k] users are available in subgroup k (defaults to N each).
std::vector<StreamAssignment> probabilistic_select(std::span<const double> gamma, int b, int n, RngStream& rng,
                                                   std::span<const int> population = {});

enum class Policy { gbf_all, gbf_max, zfbf_sus, zfbf_gus, prob };

Policy parse_policy(std::string_view name);
std::string_view policy_name(Policy p);

} // namespace jsdm
