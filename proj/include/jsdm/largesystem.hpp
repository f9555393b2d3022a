// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/channel.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace jsdm {

// Spectral densities live on the normalized DFT frequency axis, a circle of
// circumference 1 represented as [-1/2, 1/2). A subgroup's density is
// amplitude * shape(x) on its support interval, where shape(x) is
// 1/sqrt(D^2 - x^2) for one-ring users and 1 for flat surrogates.
enum class SpectrumShape { one_ring, flat };

struct LsSubgroup {
    double lo = 0.0; // support on the frequency axis, lo < hi, inside (-1/2, 1/2)
    double hi = 0.0;
    double amplitude = 0.0;
    UserProfile profile; // meaningful for one-ring subgroups

    static LsSubgroup one_ring(const UserProfile& profile, double spacing);
};

struct LsGroup {
    double window_lo = 0.0; // may extend past +-1/2; wraps around the circle
    double window_hi = 0.0;
    int streams = 1; // b_g
    std::vector<LsSubgroup> subgroups;

    double window_measure() const { return window_hi - window_lo; }
};

struct LsProblem {
    int antennas = 8;      // M
    double spacing = 0.5;  // D
    double total_power = 10.0;
    SpectrumShape shape = SpectrumShape::one_ring;
    std::vector<LsGroup> groups;

    int num_subgroups() const;
    void validate() const;

    // Users quantized by the simplified grouping onto `groups` windows of
    // width streams/M centered at the pattern's quantizer centers.
    static LsProblem from_profiles(int antennas, double spacing, double total_power,
                                   std::span<const UserProfile> profiles, int groups, int pattern, int streams);
};

// gamma[g][k]; same nesting as LsProblem::groups[g].subgroups[k].
using Fractions = std::vector<std::vector<double>>;

Fractions zero_fractions(const LsProblem& problem);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

// Pieces (in window-local, unwrapped coordinates mapped back to [-1/2, 1/2))
// where subgroup k of group g overlaps the window of group gp.
std::vector<Interval> overlap_intervals(const LsProblem& problem, int g, int k, int gp);

// Density of subgroup (g, k) as seen through the window of group gp.
double f_function(const LsProblem& problem, int g, int k, int gp, double x);

struct SolveMode {
    enum class Kind { continuous, finite };
    Kind kind = Kind::continuous;
    int n = 0; // N for finite mode

    static SolveMode continuous() { return {Kind::continuous, 0}; }
    static SolveMode finite(int n) { return {Kind::finite, n}; }
};

struct FixedPointOptions {
    int quadrature_nodes = 2048;
    double tolerance = 1e-9;
    int max_iter = 10000;
    double damping = 0.5;
};

struct LsSolution {
    Fractions gamma;
    std::vector<std::vector<double>> m0;
    std::vector<RVector> v;      // per group
    std::vector<RMatrix> j;      // per group
    std::vector<RVector> q;      // per group
    std::vector<double> gamma0;  // Gamma_g
    std::vector<double> zeta0_sq;
    // upsilon[gp][g][k]: interference coefficient of group gp on subgroup (g, k)
    std::vector<std::vector<std::vector<double>>> upsilon;
    std::vector<std::vector<double>> sinr0;
    double residual = 0.0; // max relative fixed-point residual
    int iterations = 0;    // most iterations used by any group
};

LsSolution solve_fixed_point(const LsProblem& problem, const Fractions& gamma, SolveMode mode = SolveMode::continuous(),
                             const FixedPointOptions& opts = {});

// Fills sinr0 from zeta0_sq and upsilon; S is the total load sum_g S_g.
std::vector<std::vector<double>> sinr_limit(const LsSolution& solution, double total_power, double total_load);

enum class Utility { pfs, sumrate };

double network_utility(std::span<const double> rates, Utility kind, double floor = 1e-12);

struct TracePoint {
    int iter = 0;
    double load = 0.0; // S
    double objective = 0.0;
};

struct FractionPlan {
    Fractions gamma;
    Utility utility = Utility::pfs;
    double step = 0.01;
    std::vector<TracePoint> trace;
    std::vector<std::vector<double>> rates; // gamma * log(1 + SINR), nats
    std::vector<std::vector<double>> sinr;
};

struct GreedyOptions {
    double floor = 1e-12;
    FixedPointOptions fixed_point;
};

FractionPlan greedy_fractions(const LsProblem& problem, Utility kind, double step, bool with_stop,
                              const GreedyOptions& opts = {});

// round(gamma * N) with ties up.
int scheduled_users(double gamma, int n);

struct FiniteSinrStats {
    std::vector<std::vector<double>> mean_sinr;      // NaN where a subgroup was never served
    std::vector<std::vector<double>> mean_abs_error; // |SINR - SINR°| averaged over served streams
    std::vector<std::vector<double>> mean_rate;      // per-slot rate of the subgroup / N, nats
    std::vector<std::vector<long>> samples;          // served streams over all kept trials
    int trials = 0;
    int excluded = 0; // trials dropped for an ill-conditioned ZF selection
};

enum class FiniteSelection { rounded, probabilistic };

// Finite-dimensional ZF with DFT pre-beamformers at M*N antennas and exact
// one-ring covariances. `rounded` serves round(gamma N) users per subgroup in
// every slot; `probabilistic` draws the served users with probabilistic_select.
// Per-stream power is P / (N S) with S the nominal load sum of gamma.
FiniteSinrStats simulate_finite_sinr(const LsProblem& problem, const Fractions& gamma,
                                     const std::vector<std::vector<double>>& sinr_limit_values, int n, int trials,
                                     std::uint64_t seed, FiniteSelection selection = FiniteSelection::probabilistic);

// DFT column index range (inclusive, centered indices, may wrap) of a group
// window at size M*N.
std::pair<int, int> window_indices(const LsGroup& group, int antennas, int n);

void write_plan_csv(std::ostream& os, const LsProblem& problem, const FractionPlan& plan);
void write_trace_csv(std::ostream& os, const FractionPlan& plan);

} // namespace jsdm
