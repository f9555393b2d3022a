// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/asymptotics.hpp"
#include "jsdm/config.hpp"
#include "jsdm/largesystem.hpp"
#include "jsdm/scheduling.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace jsdm {

// Mean and standard error from sums; order of add() calls does not matter.
struct RunningStats {
    long n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double x)
    {
        ++n;
        sum += x;
        sum_sq += x * x;
    }
    double mean() const { return n ? sum / n : 0.0; }
    // NaN with fewer than two samples.
    double stderr_of_mean() const;
};

struct ResultRow {
    std::string point;
    std::string metric;
    double mean = 0.0;
    double stderr_value = 0.0; // NaN: not available
    long trials = 0;
    long excluded = 0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::string, std::string>> files; // name -> CSV body (without the hash line)
    std::vector<std::string> notes;                          // free-form lines for metadata.txt
    double runtime_seconds = 0.0;
};

// Runs body(i) for i in [0, count) on a small thread pool. Each index must
// write only its own output slot; the first exception is rethrown.
void parallel_for(int count, const std::function<void(int)>& body);

// Profiles of the first `count` users for a seed. User u depends only on
// (seed, u), so larger populations extend smaller ones.
std::vector<UserProfile> random_population(const ExperimentConfig& cfg, std::uint64_t seed, int count);

// Typed runners; run_experiment wraps them into a ResultTable.
struct ScalingRun {
    ScalingReport report;
    std::vector<std::vector<double>> per_trial; // [kprime][trial], nats
};
ScalingRun run_scaling(const ExperimentConfig& cfg);

struct GroupingCompareRun {
    std::vector<int> users;                  // K sweep
    std::vector<Policy> policies;
    // [K][policy][trial] pattern-averaged sum SE in bits; NaN for an excluded trial.
    std::vector<std::vector<std::vector<double>>> sum_se;
    std::vector<long> excluded;              // per K
};
GroupingCompareRun run_grouping_compare(const ExperimentConfig& cfg);

struct CcdfRun {
    std::vector<double> x;
    std::vector<double> analytic;
    std::vector<double> empirical;
    std::vector<bool> used_contour;
    LemmaReport lemma;
    std::vector<int> dominant_ranks;
};
CcdfRun run_ccdf(const ExperimentConfig& cfg);

// Large-system instance of the config: K random users grouped by the
// simplified quantizer onto one pattern.
LsProblem ls_problem(const ExperimentConfig& cfg, int pattern, double snr_db);

ResultTable run_experiment(const ExperimentConfig& cfg);

// Writes every CSV (each prefixed with "# config_hash=<hex>"), summary.csv and
// metadata.txt under <out_dir>/<experiment>-<hash>/ and returns that path.
std::string write_results(const ExperimentConfig& cfg, const ResultTable& table, const std::string& out_dir);

std::string summary_csv(const ResultTable& table);

} // namespace jsdm
