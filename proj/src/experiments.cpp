// SPDX-License-Identifier: Apache-2.0
#include "jsdm/experiments.hpp"
#include "jsdm/beamforming.hpp"
#include "jsdm/grouping.hpp"
#include "jsdm/linalg.hpp"
#include "jsdm/subspace.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace jsdm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v)
{
    if (std::isnan(v))
        return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

ConfigErrors bad_key(const std::string& key, const std::string& message)
{
    return ConfigErrors({{ConfigIssue::Kind::range, key, message}});
}

RankPolicy rank_policy(const ExperimentConfig& cfg)
{
    return cfg.get("rank_policy") == "full" ? RankPolicy::full() : RankPolicy::energy(cfg.get_double("eta"));
}

std::vector<UserProfile> population(const ExperimentConfig& cfg, int count)
{
    const std::string path = cfg.get("population_csv");
    if (path.empty())
        return random_population(cfg, cfg.seed(), count);
    std::ifstream in(path);
    if (!in)
        throw bad_key("population_csv", "cannot open '" + path + "'");
    auto users = read_population_csv(in);
    if (static_cast<int>(users.size()) < count)
        throw bad_key("population_csv", "file holds " + std::to_string(users.size()) + " users, " +
                                            std::to_string(count) + " needed");
    users.resize(static_cast<std::size_t>(count));
    return users;
}

Subspace dominant_span(const CovarianceModel& cov)
{
    return Subspace(cov.dominant_eigvecs);
}

// ----------------------------------------------------------------------------
// grouping-compare helpers

struct UserDraw {
    UserProfile profile;
    Subspace dominant;
    CVector h;
};

// Sum rate of column-normalized ZF with equal power over every selected
// stream of a pattern; leakage between groups counts as interference.
double pattern_zf_rate(const std::vector<CMatrix>& pre, const std::vector<CMatrix>& selected, double total_power)
{
    Eigen::Index total = 0;
    for (const auto& h : selected)
        total += h.cols();
    if (total == 0)
        return 0.0;
    const Eigen::Index m = pre.front().rows();
    CMatrix beams(m, total), users(m, total);
    Eigen::Index at = 0;
    for (std::size_t g = 0; g < pre.size(); ++g) {
        const Eigen::Index s = selected[g].cols();
        if (s == 0)
            continue;
        const CMatrix heff = pre[g].adjoint() * selected[g];
        const CMatrix v = heff * (heff.adjoint() * heff).ldlt().solve(CMatrix::Identity(s, s));
        for (Eigen::Index j = 0; j < s; ++j) {
            const double nrm = v.col(j).norm();
            beams.col(at + j) = nrm > 0.0 ? CVector(pre[g] * v.col(j) / nrm) : CVector::Zero(m);
        }
        users.middleCols(at, s) = selected[g];
        at += s;
    }
    const double pu = total_power / static_cast<double>(total);
    const RMatrix gains = (users.adjoint() * beams).cwiseAbs2();
    double rate = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
        const double signal = gains(j, j);
        const double interference = gains.row(j).sum() - signal;
        rate += std::log1p(pu * signal / (1.0 + pu * interference));
    }
    return rate;
}

// Pattern-averaged sum SE (bits) of every policy on one realization; empty on
// an infeasible block diagonalization.
std::vector<double> compare_trial(const GroupLayout& layout, const std::vector<UserDraw>& draws, int k_users,
                                  const std::vector<Policy>& policies, double total_power, double alpha)
{
    std::vector<double> se(policies.size(), 0.0);
    for (int pattern = 1; pattern <= 2; ++pattern) {
        const auto groups = layout.groups_in_pattern(pattern);
        if (groups.empty())
            continue;
        std::vector<CMatrix> pre;
        int streams = 0;
        for (int g : groups) {
            const int b = layout.stream_budget[static_cast<std::size_t>(g)];
            try {
                pre.push_back(bd_prebeamformer(layout, g, b));
            } catch (const Infeasible&) {
                return {};
            }
            streams += b;
        }
        PrecoderStack stack;
        stack.pre_beamformers = pre;
        stack.per_stream_power = total_power / streams;

        std::vector<std::vector<int>> members(groups.size());
        for (std::size_t i = 0; i < groups.size(); ++i)
            for (int u : layout.membership[static_cast<std::size_t>(groups[i])])
                if (u < k_users)
                    members[i].push_back(u);

        for (std::size_t p = 0; p < policies.size(); ++p) {
            double rate = 0.0;
            if (policies[p] == Policy::gbf_all || policies[p] == Policy::gbf_max) {
                for (std::size_t i = 0; i < groups.size(); ++i) {
                    if (members[i].empty())
                        continue;
                    const auto beams = pre[i].cols();
                    RMatrix table(static_cast<Eigen::Index>(members[i].size()), beams);
                    for (std::size_t r = 0; r < members[i].size(); ++r)
                        table.row(static_cast<Eigen::Index>(r)) =
                            beam_sinrs(draws[static_cast<std::size_t>(members[i][r])].h, stack, static_cast<int>(i))
                                .transpose();
                    rate += policies[p] == Policy::gbf_all
                                ? gbf_all_select(table, static_cast<int>(i)).sum_rate
                                : gbf_max_select(max_reports(table), static_cast<int>(beams), static_cast<int>(i)).sum_rate;
                }
            } else {
                std::vector<CMatrix> chosen(groups.size());
                for (std::size_t i = 0; i < groups.size(); ++i) {
                    const auto m = pre[i].rows();
                    CMatrix raw(m, static_cast<Eigen::Index>(members[i].size()));
                    for (std::size_t r = 0; r < members[i].size(); ++r)
                        raw.col(static_cast<Eigen::Index>(r)) = draws[static_cast<std::size_t>(members[i][r])].h;
                    const CMatrix heff = pre[i].adjoint() * raw;
                    const int s_max = static_cast<int>(pre[i].cols());
                    const auto pick = policies[p] == Policy::zfbf_sus
                                          ? sus_select(heff, s_max, alpha)
                                          : gus_select(heff, s_max, total_power * s_max / streams);
                    chosen[i].resize(m, static_cast<Eigen::Index>(pick.size()));
                    for (std::size_t j = 0; j < pick.size(); ++j)
                        chosen[i].col(static_cast<Eigen::Index>(j)) = raw.col(pick[j]);
                }
                rate = pattern_zf_rate(pre, chosen, total_power);
            }
            se[p] += 0.5 * nats2bits(rate);
        }
    }
    return se;
}

// ----------------------------------------------------------------------------

FixedPointOptions fixed_point_options(const ExperimentConfig& cfg)
{
    FixedPointOptions o;
    o.quadrature_nodes = cfg.get_int("quadrature_nodes");
    o.tolerance = cfg.get_double("fp_tolerance");
    o.max_iter = cfg.get_int("fp_max_iter");
    return o;
}

GreedyOptions greedy_options(const ExperimentConfig& cfg)
{
    GreedyOptions o;
    o.floor = cfg.get_double("utility_floor");
    o.fixed_point = fixed_point_options(cfg);
    return o;
}

Utility parse_utility(const std::string& s)
{
    return s == "pfs" ? Utility::pfs : Utility::sumrate;
}

double plan_sum_rate(const FractionPlan& plan)
{
    double s = 0.0;
    for (const auto& g : plan.rates)
        for (double r : g)
            s += r;
    return s;
}

FractionPlan plan_for(const ExperimentConfig& cfg, const LsProblem& problem, const std::string& utility)
{
    return greedy_fractions(problem, parse_utility(utility), cfg.get_double("delta_gamma"), cfg.get_bool("with_stop"),
                            greedy_options(cfg));
}

std::string plan_body(const LsProblem& problem, const FractionPlan& plan)
{
    std::ostringstream os;
    write_plan_csv(os, problem, plan);
    return os.str();
}

std::string trace_body(const FractionPlan& plan)
{
    std::ostringstream os;
    write_trace_csv(os, plan);
    return os.str();
}

} // namespace

std::vector<UserProfile> random_population(const ExperimentConfig& cfg, std::uint64_t seed, int count)
{
    const double t0 = cfg.get_double("theta_min_deg"), t1 = cfg.get_double("theta_max_deg");
    const double d0 = cfg.get_double("delta_min_deg"), d1 = cfg.get_double("delta_max_deg");
    const RngStream base(splitmix64(seed ^ 0x706f70756c617465ULL));
    std::vector<UserProfile> out;
    for (int u = 0; u < count; ++u) {
        RngStream r = base.fork(static_cast<std::uint64_t>(u));
        const double theta = r.uniform(t0, t1);
        const double delta = r.uniform(d0, d1);
        out.push_back(UserProfile::from_degrees(theta, delta));
    }
    return out;
}

ScalingRun run_scaling(const ExperimentConfig& cfg)
{
    const int m = cfg.get_int("M");
    const auto ranks = cfg.get_ints("ranks");
    const int trials = cfg.trials();
    const double power = db2lin(cfg.get_doubles("snr_db").front());
    int total_rank = 0;
    for (int r : ranks)
        total_rank += r;
    if (total_rank > m)
        throw bad_key("ranks", "sum of group ranks exceeds M; block diagonalization needs sum(r) <= M");

    std::vector<Subspace> bases;
    if (cfg.get("group_basis") == "orthogonal") {
        int at = 0;
        for (int r : ranks) {
            bases.emplace_back(dft_columns(m, at, at + r - 1));
            at += r;
        }
    } else {
        RngStream rng(splitmix64(cfg.seed() ^ 0x6261736573ULL));
        for (int r : ranks) {
            CMatrix raw(m, r);
            for (int j = 0; j < r; ++j)
                raw.col(j) = rng.complex_normal(m);
            bases.push_back(Subspace::span_of(raw));
        }
    }
    PrecoderStack stack;
    for (std::size_t g = 0; g < bases.size(); ++g) {
        std::vector<Subspace> others;
        for (std::size_t o = 0; o < bases.size(); ++o)
            if (o != g)
                others.push_back(bases[o]);
        stack.pre_beamformers.push_back(bd_prebeamformer(bases[g], others, ranks[g]));
    }
    stack.per_stream_power = power / total_rank;

    std::vector<GroupSpectrum> spectra;
    for (int r : ranks)
        spectra.push_back({r, RVector::Ones(r)});
    const auto kprimes_int = cfg.get_ints("kprime");
    const std::vector<double> kprimes(kprimes_int.begin(), kprimes_int.end());

    ScalingRun run;
    run.report = theorem1_bounds(m, spectra, power, kprimes);

    // Extreme-value prediction per beam from the exact CCDF.
    std::vector<SinrSpectral> beams;
    for (std::size_t g = 0; g < bases.size(); ++g)
        for (int b = 0; b < ranks[g]; ++b)
            beams.push_back(build_a_matrices(bases[g].basis(), RVector::Ones(ranks[g]), stack, static_cast<int>(g), b));

    for (std::size_t ki = 0; ki < kprimes.size(); ++ki) {
        const int kp = kprimes_int[ki];
        double pred = 0.0;
        for (const auto& spec : beams)
            pred += std::log1p(
                extreme_value_prediction([&](double x) { return sinr_ccdf(x, spec).value; }, kp).quantile);
        run.report.rows[ki].prediction = pred;

        std::vector<double> rates(static_cast<std::size_t>(trials));
        parallel_for(trials, [&](int t) {
            RngStream rng = RngStream::for_trial(cfg.seed(), static_cast<std::uint64_t>(t)).fork(static_cast<std::uint64_t>(kp));
            double sum = 0.0;
            for (std::size_t g = 0; g < bases.size(); ++g) {
                RMatrix table(kp, ranks[g]);
                for (int u = 0; u < kp; ++u) {
                    const CVector h = bases[g].basis() * rng.complex_normal(ranks[g]);
                    table.row(u) = beam_sinrs(h, stack, static_cast<int>(g)).transpose();
                }
                sum += gbf_all_select(table, static_cast<int>(g)).sum_rate;
            }
            rates[static_cast<std::size_t>(t)] = sum;
        });
        RunningStats st;
        for (double r : rates)
            st.add(r);
        run.report.rows[ki].mc_mean = st.mean();
        run.report.rows[ki].mc_stderr = st.stderr_of_mean();
        run.per_trial.push_back(std::move(rates));
    }
    return run;
}

GroupingCompareRun run_grouping_compare(const ExperimentConfig& cfg)
{
    GroupingCompareRun run;
    run.users = cfg.get_ints("K");
    for (const auto& name : cfg.get_strings("policies")) {
        const Policy p = parse_policy(name);
        if (p == Policy::prob)
            throw bad_key("policies", "'prob' belongs to the prob-sched experiment");
        run.policies.push_back(p);
    }
    const int m = cfg.get_int("M");
    const int groups = cfg.get_int("G");
    const double power = db2lin(cfg.get_doubles("snr_db").front());
    const double spacing = cfg.get_double("D");
    const double alpha = cfg.get_double("sus_alpha");
    const int trials = cfg.trials();
    const int k_max = *std::max_element(run.users.begin(), run.users.end());
    if (k_max < groups)
        throw bad_key("K", "every K must be at least G");
    const PatternMode mode = cfg.get("pattern_mode") == "maxmin" ? PatternMode::maxmin : PatternMode::alternating;
    if (groups % 2 != 0)
        throw bad_key("G", "two patterns need an even number of groups");
    const bool use_dft = cfg.get("grouping") == "dft";
    std::vector<Subspace> dft_groups;
    if (use_dft)
        dft_groups = dft_block_subspaces(m, groups, cfg.get_int("dft_r"),
                                         cfg.get("dft_rule") == "wrapped" ? BlockRule::wrapped : BlockRule::disjoint);
    KMeansOptions kopt;
    kopt.epsilon = cfg.get_double("kmeans_epsilon");
    kopt.max_iter = cfg.get_int("kmeans_max_iter");
    kopt.restarts = cfg.get_int("kmeans_restarts");

    const bool fixed_population = !cfg.get("population_csv").empty();
    const std::vector<UserProfile> file_users = fixed_population ? population(cfg, k_max) : std::vector<UserProfile>{};
    const SystemGeometry geom{m, spacing, power};
    const RankPolicy policy = rank_policy(cfg);

    // [trial][K][policy]
    std::vector<std::vector<std::vector<double>>> per_trial(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int t) {
        const RngStream rng = RngStream::for_trial(cfg.seed(), static_cast<std::uint64_t>(t));
        std::vector<UserDraw> draws;
        draws.reserve(static_cast<std::size_t>(k_max));
        for (int u = 0; u < k_max; ++u) {
            RngStream ur = rng.fork(static_cast<std::uint64_t>(u));
            UserProfile prof = fixed_population ? file_users[static_cast<std::size_t>(u)]
                                                : UserProfile::from_degrees(ur.uniform(cfg.get_double("theta_min_deg"),
                                                                                       cfg.get_double("theta_max_deg")),
                                                                            ur.uniform(cfg.get_double("delta_min_deg"),
                                                                                       cfg.get_double("delta_max_deg")));
            const CovarianceModel cov = eigendecompose(one_ring_covariance(prof, geom), policy);
            CVector h = sample_channel(cov, ur).coeffs;
            draws.push_back({prof, dominant_span(cov), std::move(h)});
        }
        auto& out = per_trial[static_cast<std::size_t>(t)];
        for (int k_users : run.users) {
            std::vector<Subspace> subs;
            for (int u = 0; u < k_users; ++u)
                subs.push_back(draws[static_cast<std::size_t>(u)].dominant);
            GroupLayout layout = use_dft ? fixed_quantization_group(subs, dft_groups)
                                         : kmeans_group(subs, groups, rng.fork(0x6b6d65616e73ULL).next_u64(), kopt).layout;
            layout = partition_patterns(std::move(layout), 2, mode);
            out.push_back(compare_trial(layout, draws, k_users, run.policies, power, alpha));
        }
    });

    run.sum_se.assign(run.users.size(), std::vector<std::vector<double>>(run.policies.size()));
    run.excluded.assign(run.users.size(), 0);
    for (int t = 0; t < trials; ++t)
        for (std::size_t ki = 0; ki < run.users.size(); ++ki) {
            const auto& v = per_trial[static_cast<std::size_t>(t)][ki];
            if (v.empty())
                ++run.excluded[ki];
            for (std::size_t p = 0; p < run.policies.size(); ++p)
                run.sum_se[ki][p].push_back(v.empty() ? kNaN : v[p]);
        }
    return run;
}

CcdfRun run_ccdf(const ExperimentConfig& cfg)
{
    const int m = cfg.get_int("M");
    const double power = db2lin(cfg.get_doubles("snr_db").front());
    const auto thetas = cfg.get_doubles("group_theta_deg");
    const auto deltas = cfg.get_doubles("group_delta_deg");
    const SystemGeometry geom{m, cfg.get_double("D"), power};
    const RankPolicy policy = rank_policy(cfg);

    std::vector<CovarianceModel> covs;
    std::vector<Subspace> subs;
    CcdfRun run;
    for (std::size_t g = 0; g < thetas.size(); ++g) {
        covs.push_back(eigendecompose(one_ring_covariance(UserProfile::from_degrees(thetas[g], deltas[g]), geom), policy));
        subs.push_back(dominant_span(covs.back()));
        run.dominant_ranks.push_back(covs.back().dominant_rank);
    }
    PrecoderStack stack;
    int streams = 0;
    for (std::size_t g = 0; g < subs.size(); ++g) {
        std::vector<Subspace> others;
        for (std::size_t o = 0; o < subs.size(); ++o)
            if (o != g)
                others.push_back(subs[o]);
        stack.pre_beamformers.push_back(bd_prebeamformer(subs[g], others, run.dominant_ranks[g]));
        streams += run.dominant_ranks[g];
    }
    stack.per_stream_power = power / streams;
    const SinrSpectral spec = build_a_matrices(covs[0].eigvecs, covs[0].eigvals, stack, 0, 0);

    std::vector<double> grid;
    for (int i = 0; i < 50; ++i)
        grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 49.0));
    run.lemma = lemma_checks(spec, grid);

    const int trials = cfg.trials();
    std::vector<double> draws(static_cast<std::size_t>(trials));
    parallel_for(trials, [&](int t) {
        RngStream rng = RngStream::for_trial(cfg.seed(), static_cast<std::uint64_t>(t));
        draws[static_cast<std::size_t>(t)] = beam_sinr(sample_channel(covs[0], rng).coeffs, stack, 0, 0);
    });
    run.x = cfg.get_doubles("ccdf_x");
    for (double x : run.x) {
        const CcdfValue v = sinr_ccdf(x, spec);
        run.analytic.push_back(v.value);
        run.used_contour.push_back(v.used_contour);
        const auto above = std::count_if(draws.begin(), draws.end(), [&](double s) { return s > x; });
        run.empirical.push_back(static_cast<double>(above) / trials);
    }
    return run;
}

LsProblem ls_problem(const ExperimentConfig& cfg, int pattern, double snr_db)
{
    const auto profiles = population(cfg, cfg.get_ints("K").front());
    return LsProblem::from_profiles(cfg.get_int("M"), cfg.get_double("D"), db2lin(snr_db), profiles, cfg.get_int("G"),
                                    pattern, cfg.get_int("b"));
}

ResultTable run_experiment(const ExperimentConfig& cfg)
{
    const auto start = std::chrono::steady_clock::now();
    ResultTable table;
    const std::string& exp = cfg.experiment();

    if (exp == "scaling") {
        const ScalingRun run = run_scaling(cfg);
        std::ostringstream os;
        write_scaling_csv(os, run.report);
        table.files.emplace_back("scaling.csv", os.str());
        for (std::size_t i = 0; i < run.report.rows.size(); ++i) {
            RunningStats st;
            for (double r : run.per_trial[i])
                st.add(nats2bits(r));
            const std::string point = "Kprime=" + num(run.report.rows[i].kprime);
            table.rows.push_back({point, "sum_rate_bits", st.mean(), st.stderr_of_mean(), st.n, 0});
            table.rows.push_back({point, "upper_bound_bits", nats2bits(run.report.rows[i].upper_bound), kNaN, 0, 0});
            table.rows.push_back({point, "prediction_bits", nats2bits(run.report.rows[i].prediction), kNaN, 0, 0});
        }
        std::vector<double> x, y;
        for (std::size_t i = 0; i < run.report.rows.size(); ++i) {
            x.push_back(std::log(std::log(run.report.rows[i].kprime)));
            y.push_back(run.report.rows[i].mc_mean);
        }
        if (x.size() >= 2)
            table.rows.push_back({"all", "slope_nats_per_loglogK", fitted_slope(x, y), kNaN, cfg.trials(), 0});
        table.rows.push_back({"all", "beta", static_cast<double>(run.report.beta), kNaN, 0, 0});
        table.notes.push_back("scaling.csv columns are in nats");
    } else if (exp == "grouping-compare") {
        const GroupingCompareRun run = run_grouping_compare(cfg);
        std::string body = "K,trial,policy,sum_se_bits\n";
        for (std::size_t ki = 0; ki < run.users.size(); ++ki) {
            for (std::size_t p = 0; p < run.policies.size(); ++p) {
                RunningStats st;
                for (std::size_t t = 0; t < run.sum_se[ki][p].size(); ++t) {
                    const double v = run.sum_se[ki][p][t];
                    body += std::to_string(run.users[ki]) + "," + std::to_string(t) + "," +
                            std::string(policy_name(run.policies[p])) + "," + num(v) + "\n";
                    if (!std::isnan(v))
                        st.add(v);
                }
                table.rows.push_back({"K=" + std::to_string(run.users[ki]),
                                      "sum_se_" + std::string(policy_name(run.policies[p])), st.mean(),
                                      st.stderr_of_mean(), st.n, run.excluded[ki]});
            }
        }
        table.files.emplace_back("trials.csv", body);
    } else if (exp == "ccdf") {
        const CcdfRun run = run_ccdf(cfg);
        std::string body = "x,analytic,empirical,abs_diff,contour\n";
        for (std::size_t i = 0; i < run.x.size(); ++i) {
            body += num(run.x[i]) + "," + num(run.analytic[i]) + "," + num(run.empirical[i]) + "," +
                    num(std::abs(run.analytic[i] - run.empirical[i])) + "," + (run.used_contour[i] ? "1" : "0") + "\n";
            const double p = run.empirical[i];
            const std::string point = "x=" + num(run.x[i]);
            table.rows.push_back({point, "ccdf_empirical", p, std::sqrt(p * (1.0 - p) / cfg.trials()), cfg.trials(), 0});
            table.rows.push_back({point, "ccdf_analytic", run.analytic[i], kNaN, 0, 0});
        }
        table.files.emplace_back("ccdf.csv", body);
        table.notes.push_back("lemma checks: " + run.lemma.describe());
        for (std::size_t i = 0; i < run.x.size(); ++i)
            if (run.used_contour[i])
                table.notes.push_back("contour integral used at x=" + num(run.x[i]));
    } else if (exp == "fractions") {
        const LsProblem problem = ls_problem(cfg, cfg.get_int("pattern"), cfg.get_doubles("snr_db").front());
        for (const auto& u : cfg.get_strings("utility")) {
            const FractionPlan plan = plan_for(cfg, problem, u);
            table.files.emplace_back("plan-" + u + ".csv", plan_body(problem, plan));
            table.files.emplace_back("trace-" + u + ".csv", trace_body(plan));
            int positive = 0;
            for (const auto& g : plan.gamma)
                positive += static_cast<int>(std::count_if(g.begin(), g.end(), [](double x) { return x > 0.0; }));
            const std::string point = "utility=" + u;
            table.rows.push_back({point, "objective", plan.trace.back().objective, kNaN, 1, 0});
            table.rows.push_back({point, "load", plan.trace.back().load, kNaN, 1, 0});
            table.rows.push_back({point, "sum_rate_norm_bits", nats2bits(plan_sum_rate(plan)), kNaN, 1, 0});
            table.rows.push_back({point, "positive_subgroups", static_cast<double>(positive), kNaN, 1, 0});
            table.rows.push_back({point, "subgroups", static_cast<double>(problem.num_subgroups()), kNaN, 1, 0});
        }
    } else if (exp == "largesystem") {
        const LsProblem problem = ls_problem(cfg, cfg.get_int("pattern"), cfg.get_doubles("snr_db").front());
        const std::string utility = cfg.get_strings("utility").front();
        const FractionPlan plan = plan_for(cfg, problem, utility);
        table.files.emplace_back("plan-" + utility + ".csv", plan_body(problem, plan));
        const LsSolution sol = solve_fixed_point(problem, plan.gamma, SolveMode::continuous(), fixed_point_options(cfg));
        const auto selection =
            cfg.get("selection") == "rounded" ? FiniteSelection::rounded : FiniteSelection::probabilistic;
        std::string body = "N,group,subgroup,gamma,sinr_limit,sinr_fixed_point_n,mean_sinr,mean_abs_error,samples\n";
        for (int n : cfg.get_ints("N")) {
            const LsSolution fin = solve_fixed_point(problem, plan.gamma, SolveMode::finite(n), fixed_point_options(cfg));
            const FiniteSinrStats st =
                simulate_finite_sinr(problem, plan.gamma, sol.sinr0, n, cfg.trials(), cfg.seed(), selection);
            RunningStats gap;
            double finite_rate = 0.0, fp_gap = 0.0;
            for (std::size_t g = 0; g < problem.groups.size(); ++g)
                for (std::size_t k = 0; k < problem.groups[g].subgroups.size(); ++k) {
                    body += std::to_string(n) + "," + std::to_string(g + 1) + "," + std::to_string(k + 1) + "," +
                            num(plan.gamma[g][k]) + "," + num(sol.sinr0[g][k]) + "," + num(fin.sinr0[g][k]) + "," +
                            num(st.mean_sinr[g][k]) + "," + num(st.mean_abs_error[g][k]) + "," +
                            std::to_string(st.samples[g][k]) + "\n";
                    if (st.samples[g][k] > 0)
                        gap.add(st.mean_abs_error[g][k]);
                    finite_rate += st.mean_rate[g][k];
                    if (sol.sinr0[g][k] > 0.0)
                        fp_gap = std::max(fp_gap, std::abs(fin.sinr0[g][k] - sol.sinr0[g][k]) / sol.sinr0[g][k]);
                }
            const std::string point = "N=" + std::to_string(n);
            table.rows.push_back({point, "mean_abs_sinr_gap", gap.mean(), gap.stderr_of_mean(), st.trials, st.excluded});
            table.rows.push_back({point, "sum_rate_finite_bits", nats2bits(finite_rate), kNaN, st.trials, st.excluded});
            table.rows.push_back({point, "sum_rate_limit_bits", nats2bits(plan_sum_rate(plan)), kNaN, 0, 0});
            table.rows.push_back({point, "fixed_point_rel_gap", fp_gap, kNaN, 0, 0});
        }
        table.files.emplace_back("finite.csv", body);
    } else if (exp == "prob-sched") {
        std::string body = "snr_db,N,pattern,utility,sum_rate_limit_bits,sum_rate_finite_bits,trials,excluded\n";
        for (double snr : cfg.get_doubles("snr_db")) {
            for (const auto& u : cfg.get_strings("utility")) {
                std::vector<double> limit_avg(cfg.get_ints("N").size(), 0.0), finite_avg(limit_avg.size(), 0.0);
                std::vector<long> used(limit_avg.size(), 0), dropped(limit_avg.size(), 0);
                for (int pattern = 1; pattern <= 2; ++pattern) {
                    const LsProblem problem = ls_problem(cfg, pattern, snr);
                    const FractionPlan plan = plan_for(cfg, problem, u);
                    const auto ns = cfg.get_ints("N");
                    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
                        const FiniteSinrStats st = simulate_finite_sinr(problem, plan.gamma, plan.sinr, ns[ni],
                                                                        cfg.trials(), cfg.seed(),
                                                                        FiniteSelection::probabilistic);
                        double finite = 0.0;
                        for (const auto& g : st.mean_rate)
                            for (double r : g)
                                finite += r;
                        const double limit = plan_sum_rate(plan);
                        body += num(snr) + "," + std::to_string(ns[ni]) + "," + std::to_string(pattern) + "," + u + "," +
                                num(nats2bits(limit)) + "," + num(nats2bits(finite)) + "," + std::to_string(st.trials) +
                                "," + std::to_string(st.excluded) + "\n";
                        limit_avg[ni] += 0.5 * nats2bits(limit);
                        finite_avg[ni] += 0.5 * nats2bits(finite);
                        used[ni] += st.trials;
                        dropped[ni] += st.excluded;
                    }
                }
                const auto ns = cfg.get_ints("N");
                for (std::size_t ni = 0; ni < ns.size(); ++ni) {
                    const std::string point = "snr_db=" + num(snr) + ";N=" + std::to_string(ns[ni]);
                    table.rows.push_back({point, "sum_rate_" + u + "_finite_bits", finite_avg[ni], kNaN, used[ni], dropped[ni]});
                    table.rows.push_back({point, "sum_rate_" + u + "_limit_bits", limit_avg[ni], kNaN, 0, 0});
                }
            }
        }
        table.files.emplace_back("prob_sched.csv", body);
    } else {
        throw bad_key("experiment", "unknown experiment '" + exp + "'");
    }

    table.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

} // namespace jsdm
