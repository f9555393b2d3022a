#include "doctest.h"

#include "jsdm/largesystem.hpp"

#include <cmath>
#include <sstream>
#include <vector>

using namespace jsdm;

namespace {

LsSubgroup flat_subgroup(double lo, double hi, double amp)
{
    LsSubgroup s;
    s.lo = lo;
    s.hi = hi;
    s.amplitude = amp;
    return s;
}

LsProblem flat_single(double lo, double hi, double amp, int streams)
{
    LsProblem p;
    p.antennas = 8;
    p.shape = SpectrumShape::flat;
    p.total_power = 10.0;
    p.groups.push_back({-0.25, 0.25, streams, {flat_subgroup(lo, hi, amp)}});
    return p;
}

UserProfile profile_deg(double theta, double delta) { return {deg2rad(theta), deg2rad(delta)}; }

LsProblem sector_problem()
{
    std::vector<UserProfile> users;
    for (double t : {-50.0, -20.0, 5.0, 30.0, 55.0})
        users.push_back(profile_deg(t, 10.0));
    return LsProblem::from_profiles(8, 0.5, 10.0, users, 2, 1, 4);
}

} // namespace

TEST_CASE("unloaded solution")
{
    const LsProblem p = flat_single(-0.1, 0.15, 2.0, 4);
    const auto sol = solve_fixed_point(p, zero_fractions(p));
    // kappa * a * |support| = 2 * 0.25 / 0.5
    CHECK(sol.m0[0][0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.zeta0_sq[0] == 0.0);
    CHECK(sol.sinr0[0][0] == 0.0);
}

TEST_CASE("flat closed form m = a (w - gamma / b)")
{
    const double a = 1.5;
    const LsProblem p = flat_single(-0.2, 0.2, a, 2); // covers w = 0.8 of the window
    for (double g : {0.2, 0.8, 1.0}) {
        const Fractions gamma{{g}};
        const auto sol = solve_fixed_point(p, gamma);
        CHECK(sol.m0[0][0] == doctest::Approx(a * (0.8 - g / 2.0)).epsilon(1e-8));
        CHECK(sol.residual <= 1e-9);
    }
}

TEST_CASE("load beyond coverage is infeasible")
{
    const LsProblem p = flat_single(-0.2, 0.05, 1.0, 1); // w = 0.5
    CHECK_NOTHROW(solve_fixed_point(p, Fractions{{0.4}}));
    CHECK_THROWS_AS(solve_fixed_point(p, Fractions{{0.6}}), Infeasible);

    LsProblem two = p;
    two.groups[0].streams = 2;
    two.groups[0].subgroups.push_back(flat_subgroup(-0.1, 0.0, 1.0));
    // jointly they cover 0.5, separately 0.5 and 0.2
    CHECK_THROWS_AS(solve_fixed_point(two, Fractions{{0.1, 0.5}}), Infeasible);
    try {
        solve_fixed_point(two, Fractions{{0.1, 0.5}});
    } catch (const Infeasible& e) {
        CHECK(std::string(e.what()).find("subgroups {2}") != std::string::npos);
    }
}

TEST_CASE("fraction validation")
{
    const LsProblem p = flat_single(-0.2, 0.2, 1.0, 1);
    CHECK_THROWS_AS(solve_fixed_point(p, Fractions{{1.2}}), InvalidParameter);
    CHECK_THROWS_AS(solve_fixed_point(p, Fractions{{-0.1}}), InvalidParameter);
    CHECK_THROWS_AS(solve_fixed_point(p, Fractions{}), InvalidParameter);
}

TEST_CASE("density through a window")
{
    LsProblem p;
    p.groups.push_back({-0.25, 0.25, 4, {LsSubgroup::one_ring(profile_deg(0.0, 10.0), 0.5)}});
    p.groups.push_back({0.25, 0.75, 4, {}});
    const double half = 0.5 * std::sin(deg2rad(10.0));
    CHECK(f_function(p, 0, 0, 0, 0.0) == doctest::Approx(1.0 / (2.0 * deg2rad(10.0) * 0.5)));
    CHECK(f_function(p, 0, 0, 0, half * 0.5) ==
          doctest::Approx(1.0 / (2.0 * deg2rad(10.0)) / std::sqrt(0.25 - half * half * 0.25)));
    CHECK(f_function(p, 0, 0, 0, half * 1.1) == 0.0);
    CHECK(f_function(p, 0, 0, 1, 0.0) == 0.0);
    CHECK_THROWS_AS(f_function(p, 0, 0, 0, 0.5), InvalidParameter);

    SUBCASE("wrapped window")
    {
        LsProblem q;
        q.shape = SpectrumShape::flat;
        q.groups.push_back({-0.2, 0.2, 1, {flat_subgroup(-0.45, -0.35, 1.0)}});
        q.groups.push_back({0.3, 0.7, 1, {}});
        const auto iv = overlap_intervals(q, 0, 0, 1);
        REQUIRE(iv.size() == 1);
        CHECK(iv[0].lo == doctest::Approx(-0.45));
        CHECK(iv[0].hi == doctest::Approx(-0.35));
        CHECK(overlap_intervals(q, 0, 0, 0).empty());
        CHECK(f_function(q, 0, 0, 1, -0.4) == 1.0);
    }
}

TEST_CASE("SINR limit without crosstalk")
{
    SUBCASE("one group")
    {
        const LsProblem p = flat_single(-0.2, 0.2, 1.0, 2);
        const auto sol = solve_fixed_point(p, Fractions{{0.6}});
        CHECK(sol.sinr0[0][0] == doctest::Approx(sol.zeta0_sq[0] * 10.0 / 0.6));
    }
    SUBCASE("disjoint windows")
    {
        LsProblem p;
        p.shape = SpectrumShape::flat;
        p.total_power = 5.0;
        p.groups.push_back({-0.3, -0.1, 2, {flat_subgroup(-0.28, -0.12, 1.0)}});
        p.groups.push_back({0.1, 0.3, 2, {flat_subgroup(0.12, 0.28, 2.0)}});
        const Fractions gamma{{0.5}, {0.7}};
        const auto sol = solve_fixed_point(p, gamma);
        CHECK(sol.upsilon[1][0][0] == 0.0);
        CHECK(sol.upsilon[0][1][0] == 0.0);
        for (int g = 0; g < 2; ++g)
            CHECK(sol.sinr0[g][0] == doctest::Approx(sol.zeta0_sq[g] * 5.0 / 1.2));
        CHECK(sinr_limit(sol, 5.0, 1.2) == sol.sinr0);
    }
}

TEST_CASE("one-ring solutions are well formed")
{
    const LsProblem p = sector_problem();
    Fractions gamma = zero_fractions(p);
    for (auto& g : gamma)
        for (auto& x : g)
            x = 0.4;
    const auto sol = solve_fixed_point(p, gamma);
    CHECK(sol.residual <= 1e-9);
    for (std::size_t g = 0; g < gamma.size(); ++g) {
        CHECK(sol.gamma0[g] >= 0.0);
        CHECK(sol.zeta0_sq[g] >= 0.0);
        for (double m : sol.m0[g])
            CHECK(m > 0.0);
        for (std::size_t h = 0; h < gamma.size(); ++h)
            for (double u : sol.upsilon[g][h])
                CHECK(u >= 0.0);
    }

    FixedPointOptions fine;
    fine.quadrature_nodes = 4096;
    const auto sol2 = solve_fixed_point(p, gamma, SolveMode::continuous(), fine);
    for (std::size_t g = 0; g < gamma.size(); ++g)
        for (std::size_t k = 0; k < gamma[g].size(); ++k)
            CHECK(std::abs(sol2.sinr0[g][k] - sol.sinr0[g][k]) <= 1e-6 * std::max(1.0, sol.sinr0[g][k]));
}

TEST_CASE("network utility")
{
    const std::vector<double> zeros{0.0, 0.0};
    CHECK(network_utility(zeros, Utility::sumrate) == 0.0);
    CHECK(network_utility(zeros, Utility::pfs, 1e-12) == doctest::Approx(2.0 * std::log(1e-12)));
    const std::vector<double> r{0.5, 2.0, 3.0};
    CHECK(network_utility(r, Utility::sumrate) == doctest::Approx(5.5));
    CHECK(network_utility(r, Utility::pfs) == doctest::Approx(std::log(3.0)));
    const std::vector<double> eq(4, 0.7);
    CHECK(network_utility(eq, Utility::pfs) == doctest::Approx(4.0 * std::log(0.7)));
}

TEST_CASE("greedy on a single subgroup follows the utility curve")
{
    const LsProblem p = flat_single(-0.2, 0.2, 1.0, 2);
    const double step = 0.05;
    for (Utility kind : {Utility::pfs, Utility::sumrate}) {
        const auto plan = greedy_fractions(p, kind, step, true);
        // walk the grid directly; the greedy stops at the first step that does not help
        auto value = [&](int j) {
            if (j == 0)
                return network_utility(std::vector<double>{0.0}, kind);
            const double g = j * step;
            const auto sol = solve_fixed_point(p, Fractions{{g}});
            return network_utility(std::vector<double>{g * std::log1p(sol.sinr0[0][0])}, kind);
        };
        int j = 0;
        while ((j + 1) * step <= 1.0 + 1e-9 && (j + 1) * step < 0.8 * 2 - 1e-9 && value(j + 1) > value(j))
            ++j;
        CHECK(std::abs(plan.gamma[0][0] - j * step) <= step + 1e-12);
        CHECK(plan.trace.front().load == 0.0);
        for (std::size_t i = 1; i < plan.trace.size(); ++i) {
            CHECK(plan.trace[i].objective > plan.trace[i - 1].objective);
            CHECK(plan.trace[i].load == doctest::Approx(i * step));
        }
    }
    CHECK_THROWS_AS(greedy_fractions(p, Utility::pfs, 0.0, true), InvalidParameter);
    CHECK_THROWS_AS(greedy_fractions(p, Utility::pfs, 0.2, true), InvalidParameter);
}

TEST_CASE("greedy plans respect the budgets")
{
    const LsProblem p = sector_problem();
    const auto plan = greedy_fractions(p, Utility::pfs, 0.05, false);
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        double s = 0.0;
        for (double x : plan.gamma[g]) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0 + 1e-9);
            s += x;
        }
        CHECK(s <= p.groups[g].streams + 1e-9);
    }
    // the plan must itself be solvable
    CHECK_NOTHROW(solve_fixed_point(p, plan.gamma));

    std::ostringstream a, b;
    write_plan_csv(a, p, plan);
    write_trace_csv(b, plan);
    CHECK(a.str().substr(0, a.str().find('\n')) == "group,subgroup,theta_deg,delta_deg,gamma,rate_norm");
    CHECK(b.str().substr(0, b.str().find('\n')) == "iter,S,objective");
}

TEST_CASE("scheduled users and window indices")
{
    CHECK(scheduled_users(0.25, 2) == 1); // 0.5 rounds up
    CHECK(scheduled_users(0.24, 2) == 0);
    CHECK(scheduled_users(0.0, 10) == 0);
    CHECK(scheduled_users(1.0, 7) == 7);
    CHECK(scheduled_users(0.35, 10) == 4);

    const LsGroup g{-0.25, 0.25, 4, {}};
    CHECK(window_indices(g, 8, 1) == std::pair<int, int>{-2, 1});
    CHECK(window_indices(g, 8, 4) == std::pair<int, int>{-8, 7});
    const LsGroup tiny{0.0, 0.01, 1, {}};
    CHECK_THROWS_AS(window_indices(tiny, 8, 1), InvalidParameter);
}

TEST_CASE("problem validation")
{
    LsProblem p = flat_single(-0.2, 0.2, 1.0, 1);
    p.groups[0].subgroups[0].lo = 0.3;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = flat_single(-0.2, 0.2, 1.0, 1);
    p.groups[0].window_hi = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    p = flat_single(-0.2, 0.2, 1.0, 1);
    p.groups.clear();
    CHECK_THROWS_AS(p.validate(), InvalidParameter);
    CHECK(sector_problem().num_subgroups() == 5);
}
