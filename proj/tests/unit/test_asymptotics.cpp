#include "doctest.h"

#include "jsdm/asymptotics.hpp"
#include "jsdm/linalg.hpp"
#include "jsdm/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

using namespace jsdm;

namespace {

SinrSpectral diagonal_spectral(double a, double c, double rho)
{
    SinrSpectral s;
    s.a1 = CMatrix::Zero(2, 2);
    s.a2 = CMatrix::Zero(2, 2);
    s.a1(0, 0) = a;
    s.a2(1, 1) = c;
    s.rho = rho;
    return s;
}

CMatrix random_psd(int n, int rank, RngStream& rng)
{
    CMatrix a = CMatrix::Zero(n, n);
    for (int i = 0; i < rank; ++i) {
        const CVector v = rng.complex_normal(n);
        a += v * v.adjoint();
    }
    return a;
}

struct Setup {
    CMatrix u;
    RVector lambda;
    PrecoderStack stack;
};

Setup two_group_setup(RngStream& rng)
{
    Setup s;
    // rank 4 against 3 interfering beams, so a2 always leaves a null direction
    CMatrix a(8, 4);
    for (int j = 0; j < 4; ++j)
        a.col(j) = rng.complex_normal(8);
    s.u = orthonormalize(a);
    s.lambda = RVector(4);
    s.lambda << 3.0, 1.5, 0.5, 0.2;
    s.stack.pre_beamformers = {dft_columns(8, 0, 1), dft_columns(8, 4, 5)};
    s.stack.per_stream_power = 2.5;
    return s;
}

} // namespace

TEST_CASE("CCDF closed forms")
{
    SUBCASE("x = 0")
    {
        const auto s = diagonal_spectral(1.0, 1.0, 1.0);
        CHECK(sinr_ccdf(0.0, s).value == 1.0);
        CHECK_THROWS_AS(sinr_ccdf(-1.0, s), InvalidParameter);
    }
    SUBCASE("interference-free beam is exponential")
    {
        const auto s = diagonal_spectral(2.0, 0.0, 3.0);
        for (double x : {0.1, 1.0, 5.0, 20.0})
            CHECK(sinr_ccdf(x, s).value == doctest::Approx(std::exp(-x / 6.0)).epsilon(1e-12));
    }
    SUBCASE("one interferer: a/(a + x c) exp(-x/(rho a))")
    {
        const double a = 1.3, c = 0.7, rho = 2.0;
        const auto s = diagonal_spectral(a, c, rho);
        for (double x : {0.2, 1.0, 4.0})
            CHECK(sinr_ccdf(x, s).value == doctest::Approx(a / (a + x * c) * std::exp(-x / (rho * a))).epsilon(1e-10));
    }
    SUBCASE("no positive eigenvalue")
    {
        SinrSpectral s = diagonal_spectral(0.0, 1.0, 1.0);
        CHECK(sinr_ccdf(1.0, s).value == 0.0);
    }
}

TEST_CASE("CCDF against the sampled beam SINR")
{
    RngStream rng(11);
    const Setup su = two_group_setup(rng);
    const SinrSpectral spec = build_a_matrices(su.u, su.lambda, su.stack, 0, 0);
    const CMatrix scaled = su.u * su.lambda.cwiseSqrt().cast<cplx>().asDiagonal();
    const int samples = 40000;
    std::vector<double> sinr(samples);
    for (int i = 0; i < samples; ++i)
        sinr[static_cast<std::size_t>(i)] = beam_sinr(scaled * rng.complex_normal(4), su.stack, 0, 0);
    for (double x : {0.5, 2.0, 8.0}) {
        double hits = 0;
        for (double v : sinr)
            hits += v > x ? 1 : 0;
        const double p = sinr_ccdf(x, spec).value;
        const double sigma = std::sqrt(std::max(p * (1 - p), 1e-4) / samples);
        CHECK(std::abs(hits / samples - p) < 4 * sigma);
    }
}

TEST_CASE("CCDF is a tail probability")
{
    RngStream rng(12);
    for (int t = 0; t < 10; ++t) {
        SinrSpectral s;
        s.a1 = random_psd(4, 1, rng);
        s.a2 = random_psd(4, 3, rng);
        s.rho = rng.uniform(0.5, 5.0);
        double prev = 1.0;
        for (double x = 0.0; x < 30.0; x += 0.5) {
            const double v = sinr_ccdf(x, s).value;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(v <= prev + 1e-12);
            prev = v;
        }
    }
}

TEST_CASE("residues agree with the inversion integral")
{
    RngStream rng(13);
    for (int t = 0; t < 6; ++t) {
        SinrSpectral s;
        s.a1 = random_psd(3, 1, rng);
        s.a2 = random_psd(3, 2, rng);
        s.rho = 2.0;
        for (double x : {0.3, 1.0, 3.0}) {
            const auto r = sinr_ccdf(x, s);
            REQUIRE_FALSE(r.used_contour);
            CHECK(std::abs(sinr_ccdf_contour(x, s, s.contour_offset(x)) - r.value) < 1e-4);
        }
    }
}

TEST_CASE("single positive eigenvalue")
{
    RngStream rng(14);
    const Setup su = two_group_setup(rng);
    const std::vector<double> grid{0.0, 0.1, 1.0, 10.0, 100.0};
    for (int g = 0; g < 2; ++g)
        for (int m = 0; m < 2; ++m) {
            const auto rep = lemma_checks(build_a_matrices(su.u, su.lambda, su.stack, g, m), grid);
            CHECK(rep.ok);
            CHECK(rep.min_leading > 0.0);
            CHECK(rep.max_trailing <= 1e-10);
        }
    SUBCASE("rank-2 signal breaks it")
    {
        SinrSpectral s;
        s.a1 = CMatrix::Identity(2, 2);
        s.a2 = CMatrix::Zero(2, 2);
        const auto rep = lemma_checks(s, grid);
        CHECK_FALSE(rep.ok);
        REQUIRE(rep.violation);
        CHECK(rep.violation->index == 2);
        CHECK(rep.violation->x == 0.0);
        CHECK_FALSE(rep.describe().empty());
    }
    SUBCASE("zero signal")
    {
        SinrSpectral s;
        s.a1 = CMatrix::Zero(2, 2);
        s.a2 = CMatrix::Identity(2, 2);
        const auto rep = lemma_checks(s, grid);
        REQUIRE(rep.violation);
        CHECK(rep.violation->index == 1);
    }
    CHECK_THROWS_AS(lemma_checks(diagonal_spectral(1, 1, 1), std::vector<double>{-1.0}), InvalidParameter);
}

TEST_CASE("growth function")
{
    SUBCASE("no interference: constant rho a")
    {
        const auto s = diagonal_spectral(1.7, 0.0, 2.0);
        for (double x : {0.5, 10.0, 1e3})
            CHECK(growth_function(s, x) == doctest::Approx(3.4).epsilon(1e-6));
    }
    SUBCASE("one interferer against 1 / (c/(a + x c) + 1/(rho a))")
    {
        const double a = 1.3, c = 0.7, rho = 2.0;
        const auto s = diagonal_spectral(a, c, rho);
        for (double x : {1.0, 1e3, 1e4}) {
            const double oracle = 1.0 / (c / (a + x * c) + 1.0 / (rho * a));
            CHECK(growth_function(s, x) == doctest::Approx(oracle).epsilon(1e-6));
        }
        const auto lim = growth_limit(s);
        CHECK(lim.plateau == doctest::Approx(rho * s.mu_star()).epsilon(1e-5));
        CHECK(s.mu_star() == doctest::Approx(a));
        CHECK(lim.samples.size() == 6);
    }
    SUBCASE("no plateau")
    {
        // a2 covers the signal direction, so g(x) keeps shrinking
        SinrSpectral s;
        s.a1 = CMatrix::Zero(2, 2);
        s.a1(0, 0) = 1.0;
        s.a2 = CMatrix::Identity(2, 2);
        s.rho = 1.0;
        CHECK(s.mu_star() == 0.0);
        CHECK_THROWS_AS(growth_limit(s), NumericalFailure);
    }
}

TEST_CASE("scaling exponent and converse bound")
{
    const std::vector<GroupSpectrum> three{{3, RVector::Ones(3)}, {3, RVector::Ones(3)}, {3, RVector::Ones(3)}};
    CHECK(scaling_beta(8, three) == 8);
    CHECK(scaling_beta(12, three) == 9);

    const double kp = 1e4;
    CHECK(theorem1_upper_bound(12, three, 10.0, kp) ==
          doctest::Approx(9.0 * (std::log(std::log(kp)) + std::log(10.0 / 9.0))));

    std::vector<GroupSpectrum> big = three;
    big[1].eigvals << 2.0, 1.0, 0.5;
    CHECK(theorem1_upper_bound(8, big, 10.0, kp) ==
          doctest::Approx(8.0 * std::log(2.0) + 8.0 * std::log(10.0 / 8.0) + 8.0 * std::log(std::log(kp))));
    CHECK(theorem1_upper_bound(12, big, 10.0, kp) ==
          doctest::Approx(std::log(2.0) + std::log(0.5) + 9.0 * (std::log(std::log(kp)) + std::log(10.0 / 9.0))));

    CHECK_THROWS_AS(theorem1_upper_bound(8, three, 10.0, 1.5), InvalidParameter);
    const std::vector<GroupSpectrum> bad{{2, RVector::Ones(3)}};
    CHECK_THROWS_AS(theorem1_upper_bound(8, bad, 10.0, kp), InvalidParameter);

    const std::vector<double> kps{10.0, 100.0, 1000.0};
    const auto rep = theorem1_bounds(12, three, 10.0, kps);
    CHECK(rep.beta == 9);
    REQUIRE(rep.rows.size() == 3);
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        CHECK(rep.rows[i].upper_bound > rep.rows[i - 1].upper_bound);

    std::ostringstream os;
    write_scaling_csv(os, rep);
    const std::string text = os.str();
    CHECK(text.substr(0, text.find('\n')) == "Kprime,upper_bound,prediction,mc_mean,mc_stderr");
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("extreme value quantile")
{
    const double theta = 1.7;
    auto ccdf = [&](double x) { return std::exp(-x / theta); };
    double prev = 0.0;
    for (double kp : {10.0, 1e3, 1e6}) {
        const auto ev = extreme_value_prediction(ccdf, kp, theta);
        CHECK(ev.quantile == doctest::Approx(theta * std::log(kp)).epsilon(1e-7));
        CHECK(ev.first_order == doctest::Approx(theta * std::log(kp)));
        CHECK(ev.quantile > prev);
        prev = ev.quantile;
    }
    CHECK_THROWS_AS(extreme_value_prediction(ccdf, 1.0), InvalidParameter);
    CHECK_THROWS_AS(extreme_value_prediction([](double) { return 1.0; }, 10.0), NumericalFailure);
}

TEST_CASE("least-squares slope")
{
    const std::vector<double> x{1, 2, 3, 4, 5};
    std::vector<double> y;
    for (double v : x)
        y.push_back(2.0 * v + 1.0);
    CHECK(fitted_slope(x, y) == doctest::Approx(2.0));
    y = {1, 3, 2, 5, 4};
    // sxy / sxx = 8 / 10
    CHECK(fitted_slope(x, y) == doctest::Approx(0.8));
}
