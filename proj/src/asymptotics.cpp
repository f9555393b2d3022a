// SPDX-License-Identifier: Apache-2.0
#include "jsdm/asymptotics.hpp"
#include "jsdm/linalg.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace jsdm {

RVector SinrSpectral::mu(double x) const
{
    const CMatrix a = a1 - x * a2;
    RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>((a + a.adjoint()) / 2.0, Eigen::EigenvaluesOnly).eigenvalues();
    return ev.reverse();
}

double SinrSpectral::mu_star() const
{
    const CMatrix null = null_space(a2, 1e-9);
    if (null.cols() == 0)
        return 0.0;
    const CMatrix restricted = null.adjoint() * a1 * null;
    return Eigen::SelfAdjointEigenSolver<CMatrix>((restricted + restricted.adjoint()) / 2.0, Eigen::EigenvaluesOnly)
        .eigenvalues()
        .maxCoeff();
}

double SinrSpectral::contour_offset(double x) const { return 0.5 / mu(x)(0); }

SinrSpectral build_a_matrices(const CMatrix& u, const RVector& lambda, const PrecoderStack& stack, int g, int m)
{
    if (u.cols() != lambda.size())
        throw InvalidParameter("build_a_matrices: eigenbasis and eigenvalues disagree in size");
    const auto& bg = stack.pre_beamformers.at(static_cast<std::size_t>(g));
    if (m < 0 || m >= bg.cols())
        throw InvalidParameter("build_a_matrices: beam index out of range");
    const CMatrix scaled = u * lambda.cwiseSqrt().cast<cplx>().asDiagonal(); // U Lambda^{1/2}
    SinrSpectral s;
    s.rho = stack.per_stream_power;
    const CVector a = scaled.adjoint() * bg.col(m);
    s.a1 = a * a.adjoint();
    s.a2 = CMatrix::Zero(a.size(), a.size());
    for (Eigen::Index n = 0; n < bg.cols(); ++n) {
        if (n == m)
            continue;
        const CVector c = scaled.adjoint() * bg.col(n);
        s.a2 += c * c.adjoint();
    }
    for (int gp = 0; gp < stack.num_groups(); ++gp) {
        if (gp == g)
            continue;
        const CMatrix c = scaled.adjoint() * stack.pre_beamformers[static_cast<std::size_t>(gp)];
        s.a2 += c * c.adjoint();
    }
    return s;
}

double sinr_ccdf_contour(double x, const SinrSpectral& spectral, double offset)
{
    if (x <= 0.0)
        return 1.0;
    const RVector mu = spectral.mu(x);
    if (!(mu(0) > 0.0))
        return 0.0;
    const double t = x / spectral.rho;
    auto integrand = [&](double w) {
        const cplx s(offset, w);
        cplx denom = s;
        for (Eigen::Index i = 0; i < mu.size(); ++i)
            denom *= 1.0 - s * mu(i);
        return (std::exp(-s * t) / denom).real();
    };
    // Truncate at |omega| = 1e3 / mu_1 and split into panels of about one
    // oscillation period each so the adaptive rule never sees many cycles.
    const double limit = 1e3 / mu(0);
    const double period = 2.0 * pi / t;
    const int panels = std::max(1, static_cast<int>(std::ceil(limit / period)));
    double total = 0.0;
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    for (int p = 0; p < panels; ++p) {
        const double lo = limit * p / panels;
        const double hi = limit * (p + 1) / panels;
        total += Rule::integrate(integrand, lo, hi, 12, 1e-12);
    }
    return total / pi;
}

CcdfValue sinr_ccdf(double x, const SinrSpectral& spectral)
{
    if (x < 0.0)
        throw InvalidParameter("sinr_ccdf: x must be non-negative");
    if (x == 0.0)
        return {1.0, false, 0.0};
    const RVector mu = spectral.mu(x);
    const double scale = mu.cwiseAbs().maxCoeff();
    if (!(mu(0) > 1e-12 * scale) || scale == 0.0)
        return {0.0, false, 0.0};

    std::vector<double> positive;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (mu(i) > 1e-12 * scale)
            positive.push_back(mu(i));
    for (std::size_t i = 1; i < positive.size(); ++i) {
        if (positive[i - 1] - positive[i] <= 1e-9 * std::abs(mu(0))) {
            const double c = 0.5 / mu(0);
            return {sinr_ccdf_contour(x, spectral, c), true, c};
        }
    }

    const double t = x / spectral.rho;
    double value = 0.0;
    for (double mk : positive) {
        double prod = 1.0;
        bool skipped_self = false;
        for (Eigen::Index i = 0; i < mu.size(); ++i) {
            if (!skipped_self && mu(i) == mk) {
                skipped_self = true;
                continue;
            }
            if (std::abs(mu(i)) <= 1e-12 * scale)
                continue; // zero eigenvalues contribute 1
            prod *= 1.0 - mu(i) / mk;
        }
        value += std::exp(-t / mk) / prod;
    }
    return {std::clamp(value, 0.0, 1.0), false, 0.0};
}

std::string LemmaReport::describe() const
{
    std::ostringstream os;
    if (ok) {
        os << "lemmas hold: min leading eigenvalue " << min_leading << ", max trailing eigenvalue " << max_trailing;
    } else {
        os << "lemma violated at x = " << violation->x << ": eigenvalue " << violation->index << " = "
           << violation->value << (violation->index == 1 ? " is not positive" : " exceeds 1e-10");
    }
    return os.str();
}

LemmaReport lemma_checks(const SinrSpectral& spectral, std::span<const double> x_grid)
{
    LemmaReport r;
    r.min_leading = std::numeric_limits<double>::infinity();
    r.max_trailing = -std::numeric_limits<double>::infinity();
    for (double x : x_grid) {
        if (x < 0.0)
            throw InvalidParameter("lemma_checks: grid points must be non-negative");
        const RVector mu = spectral.mu(x);
        r.min_leading = std::min(r.min_leading, mu(0));
        if (!(mu(0) > 0.0) && !r.violation)
            r.violation = LemmaViolation{x, 1, mu(0)};
        for (Eigen::Index i = 1; i < mu.size(); ++i) {
            r.max_trailing = std::max(r.max_trailing, mu(i));
            if (mu(i) > 1e-10 && !r.violation)
                r.violation = LemmaViolation{x, static_cast<int>(i) + 1, mu(i)};
        }
    }
    r.ok = !r.violation.has_value();
    return r;
}

double growth_function(const SinrSpectral& spectral, double x)
{
    if (!(x > 0.0))
        throw InvalidParameter("growth_function: x must be positive");
    const double h = 1e-4 * x;
    const RVector mu = spectral.mu(x);
    const RVector d = (spectral.mu(x + h) - spectral.mu(x - h)) / (2.0 * h);
    const double m1 = mu(0);
    if (!(m1 > 0.0))
        throw NumericalFailure("growth_function: leading eigenvalue is not positive");
    const double rho = spectral.rho;
    double inv = 1.0 / (rho * m1) - x * d(0) / (rho * m1 * m1);
    for (Eigen::Index i = 1; i < mu.size(); ++i)
        inv += (mu(i) * d(0) - m1 * d(i)) / ((m1 - mu(i)) * m1);
    return 1.0 / inv;
}

GrowthLimit growth_limit(const SinrSpectral& spectral)
{
    GrowthLimit out;
    for (int e = 1; e <= 6; ++e) {
        const double x = std::pow(10.0, e);
        out.samples.emplace_back(x, growth_function(spectral, x));
    }
    const double last = out.samples.back().second;
    const double prev = out.samples[out.samples.size() - 2].second;
    const double drift = std::abs(last - prev) / std::abs(last);
    if (!(drift <= 1e-3)) {
        std::ostringstream os;
        os << "growth_limit: no plateau, relative drift " << drift << " over the last decade (g = " << prev << " -> "
           << last << ")";
        throw NumericalFailure(os.str());
    }
    out.plateau = last;
    return out;
}

int scaling_beta(int m, std::span<const GroupSpectrum> groups)
{
    int total = 0;
    for (const auto& g : groups)
        total += g.rank;
    return std::min(m, total);
}

double theorem1_upper_bound(int m, std::span<const GroupSpectrum> groups, double p, double kprime)
{
    if (!(kprime >= 2.0))
        throw InvalidParameter("theorem1_upper_bound: K' must be at least 2");
    if (groups.empty())
        throw InvalidParameter("theorem1_upper_bound: no groups");
    int total = 0;
    double logdet = 0.0;
    double lmax = 0.0;
    for (const auto& g : groups) {
        if (g.eigvals.size() != g.rank || (g.rank > 0 && !(g.eigvals.minCoeff() > 0.0)))
            throw InvalidParameter("theorem1_upper_bound: need rank-many positive eigenvalues per group");
        total += g.rank;
        logdet += g.eigvals.array().log().sum();
        if (g.rank > 0)
            lmax = std::max(lmax, g.eigvals.maxCoeff());
    }
    const double loglog = std::log(std::log(kprime));
    if (m > total)
        return logdet + total * (loglog + std::log(p / total));
    return m * std::log(lmax) + m * std::log(p / m) + m * loglog;
}

ScalingReport theorem1_bounds(int m, std::span<const GroupSpectrum> groups, double p, std::span<const double> kprimes)
{
    ScalingReport r;
    r.beta = scaling_beta(m, groups);
    for (double k : kprimes) {
        ScalingRow row;
        row.kprime = k;
        row.upper_bound = theorem1_upper_bound(m, groups, p, k);
        r.rows.push_back(row);
    }
    return r;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& report)
{
    os << "Kprime,upper_bound,prediction,mc_mean,mc_stderr\n";
    char buf[256];
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%.0f,%.10g,%.10g,%.10g,%.10g\n", row.kprime, row.upper_bound, row.prediction,
                      row.mc_mean, row.mc_stderr);
        os << buf;
    }
}

ExtremeValue extreme_value_prediction(const std::function<double(double)>& ccdf, double kprime, double rho_mu_star)
{
    if (!(kprime > 1.0))
        throw InvalidParameter("extreme_value_prediction: K' must exceed 1");
    const double target = 1.0 / kprime;
    double lo = 0.0;
    double hi = 1.0;
    while (ccdf(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e9)
            throw NumericalFailure("extreme_value_prediction: no bracket below x = 1e9");
    }
    while (hi - lo > 1e-8 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        (ccdf(mid) > target ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), rho_mu_star * std::log(kprime)};
}

double fitted_slope(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidParameter("fitted_slope: need at least two points of equal-length data");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

} // namespace jsdm
