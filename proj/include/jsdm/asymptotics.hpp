// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/beamforming.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace jsdm {

// SINR of beam m of group g for a user h = U Lambda^{1/2} w exceeds x iff
// w^H (a1 - x a2) w > x / rho.
struct SinrSpectral {
    CMatrix a1;
    CMatrix a2;
    double rho = 1.0;

    // Eigenvalues of a1 - x a2, descending.
    RVector mu(double x) const;
    // lim_{x->inf} of the leading eigenvalue: a1 restricted to the null space of a2.
    double mu_star() const;
    // Offset of the inversion contour, 1 / (2 mu_1(x)).
    double contour_offset(double x) const;
};

SinrSpectral build_a_matrices(const CMatrix& eigvecs, const RVector& eigvals, const PrecoderStack& stack, int g, int m);

struct CcdfValue {
    double value = 0.0;
    bool used_contour = false;
    double offset = 0.0; // contour offset when used
};

// P(SINR > x). Residue sum over positive eigenvalues; falls back to the
// contour integral when the positive eigenvalues are not well separated.
CcdfValue sinr_ccdf(double x, const SinrSpectral& spectral);

// Direct numerical inversion along Re(s) = offset (0 < offset < 1/mu_1).
double sinr_ccdf_contour(double x, const SinrSpectral& spectral, double offset);

struct LemmaViolation {
    double x = 0.0;
    int index = 0; // 1-based eigenvalue index
    double value = 0.0;
};

struct LemmaReport {
    bool ok = true;
    double min_leading = 0.0;   // smallest mu_1 over the grid
    double max_trailing = 0.0;  // largest mu_i, i >= 2, over the grid
    std::optional<LemmaViolation> violation;

    std::string describe() const;
};

LemmaReport lemma_checks(const SinrSpectral& spectral, std::span<const double> x_grid);

// (1 - F(x)) / f(x) through eigenvalue derivatives (central differences, step 1e-4 x).
double growth_function(const SinrSpectral& spectral, double x);

struct GrowthLimit {
    double plateau = 0.0;                           // approximates rho * mu_star
    std::vector<std::pair<double, double>> samples; // (x, g(x)) per decade
};

GrowthLimit growth_limit(const SinrSpectral& spectral);

struct GroupSpectrum {
    int rank = 0;
    RVector eigvals;
};

int scaling_beta(int m, std::span<const GroupSpectrum> groups);

// Converse bound on the sum capacity (nats) at K' users per group.
double theorem1_upper_bound(int m, std::span<const GroupSpectrum> groups, double total_power, double kprime);

struct ScalingRow {
    double kprime = 0.0;
    double upper_bound = 0.0;
    double prediction = 0.0;
    double mc_mean = 0.0;
    double mc_stderr = 0.0;
};

struct ScalingReport {
    int beta = 0;
    std::vector<ScalingRow> rows;
};

ScalingReport theorem1_bounds(int m, std::span<const GroupSpectrum> groups, double total_power,
                              std::span<const double> kprimes);

void write_scaling_csv(std::ostream& os, const ScalingReport& report);

struct ExtremeValue {
    double quantile = 0.0;    // u with 1 - F(u) = 1/K'
    double first_order = 0.0; // rho mu_star log K'
};

ExtremeValue extreme_value_prediction(const std::function<double(double)>& ccdf, double kprime,
                                      double rho_mu_star = 0.0);

// Least-squares slope of y against x.
double fitted_slope(std::span<const double> x, std::span<const double> y);

} // namespace jsdm
