// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/core.hpp"
#include "jsdm/random.hpp"

#include <iosfwd>
#include <vector>

namespace jsdm {

struct SystemGeometry {
    int num_antennas = 1;
    double antenna_spacing = 0.5; // in carrier wavelengths
    double total_power = 10.0;    // linear, unit noise variance

    void validate() const;
};

// Angles in radians.
struct UserProfile {
    double aoa = 0.0;
    double spread = 0.0;

    static UserProfile from_degrees(double aoa_deg, double spread_deg)
    {
        return {deg2rad(aoa_deg), deg2rad(spread_deg)};
    }
    void validate() const;
};

struct RankPolicy {
    enum class Kind { full, energy, fixed };
    Kind kind = Kind::energy;
    double energy_fraction = 0.95;
    int fixed_rank = 0;

    static RankPolicy full() { return {Kind::full, 1.0, 0}; }
    static RankPolicy energy(double eta) { return {Kind::energy, eta, 0}; }
    static RankPolicy fixed(int r) { return {Kind::fixed, 1.0, r}; }
};

struct CovarianceModel {
    CMatrix matrix;
    CMatrix eigvecs; // M x r
    RVector eigvals; // r, descending, all above the truncation floor
    int rank = 0;
    int dominant_rank = 0;
    CMatrix dominant_eigvecs; // M x r*

    CMatrix reconstruct() const { return eigvecs * eigvals.asDiagonal() * eigvecs.adjoint(); }
};

struct ChannelVector {
    CVector coeffs;
    CVector innovation;
};

struct DftSupport {
    int lower = 0;
    int upper = 0;
    RVector eigvals_approx; // one per index lower..upper

    int size() const { return upper - lower + 1; }
};

CMatrix one_ring_covariance(const UserProfile& profile, const SystemGeometry& geom);

CovarianceModel eigendecompose(const CMatrix& matrix, const RankPolicy& policy = RankPolicy::energy(0.95));

ChannelVector sample_channel(const CovarianceModel& cov, RngStream& rng);
CVector channel_from_innovation(const CovarianceModel& cov, const CVector& w);

// Large-array DFT approximation of a user's covariance on an (M*N)-point grid;
// `geom.num_antennas` is M and `scale` is N.
DftSupport dft_support(const UserProfile& profile, const SystemGeometry& geom, int scale = 1);

// Approximate eigenvalue at normalized frequency x = i/(MN).
double dft_eigenvalue(const UserProfile& profile, double spacing, double x);

struct CovarianceRecord {
    int num_antennas = 0;
    double spacing = 0.5;
    double aoa_deg = 0.0;
    double spread_deg = 0.0;
    CMatrix matrix;
};

void write_covariance(std::ostream& os, const CovarianceRecord& rec);
CovarianceRecord read_covariance(std::istream& is);

} // namespace jsdm
