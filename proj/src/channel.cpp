// SPDX-License-Identifier: Apache-2.0
#include "jsdm/channel.hpp"
#include "jsdm/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace jsdm {

void SystemGeometry::validate() const
{
    if (num_antennas < 1)
        throw InvalidParameter("number of antennas must be at least 1");
    if (!(antenna_spacing > 0.0))
        throw InvalidParameter("antenna spacing must be positive");
    if (!(total_power > 0.0))
        throw InvalidParameter("total power must be positive");
}

void UserProfile::validate() const
{
    if (!(spread > 0.0))
        throw InvalidParameter("angular spread must be positive");
    if (!(std::abs(aoa) < pi / 2))
        throw InvalidParameter("angle of arrival must lie in (-90, 90) degrees");
}

CMatrix one_ring_covariance(const UserProfile& profile, const SystemGeometry& geom)
{
    profile.validate();
    geom.validate();
    const int m = geom.num_antennas;
    const double lo = profile.aoa - profile.spread;
    const double hi = profile.aoa + profile.spread;

    // Entry (m, p) only depends on d = m - p; compute one column of lags.
    CVector lag(m);
    lag(0) = 1.0;
    for (int d = 1; d < m; ++d) {
        const double omega = 2.0 * pi * geom.antenna_spacing * d;
        // 256 nodes per panel; split when the phase sweeps too many cycles.
        const double sweep = omega * (std::sin(std::min(hi, pi / 2)) - std::sin(std::max(lo, -pi / 2)));
        const int panels = 1 + static_cast<int>(std::abs(sweep) / 100.0);
        const QuadratureRule q = composite_gauss_legendre(lo, hi, 256, panels);
        cplx acc = 0.0;
        for (Eigen::Index i = 0; i < q.nodes.size(); ++i)
            acc += q.weights(i) * std::polar(1.0, -omega * std::sin(q.nodes(i)));
        lag(d) = acc / (2.0 * profile.spread);
    }

    CMatrix r(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j)
            r(i, j) = i >= j ? lag(i - j) : std::conj(lag(j - i));
    }
    return r;
}

CovarianceModel eigendecompose(const CMatrix& matrix, const RankPolicy& policy)
{
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
        throw InvalidParameter("eigendecompose: expected a non-empty square matrix");
    if (hermitian_asymmetry(matrix) > 1e-9)
        throw InvalidParameter("eigendecompose: matrix is not Hermitian");

    const auto eig = hermitian_eig(matrix);
    const double lmax = eig.values(0);
    if (!(lmax > 0.0))
        throw InvalidParameter("eigendecompose: matrix has no positive eigenvalue");

    int r = 0;
    while (r < eig.values.size() && eig.values(r) > 1e-10 * lmax)
        ++r;

    CovarianceModel out;
    out.matrix = matrix;
    out.rank = r;
    out.eigvals = eig.values.head(r);
    out.eigvecs = eig.vectors.leftCols(r);

    switch (policy.kind) {
    case RankPolicy::Kind::full:
        out.dominant_rank = r;
        break;
    case RankPolicy::Kind::energy: {
        if (!(policy.energy_fraction > 0.0 && policy.energy_fraction <= 1.0))
            throw InvalidParameter("eigendecompose: energy fraction must lie in (0, 1]");
        const double total = out.eigvals.sum();
        double acc = 0.0;
        int k = 0;
        while (k < r) {
            acc += out.eigvals(k++);
            if (acc >= policy.energy_fraction * total * (1.0 - 1e-12))
                break;
        }
        out.dominant_rank = k;
        break;
    }
    case RankPolicy::Kind::fixed:
        if (policy.fixed_rank < 1 || policy.fixed_rank > r)
            throw InvalidParameter("eigendecompose: fixed dominant rank " + std::to_string(policy.fixed_rank) +
                                   " outside [1, " + std::to_string(r) + "]");
        out.dominant_rank = policy.fixed_rank;
        break;
    }
    out.dominant_eigvecs = out.eigvecs.leftCols(out.dominant_rank);
    return out;
}

CVector channel_from_innovation(const CovarianceModel& cov, const CVector& w)
{
    if (w.size() != cov.rank)
        throw InvalidParameter("channel_from_innovation: innovation length must equal the covariance rank");
    return cov.eigvecs * (cov.eigvals.array().sqrt().matrix().cast<cplx>().asDiagonal() * w);
}

ChannelVector sample_channel(const CovarianceModel& cov, RngStream& rng)
{
    ChannelVector h;
    h.innovation = rng.complex_normal(cov.rank);
    h.coeffs = channel_from_innovation(cov, h.innovation);
    return h;
}

double dft_eigenvalue(const UserProfile& profile, double spacing, double x)
{
    return 1.0 / (2.0 * profile.spread * std::sqrt(spacing * spacing - x * x));
}

DftSupport dft_support(const UserProfile& profile, const SystemGeometry& geom, int scale)
{
    if (!(profile.spread >= 0.0) || !(std::abs(profile.aoa) + profile.spread < pi / 2))
        throw InvalidParameter("dft_support: need |aoa| + spread < 90 degrees");
    if (scale < 1)
        throw InvalidParameter("dft_support: scale factor must be at least 1");
    geom.validate();
    const double size = static_cast<double>(geom.num_antennas) * scale;
    const double d = geom.antenna_spacing;
    // Snap values that sit on an integer up to rounding noise, so a vanishing
    // spread at aoa 0 gives the single index 0.
    const double lo = -size * d * std::sin(profile.aoa + profile.spread);
    const double hi = -size * d * std::sin(profile.aoa - profile.spread);
    DftSupport s;
    s.lower = static_cast<int>(std::floor(lo + 1e-9));
    s.upper = static_cast<int>(std::ceil(hi - 1e-9));
    if (s.upper < s.lower)
        s.upper = s.lower;
    if (s.lower <= -size / 2 || s.upper > size / 2)
        throw InvalidParameter("dft_support: support [" + std::to_string(s.lower) + ", " + std::to_string(s.upper) +
                               "] leaves the frequency range (-MN/2, MN/2]");
    s.eigvals_approx.resize(s.size());
    for (int i = s.lower; i <= s.upper; ++i)
        s.eigvals_approx(i - s.lower) = dft_eigenvalue(profile, d, i / size);
    return s;
}

void write_covariance(std::ostream& os, const CovarianceRecord& rec)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g\n", rec.num_antennas, rec.spacing, rec.aoa_deg,
                  rec.spread_deg);
    os << buf;
    for (Eigen::Index i = 0; i < rec.matrix.rows(); ++i) {
        for (Eigen::Index j = 0; j < rec.matrix.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rec.matrix(i, j).real(), rec.matrix(i, j).imag());
            os << buf;
        }
    }
}

CovarianceRecord read_covariance(std::istream& is)
{
    CovarianceRecord rec;
    std::string line;
    if (!std::getline(is, line))
        throw InvalidParameter("covariance file: missing header");
    std::istringstream header(line);
    if (!(header >> rec.num_antennas >> rec.spacing >> rec.aoa_deg >> rec.spread_deg) || rec.num_antennas < 1)
        throw InvalidParameter("covariance file: malformed header '" + line + "'");
    const int m = rec.num_antennas;
    rec.matrix.resize(m, m);
    for (int k = 0; k < m * m; ++k) {
        if (!std::getline(is, line))
            throw InvalidParameter("covariance file: expected " + std::to_string(m * m) + " entries, got " +
                                   std::to_string(k));
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw InvalidParameter("covariance file: entry '" + line + "' is not 're,im'");
        try {
            rec.matrix(k / m, k % m) = cplx(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw InvalidParameter("covariance file: entry '" + line + "' is not numeric");
        }
    }
    return rec;
}

} // namespace jsdm
