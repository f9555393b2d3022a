// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace jsdm {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Scalar>
double real_part(const Scalar& s) { return std::real(s); }

template <typename Scalar>
double imag_part(const Scalar& s) { return std::imag(s); }

inline double round_to(double v, double q) { return std::round(v / q) * q; }

} // namespace detail

template <typename Derived>
double hermitian_asymmetry(const Eigen::MatrixBase<Derived>& a)
{
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

// Scale each column so that its largest-magnitude entry (first one on ties)
// is real and positive. Makes eigenvector output reproducible.
template <typename Scalar>
void normalize_phase(Mat<Scalar>& v)
{
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double peak = v.col(j).cwiseAbs().maxCoeff();
        if (peak == 0.0)
            continue;
        Eigen::Index pivot = 0;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, j)) >= peak * (1.0 - 1e-12)) {
                pivot = i;
                break;
            }
        }
        const Scalar p = v(pivot, j);
        v.col(j) *= Scalar(std::abs(p)) / p;
    }
}

template <typename Scalar>
struct HermitianEig {
    RVector values;      // descending
    Mat<Scalar> vectors; // columns match values
};

// Eigen-decomposition of a Hermitian matrix with a reproducible ordering:
// eigenvalues descending; within a cluster of equal eigenvalues (within
// `tie_tol` relative) columns are ordered lexicographically, descending,
// on their entries rounded to 1e-12.
template <typename Derived>
HermitianEig<typename Derived::Scalar> hermitian_eig(const Eigen::MatrixBase<Derived>& a, double tie_tol = 1e-10)
{
    using Scalar = typename Derived::Scalar;
    Mat<Scalar> h = (a + a.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(h);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("hermitian_eig: eigen-solver did not converge");

    Mat<Scalar> vecs = solver.eigenvectors();
    normalize_phase(vecs);
    const RVector vals = solver.eigenvalues();
    const Eigen::Index n = vals.size();
    const double scale = n ? std::max(1.0, vals.cwiseAbs().maxCoeff()) : 1.0;

    auto lex_greater = [&](Eigen::Index x, Eigen::Index y) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double rx = detail::round_to(detail::real_part(vecs(i, x)), 1e-12);
            const double ry = detail::round_to(detail::real_part(vecs(i, y)), 1e-12);
            if (rx != ry)
                return rx > ry;
            const double ix = detail::round_to(detail::imag_part(vecs(i, x)), 1e-12);
            const double iy = detail::round_to(detail::imag_part(vecs(i, y)), 1e-12);
            if (ix != iy)
                return ix > iy;
        }
        return false;
    };

    // Solver output is ascending; walk it backwards and sort within clusters.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::reverse(order.begin(), order.end());
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t stop = start + 1;
        while (stop < order.size() && std::abs(vals(order[start]) - vals(order[stop])) <= tie_tol * scale)
            ++stop;
        std::stable_sort(order.begin() + static_cast<long>(start), order.begin() + static_cast<long>(stop), lex_greater);
        start = stop;
    }

    HermitianEig<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = vals(order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = vecs.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

// Orthonormal basis of the null space of `a` (columns), using singular values
// below rel_tol * sigma_max as zero.
template <typename Derived>
Mat<typename Derived::Scalar> null_space(const Eigen::MatrixBase<Derived>& a, double rel_tol = 1e-10)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = a.cols();
    if (a.rows() == 0)
        return Mat<Scalar>::Identity(n, n);
    Eigen::JacobiSVD<Mat<Scalar>> svd(a, Eigen::ComputeFullV);
    const RVector s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * smax)
            ++rank;
    Mat<Scalar> basis = svd.matrixV().rightCols(n - rank);
    normalize_phase(basis);
    return basis;
}

template <typename Derived>
Mat<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    Eigen::HouseholderQR<Mat<Scalar>> qr(a);
    return qr.householderQ() * Mat<Scalar>::Identity(a.rows(), a.cols());
}

struct QuadratureRule {
    RVector nodes;
    RVector weights;
};

// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

// Composite rule on [lo, hi]: `panels` equal panels, each with an
// n-point Gauss-Legendre rule.
QuadratureRule composite_gauss_legendre(double lo, double hi, int n, int panels = 1);

} // namespace jsdm
