// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/linalg.hpp"

#include <span>
#include <vector>

namespace jsdm {

// Column-orthonormal basis of a subspace of Scalar^M.
template <typename Scalar>
class BasicSubspace {
public:
    using Matrix = Mat<Scalar>;

    BasicSubspace() = default;

    explicit BasicSubspace(Matrix basis, double tol = 1e-10) : basis_(std::move(basis))
    {
        const Matrix gram = basis_.adjoint() * basis_;
        if ((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() > tol)
            throw InvalidParameter("Subspace: basis columns are not orthonormal");
    }

    // Span of arbitrary (full column rank) columns.
    static BasicSubspace span_of(const Matrix& columns) { return BasicSubspace(orthonormalize(columns)); }

    const Matrix& basis() const { return basis_; }
    Eigen::Index ambient_dim() const { return basis_.rows(); }
    Eigen::Index rank() const { return basis_.cols(); }
    Matrix projector() const { return basis_ * basis_.adjoint(); }

private:
    Matrix basis_;
};

using Subspace = BasicSubspace<cplx>;

template <typename Scalar>
double chordal_distance(const BasicSubspace<Scalar>& x, const BasicSubspace<Scalar>& y)
{
    if (x.ambient_dim() != y.ambient_dim())
        throw InvalidParameter("chordal_distance: ambient dimensions differ");
    const double cross = (x.basis().adjoint() * y.basis()).squaredNorm();
    // Clamp rounding noise; the value is a squared Frobenius norm.
    return std::max(0.0, static_cast<double>(x.rank() + y.rank()) - 2.0 * cross);
}

template <typename Scalar>
Mat<Scalar> mean_projector(std::span<const BasicSubspace<Scalar>> list)
{
    if (list.empty())
        throw InvalidParameter("subspace_mean: empty list");
    const Eigen::Index m = list.front().ambient_dim();
    Mat<Scalar> acc = Mat<Scalar>::Zero(m, m);
    for (const auto& s : list) {
        if (s.ambient_dim() != m)
            throw InvalidParameter("subspace_mean: ambient dimensions differ");
        acc.noalias() += s.basis() * s.basis().adjoint();
    }
    return acc / static_cast<double>(list.size());
}

template <typename Scalar>
BasicSubspace<Scalar> subspace_mean(std::span<const BasicSubspace<Scalar>> list, Eigen::Index p)
{
    const Mat<Scalar> avg = mean_projector(list);
    if (p < 1 || p > avg.rows())
        throw InvalidParameter("subspace_mean: target rank out of range");
    const auto eig = hermitian_eig(avg);
    return BasicSubspace<Scalar>(eig.vectors.leftCols(p));
}

template <typename Scalar>
BasicSubspace<Scalar> subspace_mean(const std::vector<BasicSubspace<Scalar>>& list, Eigen::Index p)
{
    return subspace_mean(std::span<const BasicSubspace<Scalar>>(list), p);
}

// Unitary DFT column for centered frequency index `freq` (any integer; taken
// modulo `size`): entries exp(j 2 pi n freq / size) / sqrt(size).
CVector dft_column(int size, int freq);

// Columns for centered frequencies first..last inclusive (wrapping modulo size).
CMatrix dft_columns(int size, int first, int last);

enum class BlockRule { disjoint, wrapped };

// Group subspaces cut from the M-point DFT basis. Column indices are 0-based
// standard order. Disjoint: block g holds columns g*r .. g*r+r-1. Wrapped:
// block g holds columns (g*r + 0 .. 2r-1) mod M.
std::vector<Subspace> dft_block_subspaces(int m, int groups, int r, BlockRule rule);

} // namespace jsdm
