#include "doctest.h"

#include "jsdm/random.hpp"
#include "jsdm/subspace.hpp"

#include <cmath>
#include <vector>

using namespace jsdm;

namespace {

CMatrix random_matrix(int rows, int cols, RngStream& rng)
{
    CMatrix a(rows, cols);
    for (int j = 0; j < cols; ++j)
        a.col(j) = rng.complex_normal(rows);
    return a;
}

Subspace random_subspace(int m, int p, RngStream& rng) { return Subspace::span_of(random_matrix(m, p, rng)); }

CMatrix random_unitary(int p, RngStream& rng) { return orthonormalize(random_matrix(p, p, rng)); }

} // namespace

TEST_CASE("chordal distance basics")
{
    RngStream rng(1);
    const Subspace x = random_subspace(8, 3, rng);
    CHECK(chordal_distance(x, x) == doctest::Approx(0.0).epsilon(1e-12));

    const CMatrix f = dft_columns(8, 0, 7);
    const Subspace a(f.leftCols(2)), b(f.rightCols(2));
    CHECK(chordal_distance(a, b) == doctest::Approx(4.0));

    CHECK_THROWS_AS(chordal_distance(a, Subspace(dft_columns(4, 0, 1))), InvalidParameter);
}

TEST_CASE("chordal distance equals the projector Frobenius difference")
{
    RngStream rng(2);
    for (int t = 0; t < 20; ++t) {
        const Subspace x = random_subspace(8, 2, rng);
        const Subspace y = random_subspace(8, 3, rng);
        const double oracle = (x.projector() - y.projector()).squaredNorm();
        CHECK(std::abs(chordal_distance(x, y) - oracle) < 1e-10);
    }
}

TEST_CASE("chordal distance symmetry, range and unitary invariance")
{
    RngStream rng(3);
    for (int t = 0; t < 30; ++t) {
        const int p = 1 + static_cast<int>(rng.below(4));
        const int q = 1 + static_cast<int>(rng.below(4));
        const Subspace x = random_subspace(8, p, rng);
        const Subspace y = random_subspace(8, q, rng);
        const double d = chordal_distance(x, y);
        CHECK(d == doctest::Approx(chordal_distance(y, x)).epsilon(1e-12));
        CHECK(d >= std::abs(p - q) - 1e-10);
        CHECK(d <= p + q + 1e-10);
        const Subspace xr(x.basis() * random_unitary(p, rng));
        CHECK(chordal_distance(xr, y) == doctest::Approx(d).epsilon(1e-10));
    }
}

TEST_CASE("non-orthonormal basis is rejected")
{
    CMatrix a = CMatrix::Identity(4, 2);
    a(0, 1) = 0.3;
    CHECK_THROWS_AS(Subspace{a}, InvalidParameter);
}

TEST_CASE("subspace mean of copies is the subspace")
{
    RngStream rng(4);
    const Subspace x = random_subspace(6, 2, rng);
    CHECK(chordal_distance(subspace_mean(std::vector<Subspace>{x}, 2), x) < 1e-10);
    CHECK(chordal_distance(subspace_mean(std::vector<Subspace>{x, x}, 2), x) < 1e-10);
    const std::vector<Subspace> copies(5, x);
    CHECK((mean_projector<cplx>(copies) - x.projector()).norm() < 1e-12);
    CHECK_THROWS_AS(subspace_mean(std::vector<Subspace>{}, 1), InvalidParameter);
    CHECK_THROWS_AS(subspace_mean(std::vector<Subspace>{x}, 7), InvalidParameter);
}

TEST_CASE("tied mean of two orthogonal lines")
{
    const CMatrix e = CMatrix::Identity(4, 4);
    const Subspace u1(e.col(0)), u2(e.col(1));
    const std::vector<Subspace> list{u1, u2};

    // In the {u1, u2} coordinates the averaged projector is diag(1/2, 1/2).
    const CMatrix coords(e.leftCols(2));
    const CMatrix reduced = coords.adjoint() * mean_projector<cplx>(list) * coords;
    Eigen::SelfAdjointEigenSolver<CMatrix> small(reduced);
    CHECK(small.eigenvalues()(0) == doctest::Approx(0.5));
    CHECK(small.eigenvalues()(1) == doctest::Approx(0.5));

    const Subspace mean = subspace_mean(list, 1);
    CHECK(chordal_distance(mean, u1) < 1e-12);
    // repeated calls pick the same vector
    CHECK(subspace_mean(list, 1).basis() == mean.basis());
}

TEST_CASE("disjoint DFT blocks are mutually orthogonal")
{
    const auto blocks = dft_block_subspaces(9, 3, 3, BlockRule::disjoint);
    REQUIRE(blocks.size() == 3);
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b)
            CHECK(chordal_distance(blocks[a], blocks[b]) == doctest::Approx(6.0));
    CHECK_THROWS_AS(dft_block_subspaces(8, 3, 3, BlockRule::disjoint), InvalidParameter);
}

TEST_CASE("wrapped DFT windows")
{
    SUBCASE("M=8, r=1")
    {
        const auto w = dft_block_subspaces(8, 8, 1, BlockRule::wrapped);
        for (int g = 0; g < 8; ++g) {
            REQUIRE(w[g].rank() == 2);
            const Subspace expect(dft_columns(8, g, g + 1));
            CHECK(chordal_distance(w[g], expect) < 1e-12);
        }
        // the last window wraps onto column 0
        CHECK(chordal_distance(w[7], Subspace(CMatrix(dft_columns(8, 0, 7)(Eigen::all, {7, 0})))) < 1e-12);
    }
    SUBCASE("M=16, r=2")
    {
        const auto w = dft_block_subspaces(16, 8, 2, BlockRule::wrapped);
        for (int g = 0; g < 8; ++g) {
            REQUIRE(w[g].rank() == 4);
            CHECK(chordal_distance(w[g], Subspace(dft_columns(16, 2 * g, 2 * g + 3))) < 1e-12);
        }
    }
}

TEST_CASE("DFT columns are unitary and follow the exponent convention")
{
    const CMatrix f = dft_columns(12, -5, 6);
    CHECK((f.adjoint() * f - CMatrix::Identity(12, 12)).norm() < 1e-12);
    const CVector c = dft_column(12, 3);
    for (int n = 0; n < 12; ++n)
        CHECK(std::abs(c(n) - std::polar(1.0 / std::sqrt(12.0), 2.0 * pi * n * 3 / 12.0)) < 1e-14);
    CHECK((dft_column(12, -1) - dft_column(12, 11)).norm() == 0.0);
}
