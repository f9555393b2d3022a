// SPDX-License-Identifier: Apache-2.0
#include "jsdm/subspace.hpp"

#include <string>

namespace jsdm {

CVector dft_column(int size, int freq)
{
    if (size < 1)
        throw InvalidParameter("dft_column: size must be positive");
    const int k = ((freq % size) + size) % size;
    CVector col(size);
    const double scale = 1.0 / std::sqrt(static_cast<double>(size));
    for (int n = 0; n < size; ++n) {
        // Reduce n*k first so the phase stays exact for large sizes.
        const long long nk = (static_cast<long long>(n) * k) % size;
        col(n) = std::polar(scale, 2.0 * pi * static_cast<double>(nk) / size);
    }
    return col;
}

CMatrix dft_columns(int size, int first, int last)
{
    if (last < first)
        throw InvalidParameter("dft_columns: empty index range");
    if (last - first + 1 > size)
        throw InvalidParameter("dft_columns: more columns than the DFT size");
    CMatrix out(size, last - first + 1);
    for (int f = first; f <= last; ++f)
        out.col(f - first) = dft_column(size, f);
    return out;
}

std::vector<Subspace> dft_block_subspaces(int m, int groups, int r, BlockRule rule)
{
    if (m < 1 || groups < 1 || r < 1)
        throw InvalidParameter("dft_block_subspaces: M, G and r must be positive");
    std::vector<Subspace> out;
    out.reserve(static_cast<std::size_t>(groups));
    if (rule == BlockRule::disjoint) {
        if (groups * r > m)
            throw InvalidParameter("dft_block_subspaces: G*r = " + std::to_string(groups * r) + " exceeds M = " +
                                   std::to_string(m));
        for (int g = 0; g < groups; ++g)
            out.emplace_back(dft_columns(m, g * r, g * r + r - 1));
    } else {
        if (2 * r > m)
            throw InvalidParameter("dft_block_subspaces: wrapped window 2r exceeds M");
        for (int g = 0; g < groups; ++g)
            out.emplace_back(dft_columns(m, g * r, g * r + 2 * r - 1));
    }
    return out;
}

} // namespace jsdm
