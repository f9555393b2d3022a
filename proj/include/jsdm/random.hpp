// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jsdm/core.hpp"

#include <cstdint>
#include <random>

namespace jsdm {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Value-semantic generator. Copying clones the full state, including the
// cached second normal variate, so a copy replays the same sequence.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

    // Stream for one Monte Carlo trial; depends only on (seed, trial) so
    // results do not change with the number of worker threads.
    static RngStream for_trial(std::uint64_t seed, std::uint64_t trial)
    {
        return RngStream(splitmix64(splitmix64(seed) ^ (trial + 0x632be59bd9b4e019ULL)));
    }

    RngStream fork(std::uint64_t tag) const
    {
        RngStream copy = *this;
        return RngStream(splitmix64(copy.engine_() ^ splitmix64(tag)));
    }

    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_(engine_); }

    // CN(0,1): real and imaginary parts each with variance 1/2.
    cplx complex_normal()
    {
        const double re = normal();
        const double im = normal();
        return {re * std::numbers::sqrt2 / 2, im * std::numbers::sqrt2 / 2};
    }

    CVector complex_normal(Eigen::Index n)
    {
        CVector w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = complex_normal();
        return w;
    }

    std::uint64_t next_u64() { return engine_(); }
    std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace jsdm
