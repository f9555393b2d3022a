// SPDX-License-Identifier: Apache-2.0
#include "jsdm/linalg.hpp"

#include <map>
#include <utility>
#include <mutex>

namespace jsdm {

namespace {

// Legendre P_n(x) and its derivative via the three-term recurrence.
std::pair<double, double> legendre(int n, double x)
{
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

QuadratureRule compute_gauss_legendre(int n)
{
    QuadratureRule rule{RVector(n), RVector(n)};
    if (n == 1) {
        rule.nodes(0) = 0.0;
        rule.weights(0) = 2.0;
        return rule;
    }
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double dp = legendre(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes(i) = -x;
        rule.weights(i) = w;
        rule.nodes(n - 1 - i) = x;
        rule.weights(n - 1 - i) = w;
    }
    if (n % 2 == 1)
        rule.nodes(n / 2) = 0.0;
    return rule;
}

} // namespace

QuadratureRule gauss_legendre(int n)
{
    if (n < 1)
        throw InvalidParameter("gauss_legendre: need at least one node");
    static std::mutex mutex;
    static std::map<int, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

QuadratureRule composite_gauss_legendre(double lo, double hi, int n, int panels)
{
    if (panels < 1)
        throw InvalidParameter("composite_gauss_legendre: need at least one panel");
    const QuadratureRule base = gauss_legendre(n);
    QuadratureRule out{RVector(n * panels), RVector(n * panels)};
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * width;
        const double half = width / 2;
        out.nodes.segment(p * n, n) = (base.nodes.array() * half + (a + half)).matrix();
        out.weights.segment(p * n, n) = base.weights * half;
    }
    return out;
}

} // namespace jsdm
