#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "robustgen/numerics.hpp"
#include "robustgen/prng.hpp"

// Test-only oracles and generators, independent of the library paths they
// check.

namespace testutil {

inline robustgen::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                       double lo = -1.0, double hi = 1.0) {
    robustgen::Matrix m(rows, cols);
    robustgen::SplitMix64 rng(seed);
    for (double& x : m.data()) x = rng.uniform(lo, hi);
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    robustgen::SplitMix64 rng(seed);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline robustgen::Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    robustgen::Matrix m = random_matrix(n, n, seed);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
    return m;
}

// Minimum of y<w, x'> over all 2^d corners of the l_inf ball around x.
// The minimum of a linear function over a box sits at a corner, so this
// is exact.
inline double corner_min_binary(std::span<const double> w, std::span<const double> x, int y,
                                double epsilon) {
    const std::size_t d = w.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        double ip = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double xj = x[j] + (((mask >> j) & 1) ? epsilon : -epsilon);
            ip += w[j] * xj;
        }
        best = std::min(best, y * ip);
    }
    return best;
}

// Corner-enumeration oracle for the multi-class adversarial margin:
// min over y' != y of the corner minimum of (w_y - w_y')^T x'.
inline double corner_min_multiclass(const robustgen::Matrix& weights, std::span<const double> x,
                                    int y, double epsilon) {
    const std::size_t k = weights.rows();
    const std::size_t d = weights.cols();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        if (c == static_cast<std::size_t>(y - 1)) continue;
        std::vector<double> diff(d);
        for (std::size_t j = 0; j < d; ++j)
            diff[j] = weights(static_cast<std::size_t>(y - 1), j) - weights(c, j);
        best = std::min(best, corner_min_binary(diff, x, 1, epsilon));
    }
    return best;
}

// Spearman rank correlation (no-tie inputs expected).
inline double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        for (std::size_t pos = 0; pos < n; ++pos) r[idx[pos]] = static_cast<double>(pos + 1);
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double nf = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
}

}  // namespace testutil
