#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "uqt/error.hpp"

namespace uqt {

/// Type-1 empirical quantile of an ascending-sorted sample: the lowest value
/// whose cumulative fraction k/n reaches `level`.
inline double sorted_quantile_type1(std::span<const double> sorted, double level) {
    if (sorted.empty()) throw Error("quantile of an empty sample");
    const double n = static_cast<double>(sorted.size());
    // Guard against k/n landing a hair below level through rounding.
    auto k = static_cast<std::size_t>(std::ceil(level * n - 1e-9 * n));
    if (k < 1) k = 1;
    if (k > sorted.size()) k = sorted.size();
    return sorted[k - 1];
}

inline double quantile_type1(std::vector<double> sample, double level) {
    std::sort(sample.begin(), sample.end());
    return sorted_quantile_type1(sample, level);
}

/// Lowest value whose cumulative weight is at least `level` times the total.
/// Ties in value are broken toward the lower original index.
inline double weighted_quantile_type1(std::span<const double> values, std::span<const double> weights, double level) {
    if (values.empty() || values.size() != weights.size()) throw Error("weighted quantile: bad input sizes");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    const double target = level * total;
    double cum = 0.0;
    for (auto i : order) {
        cum += weights[i];
        if (cum >= target * (1.0 - 1e-12)) return values[i];
    }
    return values[order.back()];
}

}  // namespace uqt
