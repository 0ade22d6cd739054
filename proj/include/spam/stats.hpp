#pragma once

#include <algorithm>
#include <vector>

#include "spam/errors.hpp"

namespace spam {

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw Error("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    const double frac = h - static_cast<double>(lo);
    return xs[lo] + frac * (xs[lo + 1] - xs[lo]);
}

inline double median(const std::vector<double>& xs) { return quantile(xs, 0.5); }

inline double iqr(const std::vector<double>& xs) {
    return quantile(xs, 0.75) - quantile(xs, 0.25);
}

}  // namespace spam
