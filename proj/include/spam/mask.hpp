#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "spam/errors.hpp"
#include "spam/rng.hpp"

namespace spam {

/// Strictly increasing coordinate subset together with the density it was
/// sampled at.
struct IndexMask {
    std::vector<std::size_t> indices;
    double density = 1.0;

    std::size_t size() const { return indices.size(); }
};

/// Mask size contract: max(1, round(density * n)).
inline std::size_t mask_size_for(std::size_t n, double density) {
    const long long k = std::llround(density * static_cast<double>(n));
    return static_cast<std::size_t>(std::max(1ll, k));
}

/// Uniform subset without replacement of size mask_size_for(n, density).
/// Density 1 short-circuits to the identity set without consuming draws.
inline IndexMask sample_mask(std::size_t n, double density, RngStream& rng) {
    if (!(density > 0.0) || density > 1.0)
        throw InvalidDensity("density must be in (0, 1], got " + std::to_string(density));
    const std::size_t k = mask_size_for(n, density);
    IndexMask mask;
    mask.density = density;
    mask.indices.resize(k);
    if (k == n) {
        std::iota(mask.indices.begin(), mask.indices.end(), std::size_t{0});
        return mask;
    }
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(pool[i], pool[j]);
        mask.indices[i] = pool[i];
    }
    std::sort(mask.indices.begin(), mask.indices.end());
    return mask;
}

/// Top-k coordinates by |score|, ties broken toward the lower index.
inline IndexMask top_k_mask(std::span<const double> score, std::size_t k, double density) {
    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto better = [&](std::size_t a, std::size_t b) {
        const double fa = std::fabs(score[a]);
        const double fb = std::fabs(score[b]);
        if (fa != fb) return fa > fb;
        return a < b;
    };
    if (k < idx.size()) {
        std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                         idx.end(), better);
        idx.resize(k);
    }
    std::sort(idx.begin(), idx.end());
    IndexMask mask;
    mask.density = density;
    mask.indices = std::move(idx);
    return mask;
}

}  // namespace spam
