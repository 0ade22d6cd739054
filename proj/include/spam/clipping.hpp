#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spam/errors.hpp"

namespace spam {

/// Elementwise sign(g) * min(|g|, threshold). Returns the number of clipped
/// coordinates.
inline std::size_t value_clip_inplace(std::span<double> grad, double threshold) {
    std::size_t clipped = 0;
    for (double& g : grad) {
        if (std::fabs(g) > threshold) {
            g = std::copysign(threshold, g);
            ++clipped;
        }
    }
    return clipped;
}

inline std::vector<double> value_clip(std::span<const double> grad, double threshold) {
    std::vector<double> out(grad.begin(), grad.end());
    value_clip_inplace(out, threshold);
    return out;
}

/// Scales the whole vector down to max_norm when its L2 norm exceeds it.
/// Returns the number of modified coordinates (all or none).
inline std::size_t norm_clip_inplace(std::span<double> grad, double max_norm) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    if (norm <= max_norm) return 0;
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
    return grad.size();
}

inline std::vector<double> norm_clip(std::span<const double> grad, double max_norm) {
    std::vector<double> out(grad.begin(), grad.end());
    norm_clip_inplace(out, max_norm);
    return out;
}

/// Pulls every coordinate back into the 3-sigma band around the running mean:
/// |g' - mean| <= 3 * sqrt(var) elementwise, with the replacement value nudged
/// toward the mean until the bound also holds under rounding.
inline std::size_t gaussian_clip_inplace(std::span<double> grad, std::span<const double> mean,
                                         std::span<const double> var) {
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        const double dev = grad[i] - mean[i];
        const double band = 3.0 * std::sqrt(var[i]);
        if (std::fabs(dev) > band) {
            double c = mean[i] + std::copysign(band, dev);
            while (std::fabs(c - mean[i]) > band) c = std::nextafter(c, mean[i]);
            grad[i] = c;
            ++clipped;
        }
    }
    return clipped;
}

inline std::pair<std::vector<double>, std::size_t> gaussian_clip(std::span<const double> grad,
                                                                 std::span<const double> mean,
                                                                 std::span<const double> var) {
    std::vector<double> out(grad.begin(), grad.end());
    const std::size_t clipped = gaussian_clip_inplace(out, mean, var);
    return {std::move(out), clipped};
}

/// Exponentially weighted per-coordinate mean and variance of a gradient
/// stream, seeded with the first observation.
class GaussianStats {
public:
    GaussianStats(std::size_t n, double decay = 0.99)
        : decay_(decay), mean_(n, 0.0), var_(n, 0.0) {}

    void observe(std::span<const double> grad) {
        if (!seeded_) {
            for (std::size_t i = 0; i < mean_.size(); ++i) mean_[i] = grad[i];
            seeded_ = true;
            return;
        }
        for (std::size_t i = 0; i < mean_.size(); ++i) {
            const double d = grad[i] - mean_[i];
            mean_[i] += (1.0 - decay_) * d;
            var_[i] = decay_ * (var_[i] + (1.0 - decay_) * d * d);
        }
    }

    bool seeded() const { return seeded_; }
    std::span<const double> mean() const { return mean_; }
    std::span<const double> variance() const { return var_; }

private:
    double decay_;
    bool seeded_ = false;
    std::vector<double> mean_, var_;
};

}  // namespace spam
