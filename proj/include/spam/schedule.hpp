#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "spam/errors.hpp"

namespace spam {

/// Global learning-rate schedule: linear ramp 0 -> base over [0, W), then
/// cosine decay from base to floor_fraction * base over [W, T). Composes
/// multiplicatively with the optimizer's own post-reset warmup.
inline double global_lr(std::int64_t t, double base_lr, std::int64_t warmup_steps,
                        std::int64_t total_steps, double floor_fraction) {
    if (t < 0 || t >= total_steps) throw Error("schedule step out of range");
    if (warmup_steps < 0 || warmup_steps >= total_steps)
        throw Error("schedule warmup must satisfy 0 <= W < T");
    if (t < warmup_steps)
        return base_lr * static_cast<double>(t) / static_cast<double>(warmup_steps);
    const double progress = static_cast<double>(t - warmup_steps) /
                            static_cast<double>(total_steps - warmup_steps);
    const double floor = floor_fraction * base_lr;
    return floor + (base_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace spam
