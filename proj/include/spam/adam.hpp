#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spam/errors.hpp"
#include "spam/param_store.hpp"

namespace spam {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-6;
};

/// Per-step telemetry shared by every optimizer in the library. update_norm is
/// the L2 norm of the gradient-driven parameter change (weight decay shrinkage
/// excluded).
struct StepReport {
    std::size_t clipped_count = 0;
    std::size_t nullified_count = 0;
    double warmup_scale = 1.0;
    double update_norm = 0.0;
    bool mask_resampled = false;
};

namespace detail {

inline void require_finite(std::span<const double> grad) {
    for (double g : grad)
        if (!std::isfinite(g)) throw NonFiniteGradient("non-finite gradient coordinate");
}

}  // namespace detail

/// Plain dense Adam with bias correction.
class DenseAdam {
public:
    DenseAdam(AdamConfig cfg, std::size_t n) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

    StepReport step(ParameterStore& store, std::span<const double> grad) {
        return step(store, grad, cfg_.lr);
    }

    StepReport step(ParameterStore& store, std::span<const double> grad, double lr) {
        if (grad.size() != m_.size()) throw Error("gradient length mismatch");
        detail::require_finite(grad);
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        double norm2 = 0.0;
        for (std::size_t i = 0; i < m_.size(); ++i) {
            const double g = grad[i];
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
            const double update = lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.eps);
            store.values[i] -= update;
            norm2 += update * update;
        }
        StepReport rep;
        rep.update_norm = std::sqrt(norm2);
        return rep;
    }

    const AdamConfig& config() const { return cfg_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    std::int64_t steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace spam
