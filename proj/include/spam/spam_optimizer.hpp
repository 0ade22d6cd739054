#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spam/adam.hpp"
#include "spam/errors.hpp"
#include "spam/mask.hpp"
#include "spam/param_store.hpp"
#include "spam/rng.hpp"

namespace spam {

enum class SpikeMode { clip, nullify };
enum class MaskStrategy { random, max_weight, max_gradient };
enum class UnmaskedPolicy { raw_sgd, frozen };
enum class BiasCorrectionClock { global, since_reset };

struct SpamConfig {
    AdamConfig adam;
    std::int64_t reset_interval = 500;  // moments zeroed and mask resampled every this many steps
    std::int64_t warmup_steps = 150;    // cosine ramp length after each reset; 0 disables warmup
    double gss_threshold = 5000.0;      // spike test g^2 > threshold * v; +inf disables it
    double density = 1.0;               // fraction of coordinates carrying moment state
    SpikeMode spike_mode = SpikeMode::clip;
    MaskStrategy mask_strategy = MaskStrategy::random;
    UnmaskedPolicy unmasked_policy = UnmaskedPolicy::raw_sgd;
    BiasCorrectionClock bias_clock = BiasCorrectionClock::global;
    double weight_decay = 0.0;
};

/// Post-reset update multiplier 0.5 * (1 - cos(pi * s / N)), clamped to 1 once
/// s reaches N. N = 0 means no warmup: the scale is 1 everywhere.
inline double warmup_scale(std::int64_t steps_since_reset, std::int64_t warmup_steps) {
    if (warmup_steps <= 0) return 1.0;
    if (steps_since_reset >= warmup_steps) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(steps_since_reset) /
                                 static_cast<double>(warmup_steps)));
}

/// Flags coordinates whose squared gradient exceeds theta times the second
/// moment (strict inequality). Coordinates with v == 0 are never flagged: a
/// freshly reset moment carries no history to deviate from.
inline std::vector<std::uint8_t> detect_spikes_online(std::span<const double> grad,
                                                      std::span<const double> v, double theta) {
    if (grad.size() != v.size()) throw Error("spike detection: length mismatch");
    std::vector<std::uint8_t> flags(grad.size(), 0);
    for (std::size_t i = 0; i < grad.size(); ++i)
        flags[i] = (v[i] > 0.0 && grad[i] * grad[i] > theta * v[i]) ? 1 : 0;
    return flags;
}

struct SpikeCounts {
    std::size_t clipped = 0;
    std::size_t nullified = 0;
};

/// Rewrites flagged coordinates. Clip mode rescales to sign(g) * sqrt(theta*v),
/// nudged down so g'^2 <= theta * v holds exactly under rounding; nullify mode
/// zeroes them. Unflagged coordinates are untouched.
inline SpikeCounts spike_transform(std::span<double> grad, std::span<const double> v,
                                   std::span<const std::uint8_t> flags, SpikeMode mode,
                                   double theta) {
    SpikeCounts counts;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!flags[i]) continue;
        if (mode == SpikeMode::clip) {
            const double cap2 = theta * v[i];
            double r = std::sqrt(cap2);
            while (r * r > cap2) r = std::nextafter(r, 0.0);
            grad[i] = std::copysign(r, grad[i]);
            ++counts.clipped;
        } else {
            grad[i] = 0.0;
            ++counts.nullified;
        }
    }
    return counts;
}

/// Adam with momentum reset, spike-aware clipping and sparse momentum.
///
/// Step order: (1) when t is a multiple of reset_interval, resample the mask
/// and zero both moments; (2) restrict the gradient to the mask; (3) detect
/// and transform spikes against the pre-update second moment; (4) masked Adam
/// update scaled by the post-reset warmup; (5) unmasked coordinates get a raw
/// SGD update or stay frozen; (6) optional decoupled weight decay.
class SpamOptimizer {
public:
    SpamOptimizer(SpamConfig cfg, std::size_t n, RngStream mask_rng)
        : cfg_(cfg), n_(n), rng_(mask_rng) {
        validate(cfg_);
    }

    StepReport step(ParameterStore& store, std::span<const double> grad) {
        return step(store, grad, cfg_.adam.lr);
    }

    StepReport step(ParameterStore& store, std::span<const double> grad, double lr) {
        if (grad.size() != n_ || store.size() != n_) throw Error("gradient length mismatch");
        detail::require_finite(grad);

        StepReport rep;
        if (t_ % cfg_.reset_interval == 0 && last_reset_t_ != t_) reset_moments(store, grad);
        rep.mask_resampled = (last_reset_t_ == t_);

        const double scale = warmup_scale(t_reset_, cfg_.warmup_steps);
        rep.warmup_scale = scale;

        const auto& idx = mask_.indices;
        g_masked_.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) g_masked_[k] = grad[idx[k]];

        const auto flags = detect_spikes_online(g_masked_, v_, cfg_.gss_threshold);
        const SpikeCounts counts =
            spike_transform(g_masked_, v_, flags, cfg_.spike_mode, cfg_.gss_threshold);
        rep.clipped_count = counts.clipped;
        rep.nullified_count = counts.nullified;

        const std::int64_t clock =
            (cfg_.bias_clock == BiasCorrectionClock::global) ? t_ + 1 : t_reset_ + 1;
        const double bc1 = 1.0 - std::pow(cfg_.adam.beta1, static_cast<double>(clock));
        const double bc2 = 1.0 - std::pow(cfg_.adam.beta2, static_cast<double>(clock));

        double norm2 = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const double g = g_masked_[k];
            m_[k] = cfg_.adam.beta1 * m_[k] + (1.0 - cfg_.adam.beta1) * g;
            v_[k] = cfg_.adam.beta2 * v_[k] + (1.0 - cfg_.adam.beta2) * g * g;
            const double update =
                lr * scale * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + cfg_.adam.eps);
            store.values[idx[k]] -= update;
            norm2 += update * update;
        }

        if (cfg_.unmasked_policy == UnmaskedPolicy::raw_sgd && idx.size() < n_) {
            std::size_t k = 0;
            for (std::size_t j = 0; j < n_; ++j) {
                if (k < idx.size() && idx[k] == j) {
                    ++k;
                    continue;
                }
                const double update = lr * scale * grad[j];
                store.values[j] -= update;
                norm2 += update * update;
            }
        }

        if (cfg_.weight_decay > 0.0) {
            const double shrink = 1.0 - lr * scale * cfg_.weight_decay;
            for (double& w : store.values) w *= shrink;
        }

        rep.update_norm = std::sqrt(norm2);
        ++t_;
        ++t_reset_;
        return rep;
    }

    /// Resample the mask per the configured strategy and zero both moments for
    /// the whole new mask (no carry-over for indices sampled twice in a row).
    /// step() calls this automatically whenever t is a multiple of the reset
    /// interval; it is public so callers can observe the freshly reset state,
    /// and it runs at most once per step index.
    StepReport reset_moments(const ParameterStore& store, std::span<const double> grad) {
        const std::size_t k = mask_size_for(n_, cfg_.density);
        switch (cfg_.mask_strategy) {
            case MaskStrategy::random:
                mask_ = sample_mask(n_, cfg_.density, rng_);
                break;
            case MaskStrategy::max_weight:
                rng_.next_u64();  // burn one draw so switching strategies keeps streams aligned
                mask_ = top_k_mask(store.values, k, cfg_.density);
                break;
            case MaskStrategy::max_gradient:
                rng_.next_u64();
                mask_ = top_k_mask(grad, k, cfg_.density);
                break;
        }
        m_.assign(mask_.size(), 0.0);
        v_.assign(mask_.size(), 0.0);
        t_reset_ = 0;
        last_reset_t_ = t_;
        StepReport rep;
        rep.mask_resampled = true;
        rep.warmup_scale = warmup_scale(0, cfg_.warmup_steps);
        return rep;
    }

    const SpamConfig& config() const { return cfg_; }
    const IndexMask& mask() const { return mask_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }
    std::int64_t steps() const { return t_; }
    std::int64_t steps_since_reset() const { return t_reset_; }

private:
    static void validate(const SpamConfig& cfg) {
        if (cfg.reset_interval < 1) throw InvalidSpec("reset_interval must be >= 1");
        if (cfg.warmup_steps < 0) throw InvalidSpec("warmup_steps must be >= 0");
        if (!(cfg.gss_threshold > 0.0)) throw InvalidSpec("gss_threshold must be > 0");
        if (!(cfg.density > 0.0) || cfg.density > 1.0)
            throw InvalidDensity("density must be in (0, 1]");
        if (cfg.weight_decay < 0.0) throw InvalidSpec("weight_decay must be >= 0");
        if (!(cfg.adam.lr > 0.0)) throw InvalidSpec("lr must be > 0");
        if (cfg.adam.beta1 < 0.0 || cfg.adam.beta1 >= 1.0) throw InvalidSpec("beta1 out of [0,1)");
        if (cfg.adam.beta2 < 0.0 || cfg.adam.beta2 >= 1.0) throw InvalidSpec("beta2 out of [0,1)");
        if (!(cfg.adam.eps > 0.0)) throw InvalidSpec("eps must be > 0");
    }

    SpamConfig cfg_;
    std::size_t n_;
    RngStream rng_;
    IndexMask mask_;
    std::vector<double> m_, v_;
    std::vector<double> g_masked_;
    std::int64_t t_ = 0;
    std::int64_t t_reset_ = 0;
    std::int64_t last_reset_t_ = -1;
};

}  // namespace spam
