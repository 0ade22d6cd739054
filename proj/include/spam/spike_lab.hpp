#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spam/errors.hpp"
#include "spam/param_store.hpp"
#include "spam/rng.hpp"

namespace spam {

/// Bounded per-coordinate gradient history for offline spike analysis. Either
/// every coordinate is stored, or a deterministic per-segment subsample of
/// them; full traces for large models are memory-hostile.
class GradientTrace {
public:
    static GradientTrace full(std::size_t n) {
        GradientTrace t;
        t.n_ = n;
        t.coords_.resize(n);
        for (std::size_t i = 0; i < n; ++i) t.coords_[i] = i;
        t.labels_.assign(n, "all");
        return t;
    }

    static GradientTrace full(const SegmentTable& layout) {
        GradientTrace t = full(layout.total_params());
        for (std::size_t i = 0; i < t.coords_.size(); ++i) t.labels_[i] = layout.segment_of(i);
        return t;
    }

    /// Track up to per_segment uniformly chosen coordinates from each segment.
    static GradientTrace subsampled(const SegmentTable& layout, std::size_t per_segment,
                                    RngStream& rng) {
        if (per_segment == 0) throw InvalidSpec("per_segment must be >= 1");
        GradientTrace t;
        t.n_ = layout.total_params();
        for (const Segment& seg : layout.segments()) {
            const std::size_t take = std::min(per_segment, seg.len);
            // partial Fisher-Yates over the segment's index range
            std::vector<std::size_t> pool(seg.len);
            for (std::size_t i = 0; i < seg.len; ++i) pool[i] = seg.start + i;
            for (std::size_t i = 0; i < take; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.next_below(seg.len - i));
                std::swap(pool[i], pool[j]);
            }
            pool.resize(take);
            std::sort(pool.begin(), pool.end());
            for (std::size_t c : pool) {
                t.coords_.push_back(c);
                t.labels_.push_back(seg.name);
            }
        }
        return t;
    }

    /// Construct from already-tracked coordinates (used by the CSV reader).
    static GradientTrace from_columns(std::vector<std::size_t> coords,
                                      std::vector<std::string> labels) {
        if (coords.size() != labels.size()) throw InvalidSpec("coords/labels size mismatch");
        GradientTrace t;
        t.n_ = coords.empty() ? 0 : coords.back() + 1;
        t.coords_ = std::move(coords);
        t.labels_ = std::move(labels);
        return t;
    }

    /// Append one step; grad must cover all n coordinates.
    void record(std::span<const double> grad) {
        if (grad.size() != n_) throw Error("trace record: gradient length mismatch");
        for (std::size_t c : coords_) data_.push_back(grad[c]);
        ++steps_;
    }

    /// Append one step of already-restricted tracked values.
    void record_tracked(std::span<const double> values) {
        if (values.size() != coords_.size()) throw Error("trace record: tracked length mismatch");
        data_.insert(data_.end(), values.begin(), values.end());
        ++steps_;
    }

    std::size_t steps() const { return steps_; }
    std::size_t coordinate_count() const { return n_; }
    const std::vector<std::size_t>& tracked() const { return coords_; }
    const std::string& label(std::size_t column) const { return labels_[column]; }

    std::optional<std::size_t> column_of(std::size_t coordinate) const {
        auto it = std::lower_bound(coords_.begin(), coords_.end(), coordinate);
        if (it == coords_.end() || *it != coordinate) return std::nullopt;
        return static_cast<std::size_t>(it - coords_.begin());
    }

    double value(std::size_t step, std::size_t column) const {
        return data_[step * coords_.size() + column];
    }

private:
    std::size_t n_ = 0;
    std::size_t steps_ = 0;
    std::vector<std::size_t> coords_;
    std::vector<std::string> labels_;
    std::vector<double> data_;  // steps x tracked, row-major
};

/// One detected spike: the offline score of the gradient at that step against
/// the coordinate's whole-trace mean magnitude.
struct SpikeEvent {
    std::size_t step = 0;
    std::size_t coordinate = 0;
    std::string segment;
    double score = 0.0;
};

struct SegmentSpikeStats {
    std::string segment;
    std::size_t total_spikes = 0;
    std::size_t total_params = 0;
    double ratio = 0.0;
};

namespace detail {

inline std::vector<double> gss_column(const GradientTrace& trace, std::size_t column) {
    const std::size_t steps = trace.steps();
    double sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) sum += std::fabs(trace.value(s, column));
    if (sum == 0.0) return {};
    const double mean = sum / static_cast<double>(steps);
    std::vector<double> scores(steps);
    for (std::size_t s = 0; s < steps; ++s) scores[s] = std::fabs(trace.value(s, column)) / mean;
    return scores;
}

}  // namespace detail

/// Per-step spike scores of one coordinate: |g_i| over the mean |g| across the
/// whole trace. An all-zero history has no defined score.
inline std::vector<double> gss(const GradientTrace& trace, std::size_t coordinate) {
    const auto column = trace.column_of(coordinate);
    if (!column) throw OutOfRange("coordinate " + std::to_string(coordinate) + " is not tracked");
    if (trace.steps() == 0) throw UndefinedScore("empty trace");
    auto scores = detail::gss_column(trace, *column);
    if (scores.empty())
        throw UndefinedScore("all-zero history for coordinate " + std::to_string(coordinate));
    return scores;
}

/// Every (step, coordinate) whose score strictly exceeds theta, ordered by
/// step then coordinate. All-zero coordinate histories produce no events.
inline std::vector<SpikeEvent> detect_spikes(const GradientTrace& trace, double theta) {
    if (!(theta > 0.0)) throw InvalidSpec("theta must be > 0");
    const auto& coords = trace.tracked();
    std::vector<std::vector<double>> scores(coords.size());
    for (std::size_t c = 0; c < coords.size(); ++c) scores[c] = detail::gss_column(trace, c);
    std::vector<SpikeEvent> events;
    for (std::size_t s = 0; s < trace.steps(); ++s) {
        for (std::size_t c = 0; c < coords.size(); ++c) {
            if (scores[c].empty()) continue;
            if (scores[c][s] > theta)
                events.push_back({s, coords[c], trace.label(c), scores[c][s]});
        }
    }
    return events;
}

/// Per-segment spike counts against the store layout; segments without events
/// appear with zero.
inline std::vector<SegmentSpikeStats> segment_stats(const std::vector<SpikeEvent>& events,
                                                    const ParameterStore& store) {
    const auto& segs = store.layout.segments();
    std::vector<SegmentSpikeStats> stats(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i)
        stats[i] = {segs[i].name, 0, segs[i].len, 0.0};
    for (const SpikeEvent& e : events) {
        const Segment& seg = store.layout.segment_at(e.coordinate);  // throws OutOfRange
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].start == seg.start) {
                ++stats[i].total_spikes;
                break;
            }
        }
    }
    for (auto& s : stats)
        s.ratio = static_cast<double>(s.total_spikes) / static_cast<double>(s.total_params);
    return stats;
}

/// Stats grouped by trace column labels; total_params counts traced
/// coordinates, so ratios are relative to what was observed.
inline std::vector<SegmentSpikeStats> segment_stats(const std::vector<SpikeEvent>& events,
                                                    const GradientTrace& trace) {
    std::vector<SegmentSpikeStats> stats;
    auto find = [&](const std::string& name) -> SegmentSpikeStats& {
        for (auto& s : stats)
            if (s.segment == name) return s;
        stats.push_back({name, 0, 0, 0.0});
        return stats.back();
    };
    for (std::size_t c = 0; c < trace.tracked().size(); ++c) ++find(trace.label(c)).total_params;
    for (const SpikeEvent& e : events) ++find(e.segment).total_spikes;
    for (auto& s : stats)
        s.ratio = s.total_params == 0
                      ? 0.0
                      : static_cast<double>(s.total_spikes) / static_cast<double>(s.total_params);
    return stats;
}

/// Online stand-in for the offline score: a per-coordinate running mean of |g|
/// over the steps seen so far, seeded with the first gradient, zeroes any
/// coordinate whose |g| exceeds theta times that mean. The running mean is
/// updated with the raw (pre-nullification) magnitudes, so it approximates the
/// full-trace mean the offline score uses; the two can disagree early in a run.
class NullifyFilter {
public:
    NullifyFilter(std::size_t n, double theta) : theta_(theta), mean_(n, 0.0) {
        if (!(theta > 0.0)) throw InvalidSpec("theta must be > 0");
    }

    /// Returns the number of nullified coordinates.
    std::size_t apply(std::span<double> grad) {
        if (grad.size() != mean_.size()) throw Error("nullify filter: length mismatch");
        std::size_t nullified = 0;
        if (count_ == 0) {
            for (std::size_t i = 0; i < grad.size(); ++i) mean_[i] = std::fabs(grad[i]);
            count_ = 1;
            // score is |g0| / |g0| = 1 for every coordinate
            if (1.0 > theta_) {
                for (double& g : grad) g = 0.0;
                nullified = grad.size();
            }
            return nullified;
        }
        const double next = static_cast<double>(count_ + 1);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double mag = std::fabs(grad[i]);
            const double score = mean_[i] > 0.0 ? mag / mean_[i] : 1.0;
            mean_[i] += (mag - mean_[i]) / next;
            if (score > theta_) {
                grad[i] = 0.0;
                ++nullified;
            }
        }
        ++count_;
        return nullified;
    }

    std::span<const double> running_mean() const { return mean_; }
    double theta() const { return theta_; }

private:
    double theta_;
    std::vector<double> mean_;
    std::int64_t count_ = 0;
};

struct MomentSimConfig {
    double mean = 0.1;       // gradient distribution mean
    double variance = 0.1;   // gradient distribution variance
    std::int64_t steps = 200;
    std::int64_t spike_step = 30;
    double spike_magnitude = 10.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
};

struct MomentSimResult {
    std::vector<double> m_clean, v_clean, m_spiked, v_spiked;
    // Steps after spike_step until |x_spiked - x_clean| <= 0.05 * |x_clean|;
    // empty when the trajectory does not re-enter the band within the horizon.
    std::optional<std::int64_t> m_recovery_steps;
    std::optional<std::int64_t> v_recovery_steps;
};

/// Paired-draw simulation of a single spike's effect on Adam's moments. Both
/// trajectories consume the same Gaussian gradient stream; at spike_step the
/// clean run sees the distribution mean and the spiked run sees
/// spike_magnitude, so spike_magnitude == mean is exactly the no-anomaly case.
inline MomentSimResult simulate_moments(const MomentSimConfig& cfg, RngStream& rng) {
    if (cfg.steps < 1) throw InvalidSpec("steps must be >= 1");
    if (cfg.spike_step < 0 || cfg.spike_step >= cfg.steps)
        throw InvalidSpec("spike_step must be in [0, steps)");
    if (cfg.variance < 0.0) throw InvalidSpec("variance must be >= 0");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0) throw InvalidSpec("beta1 out of [0,1)");
    if (cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) throw InvalidSpec("beta2 out of [0,1)");

    const double stddev = std::sqrt(cfg.variance);
    MomentSimResult res;
    res.m_clean.resize(cfg.steps);
    res.v_clean.resize(cfg.steps);
    res.m_spiked.resize(cfg.steps);
    res.v_spiked.resize(cfg.steps);

    double mc = 0.0, vc = 0.0, ms = 0.0, vs = 0.0;
    for (std::int64_t t = 0; t < cfg.steps; ++t) {
        const double draw = rng.next_gaussian(cfg.mean, stddev);
        const double gc = (t == cfg.spike_step) ? cfg.mean : draw;
        const double gs = (t == cfg.spike_step) ? cfg.spike_magnitude : draw;
        mc = cfg.beta1 * mc + (1.0 - cfg.beta1) * gc;
        vc = cfg.beta2 * vc + (1.0 - cfg.beta2) * gc * gc;
        ms = cfg.beta1 * ms + (1.0 - cfg.beta1) * gs;
        vs = cfg.beta2 * vs + (1.0 - cfg.beta2) * gs * gs;
        res.m_clean[t] = mc;
        res.v_clean[t] = vc;
        res.m_spiked[t] = ms;
        res.v_spiked[t] = vs;
    }

    auto recovery = [&](const std::vector<double>& spiked,
                        const std::vector<double>& clean) -> std::optional<std::int64_t> {
        for (std::int64_t t = cfg.spike_step; t < cfg.steps; ++t) {
            if (std::fabs(spiked[t] - clean[t]) <= 0.05 * std::fabs(clean[t]))
                return t - cfg.spike_step;
        }
        return std::nullopt;
    };
    res.m_recovery_steps = recovery(res.m_spiked, res.m_clean);
    res.v_recovery_steps = recovery(res.v_spiked, res.v_clean);
    return res;
}

}  // namespace spam
