#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spam/errors.hpp"
#include "spam/rng.hpp"

namespace spam {

/// Multiplies each gradient coordinate, independently with probability p, by a
/// fixed factor. Multiplicative rather than additive: a spike is a magnitude
/// anomaly relative to the coordinate's own scale.
struct SpikeInjector {
    double probability = 0.0;
    double factor = 1000.0;
    RngStream rng;

    SpikeInjector(double p, double f, RngStream r) : probability(p), factor(f), rng(r) {
        if (p < 0.0 || p > 1.0) throw InvalidSpec("spike probability must be in [0, 1]");
        if (f < 1.0) throw InvalidSpec("spike factor must be >= 1");
    }
};

/// Returns the list of hit coordinates. Exactly one uniform draw is consumed
/// per coordinate (when p > 0), so the realization never depends on gradient
/// values or on the optimizer being driven.
inline std::vector<std::size_t> inject_spikes(std::span<double> grad, SpikeInjector& inj) {
    std::vector<std::size_t> hits;
    if (inj.probability <= 0.0) return hits;
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (inj.rng.next_unit() < inj.probability) {
            grad[i] *= inj.factor;
            hits.push_back(i);
        }
    }
    return hits;
}

/// Adds Gaussian(0, severity * max(batch)) noise to each input value with the
/// configured probability.
struct AnomalyInjector {
    double probability = 0.10;
    double severity = 0.0;
    RngStream rng;

    AnomalyInjector(double p, double s, RngStream r) : probability(p), severity(s), rng(r) {
        if (p < 0.0 || p > 1.0) throw InvalidSpec("corruption probability must be in [0, 1]");
        if (s < 0.0) throw InvalidSpec("corruption severity must be >= 0");
    }
};

/// Returns the number of corrupted values. Two draws are consumed per value so
/// the stream stays aligned whatever the Bernoulli outcomes.
inline std::size_t corrupt_inputs(std::span<double> inputs, AnomalyInjector& inj) {
    if (inj.severity == 0.0 || inj.probability == 0.0 || inputs.empty()) return 0;
    const double sigma = inj.severity * *std::max_element(inputs.begin(), inputs.end());
    std::size_t corrupted = 0;
    for (double& x : inputs) {
        const double u = inj.rng.next_unit();
        const double z = inj.rng.next_gaussian();
        if (u < inj.probability) {
            x += z * sigma;
            ++corrupted;
        }
    }
    return corrupted;
}

}  // namespace spam
