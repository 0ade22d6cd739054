#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace spam {

// Fixed stream ids, one per consumer, so toggling one feature never shifts
// another feature's draws.
enum class Stream : std::uint64_t {
    problem_data = 1,
    init = 2,
    batches = 3,
    spike_injection = 4,
    corruption = 5,
    mask_sampling = 6,
    trace_subsample = 7,
    moment_sim = 8,
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Deterministic random stream: identical (seed, stream id) produce identical
/// draw sequences on every platform. mt19937_64 is fully specified by the
/// standard; the distributions are hand-rolled because std::*_distribution is
/// implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(detail::splitmix64(detail::splitmix64(seed) ^ detail::splitmix64(~stream))) {}

    RngStream(std::uint64_t seed, Stream stream)
        : RngStream(seed, static_cast<std::uint64_t>(stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, bound); bound must be >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        assert(bound >= 1);
        const std::uint64_t reject_below = (0 - bound) % bound;  // 2^64 mod bound
        std::uint64_t r = next_u64();
        while (r < reject_below) r = next_u64();
        return r % bound;
    }

    /// Standard normal via Box-Muller; two uniforms per draw, no cached spare.
    double next_gaussian() {
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double next_gaussian(double mean, double stddev) { return mean + stddev * next_gaussian(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace spam
