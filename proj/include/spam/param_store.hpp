#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spam/errors.hpp"

namespace spam {

struct Segment {
    std::string name;
    std::size_t start = 0;
    std::size_t len = 0;
};

using SegmentSpec = std::vector<std::pair<std::string, std::size_t>>;

/// Ordered, contiguous, non-overlapping layout of named segments over [0, n).
class SegmentTable {
public:
    SegmentTable() = default;

    explicit SegmentTable(const SegmentSpec& spec) {
        if (spec.empty()) throw InvalidSpec("segment spec is empty");
        segments_.reserve(spec.size());
        std::size_t offset = 0;
        for (const auto& [name, len] : spec) {
            if (len == 0) throw InvalidSpec("segment '" + name + "' has zero length");
            segments_.push_back({name, offset, len});
            offset += len;
        }
        total_ = offset;
    }

    std::size_t total_params() const { return total_; }
    const std::vector<Segment>& segments() const { return segments_; }

    const Segment& segment_at(std::size_t i) const {
        if (i >= total_)
            throw OutOfRange("index " + std::to_string(i) + " >= " + std::to_string(total_));
        auto it = std::upper_bound(segments_.begin(), segments_.end(), i,
                                   [](std::size_t x, const Segment& s) { return x < s.start; });
        return *std::prev(it);
    }

    const std::string& segment_of(std::size_t i) const { return segment_at(i).name; }

private:
    std::vector<Segment> segments_;
    std::size_t total_ = 0;
};

/// Flat trainable values partitioned into named segments.
struct ParameterStore {
    std::vector<double> values;
    SegmentTable layout;

    std::size_t size() const { return values.size(); }
};

inline ParameterStore make_store(const SegmentSpec& spec) {
    ParameterStore store;
    store.layout = SegmentTable(spec);
    store.values.assign(store.layout.total_params(), 0.0);
    return store;
}

inline const std::string& segment_of(const ParameterStore& store, std::size_t i) {
    return store.layout.segment_of(i);
}

}  // namespace spam
