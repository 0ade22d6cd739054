#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spam/errors.hpp"
#include "spam/spike_lab.hpp"

namespace spam {

/// Round-trip-exact decimal rendering; parsing the text recovers the same
/// double, which keeps "recompute from CSV" checks exact.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

// header: step,coordinate,segment,score
inline void write_spike_events_csv(std::ostream& os, const std::vector<SpikeEvent>& events) {
    os << "step,coordinate,segment,score\n";
    for (const auto& e : events)
        os << e.step << ',' << e.coordinate << ',' << e.segment << ',' << fmt_double(e.score)
           << '\n';
}

// header: segment,total_spikes,total_params,ratio
inline void write_segment_stats_csv(std::ostream& os, const std::vector<SegmentSpikeStats>& stats) {
    os << "segment,total_spikes,total_params,ratio\n";
    for (const auto& s : stats)
        os << s.segment << ',' << s.total_spikes << ',' << s.total_params << ','
           << fmt_double(s.ratio) << '\n';
}

/// Reads a wide gradient-trace CSV: header `step,<label>,...`, one row per
/// step. Column positions become coordinate ids. A label's segment is the text
/// before its last '.', or "all" when it has none, so `w1.0,w1.1,b1.0` yields
/// segments w1 and b1. Lines starting with '#' are skipped.
inline GradientTrace read_trace_csv(std::istream& is) {
    std::string line;
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
    }
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "step")
        throw Error("trace csv: expected header 'step,<label>,...'");

    std::vector<std::size_t> coords;
    std::vector<std::string> labels;
    for (std::size_t c = 1; c < header.size(); ++c) {
        coords.push_back(c - 1);
        const std::string& name = header[c];
        const auto dot = name.rfind('.');
        labels.push_back(dot == std::string::npos ? "all" : name.substr(0, dot));
    }
    GradientTrace trace = GradientTrace::from_columns(coords, labels);

    std::vector<double> row(coords.size());
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw Error("trace csv: row has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
        for (std::size_t c = 1; c < fields.size(); ++c) row[c - 1] = std::stod(fields[c]);
        trace.record_tracked(row);
    }
    return trace;
}

inline GradientTrace read_trace_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open trace csv: " + path);
    return read_trace_csv(is);
}

}  // namespace spam
