#pragma once

#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "spam/config.hpp"
#include "spam/csv.hpp"
#include "spam/errors.hpp"
#include "spam/runner.hpp"
#include "spam/stats.hpp"

namespace spam {

/// Recognized sweep knobs. String values are parsed per knob; a bad value for
/// a known knob is a config error, an unknown knob name is UnknownParameter.
inline ExperimentConfig apply_knob(ExperimentConfig cfg, const std::string& param,
                                   const std::string& value) {
    auto as_double = [&](const char* what) {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ConfigError({std::string("sweep value '") + value + "' is not a valid " + what});
        }
    };
    auto as_int = [&](const char* what) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
            return v;
        } catch (const std::exception&) {
            throw ConfigError({std::string("sweep value '") + value + "' is not a valid " + what});
        }
    };

    if (param == "theta") {
        cfg.optimizer.spam.gss_threshold =
            (value == "inf" || value == "infinity") ? std::numeric_limits<double>::infinity()
                                                    : as_double("theta");
        if (!(cfg.optimizer.spam.gss_threshold > 0.0))
            throw ConfigError({"sweep theta must be > 0"});
    } else if (param == "reset_interval") {
        cfg.optimizer.spam.reset_interval = as_int("reset interval");
        if (cfg.optimizer.spam.reset_interval < 1)
            throw ConfigError({"sweep reset_interval must be >= 1"});
    } else if (param == "warmup_steps") {
        cfg.optimizer.spam.warmup_steps = as_int("warmup step count");
        if (cfg.optimizer.spam.warmup_steps < 0)
            throw ConfigError({"sweep warmup_steps must be >= 0"});
    } else if (param == "density") {
        cfg.optimizer.spam.density = as_double("density");
        if (!(cfg.optimizer.spam.density > 0.0) || cfg.optimizer.spam.density > 1.0)
            throw ConfigError({"sweep density must be in (0, 1]"});
    } else if (param == "mask_strategy") {
        if (value == "random")
            cfg.optimizer.spam.mask_strategy = MaskStrategy::random;
        else if (value == "max_weight")
            cfg.optimizer.spam.mask_strategy = MaskStrategy::max_weight;
        else if (value == "max_gradient")
            cfg.optimizer.spam.mask_strategy = MaskStrategy::max_gradient;
        else
            throw ConfigError({"sweep mask_strategy value '" + value + "' is not recognized"});
    } else if (param == "lr") {
        cfg.optimizer.spam.adam.lr = as_double("learning rate");
        if (!(cfg.optimizer.spam.adam.lr > 0.0)) throw ConfigError({"sweep lr must be > 0"});
    } else {
        throw UnknownParameter("unknown sweep parameter '" + param + "'");
    }
    return cfg;
}

struct SweepPoint {
    std::string value;
    double median_final_loss = 0.0;
    double iqr_final_loss = 0.0;
    std::vector<RunResult> runs;
};

/// Cross product of values x seeds; per-run CSVs land next to the summary.
inline std::vector<SweepPoint> sweep(const ExperimentConfig& base, const std::string& param,
                                     const std::vector<std::string>& values,
                                     const std::string& out_dir = "",
                                     std::int64_t log_every = 0) {
    if (values.empty()) throw ConfigError({"sweep needs at least one value"});
    std::vector<SweepPoint> points;
    points.reserve(values.size());
    for (const std::string& value : values) {
        ExperimentConfig cfg = apply_knob(base, param, value);
        cfg.name = base.name + "_" + param + "_" + value;
        SweepPoint point;
        point.value = value;
        point.runs = run_experiment(cfg, out_dir, log_every);
        std::vector<double> finals;
        finals.reserve(point.runs.size());
        for (const auto& r : point.runs) finals.push_back(r.final_loss);
        point.median_final_loss = median(finals);
        point.iqr_final_loss = iqr(finals);
        points.push_back(std::move(point));
    }
    return points;
}

// header: param,value,median_final_loss,iqr_final_loss,num_seeds
inline void write_sweep_summary_csv(std::ostream& os, const std::string& param,
                                    const std::vector<SweepPoint>& points) {
    os << "param,value,median_final_loss,iqr_final_loss,num_seeds\n";
    for (const auto& p : points)
        os << param << ',' << p.value << ',' << fmt_double(p.median_final_loss) << ','
           << fmt_double(p.iqr_final_loss) << ',' << p.runs.size() << '\n';
}

}  // namespace spam
