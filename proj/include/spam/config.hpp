#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spam/errors.hpp"
#include "spam/spam_optimizer.hpp"

namespace spam {

struct ProblemSpec {
    std::string type;  // quadratic | logistic | mlp
    // quadratic
    std::size_t dimension = 50;
    double condition = 100.0;
    // logistic / mlp
    std::size_t features = 100;
    std::size_t samples = 512;
    std::size_t batch_size = 32;
    std::vector<std::size_t> widths;  // mlp

    bool operator==(const ProblemSpec&) const = default;
};

struct OptimizerSpec {
    // adam | adam_value_clip | adam_norm_clip | adam_gaussian_clip | adam_nullify | spam
    std::string type = "adam";
    SpamConfig spam;  // holds the Adam settings too
    double value_clip_threshold = 1e-3;
    double norm_clip_max = 1.0;
    double gaussian_decay = 0.99;
    double nullify_theta = 50.0;
};

struct ScheduleSpec {
    std::int64_t warmup_steps = 100;
    double floor = 0.1;

    bool operator==(const ScheduleSpec&) const = default;
};

struct InjectorSpec {
    double spike_probability = 0.0;
    double spike_factor = 1000.0;
    double corruption_probability = 0.10;
    double corruption_severity = 0.0;

    bool operator==(const InjectorSpec&) const = default;
};

struct ExperimentConfig {
    int version = 1;
    std::string name;
    ProblemSpec problem;
    OptimizerSpec optimizer;
    std::int64_t steps = 5000;
    ScheduleSpec schedule;
    std::vector<std::uint64_t> seeds;
    InjectorSpec injectors;
    std::int64_t log_every = 10;
    std::string out_dir = ".";
};

namespace detail {

/// Strict object reader: every unknown key is an error, every type mismatch is
/// an error, and all of them are collected rather than thrown one by one.
class JsonReader {
public:
    JsonReader(const nlohmann::json& obj, std::string path, std::vector<std::string>& issues)
        : obj_(obj), path_(std::move(path)), issues_(issues) {
        if (!obj_.is_object()) issues_.push_back(path_ + ": expected an object");
    }

    ~JsonReader() {
        if (!obj_.is_object()) return;
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key()))
                issues_.push_back(path_ + ": unknown key '" + it.key() + "'");
        }
    }

    bool has(const std::string& key) {
        return obj_.is_object() && obj_.contains(key);
    }

    const nlohmann::json* claim(const std::string& key) {
        seen_.insert(key);
        if (!has(key)) return nullptr;
        return &obj_.at(key);
    }

    template <typename T>
    void opt(const std::string& key, T& out) {
        const auto* j = claim(key);
        if (!j) return;
        try {
            out = j->get<T>();
        } catch (const nlohmann::json::exception&) {
            issues_.push_back(path_ + "." + key + ": wrong type");
        }
    }

    void opt_theta(const std::string& key, double& out) {
        const auto* j = claim(key);
        if (!j) return;
        if (j->is_string()) {
            const auto s = j->get<std::string>();
            if (s == "inf" || s == "infinity") {
                out = std::numeric_limits<double>::infinity();
                return;
            }
            issues_.push_back(path_ + "." + key + ": expected a number or \"inf\"");
            return;
        }
        if (j->is_number()) {
            out = j->get<double>();
            return;
        }
        issues_.push_back(path_ + "." + key + ": expected a number or \"inf\"");
    }

    template <typename T>
    bool require(const std::string& key, T& out) {
        const auto* j = claim(key);
        if (!j) {
            issues_.push_back(path_ + "." + key + ": missing");
            return false;
        }
        try {
            out = j->get<T>();
            return true;
        } catch (const nlohmann::json::exception&) {
            issues_.push_back(path_ + "." + key + ": wrong type");
            return false;
        }
    }

    void check(bool ok, const std::string& message) {
        if (!ok) issues_.push_back(path_ + ": " + message);
    }

    const nlohmann::json& raw() const { return obj_; }
    const std::string& path() const { return path_; }
    std::vector<std::string>& issues() { return issues_; }

private:
    const nlohmann::json& obj_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
};

inline void parse_enum(JsonReader& r, const std::string& key, const std::string& got,
                       const std::vector<std::string>& allowed) {
    for (const auto& a : allowed)
        if (got == a) return;
    std::string msg = r.path() + "." + key + ": must be one of {";
    for (std::size_t i = 0; i < allowed.size(); ++i)
        msg += (i ? ", " : "") + allowed[i];
    msg += "}";
    r.issues().push_back(msg);
}

inline ProblemSpec parse_problem(const nlohmann::json& j, std::vector<std::string>& issues) {
    ProblemSpec spec;
    JsonReader r(j, "problem", issues);
    if (!r.require("type", spec.type)) return spec;
    if (spec.type == "quadratic") {
        r.opt("dimension", spec.dimension);
        r.opt("condition", spec.condition);
        r.check(spec.dimension >= 1, "dimension must be >= 1");
        r.check(spec.condition >= 1.0, "condition must be >= 1");
    } else if (spec.type == "logistic") {
        r.opt("features", spec.features);
        r.opt("samples", spec.samples);
        r.opt("batch_size", spec.batch_size);
        r.check(spec.features >= 1, "features must be >= 1");
        r.check(spec.samples >= 1, "samples must be >= 1");
        r.check(spec.batch_size >= 1, "batch_size must be >= 1");
    } else if (spec.type == "mlp") {
        r.require("widths", spec.widths);
        r.opt("samples", spec.samples);
        r.opt("batch_size", spec.batch_size);
        r.check(spec.widths.size() >= 3, "widths needs at least one hidden layer");
        for (std::size_t w : spec.widths) r.check(w >= 1, "layer widths must be >= 1");
        r.check(spec.samples >= 1, "samples must be >= 1");
        r.check(spec.batch_size >= 1, "batch_size must be >= 1");
    } else {
        issues.push_back("problem.type: unknown problem '" + spec.type + "'");
    }
    return spec;
}

inline OptimizerSpec parse_optimizer(const nlohmann::json& j, std::vector<std::string>& issues) {
    OptimizerSpec spec;
    JsonReader r(j, "optimizer", issues);
    if (!r.require("type", spec.type)) return spec;
    const std::set<std::string> known = {"adam",        "adam_value_clip",    "adam_norm_clip",
                                         "adam_gaussian_clip", "adam_nullify", "spam"};
    if (!known.count(spec.type)) {
        issues.push_back("optimizer.type: unknown optimizer '" + spec.type + "'");
        return spec;
    }

    r.opt("lr", spec.spam.adam.lr);
    r.opt("beta1", spec.spam.adam.beta1);
    r.opt("beta2", spec.spam.adam.beta2);
    r.opt("eps", spec.spam.adam.eps);
    r.opt("weight_decay", spec.spam.weight_decay);
    r.check(spec.spam.adam.lr > 0.0, "lr must be > 0");
    r.check(spec.spam.adam.beta1 >= 0.0 && spec.spam.adam.beta1 < 1.0, "beta1 must be in [0,1)");
    r.check(spec.spam.adam.beta2 >= 0.0 && spec.spam.adam.beta2 < 1.0, "beta2 must be in [0,1)");
    r.check(spec.spam.adam.eps > 0.0, "eps must be > 0");
    r.check(spec.spam.weight_decay >= 0.0, "weight_decay must be >= 0");

    if (spec.type == "spam") {
        r.opt("reset_interval", spec.spam.reset_interval);
        r.opt("warmup_steps", spec.spam.warmup_steps);
        r.opt_theta("theta", spec.spam.gss_threshold);
        r.opt("density", spec.spam.density);
        std::string mode = "clip", strategy = "random", policy = "raw_sgd", clock = "global";
        r.opt("spike_mode", mode);
        r.opt("mask_strategy", strategy);
        r.opt("unmasked_policy", policy);
        r.opt("bias_correction_clock", clock);
        parse_enum(r, "spike_mode", mode, {"clip", "nullify"});
        parse_enum(r, "mask_strategy", strategy, {"random", "max_weight", "max_gradient"});
        parse_enum(r, "unmasked_policy", policy, {"raw_sgd", "frozen"});
        parse_enum(r, "bias_correction_clock", clock, {"global", "since_reset"});
        spec.spam.spike_mode = mode == "nullify" ? SpikeMode::nullify : SpikeMode::clip;
        spec.spam.mask_strategy = strategy == "max_weight"     ? MaskStrategy::max_weight
                                  : strategy == "max_gradient" ? MaskStrategy::max_gradient
                                                               : MaskStrategy::random;
        spec.spam.unmasked_policy =
            policy == "frozen" ? UnmaskedPolicy::frozen : UnmaskedPolicy::raw_sgd;
        spec.spam.bias_clock = clock == "since_reset" ? BiasCorrectionClock::since_reset
                                                      : BiasCorrectionClock::global;
        r.check(spec.spam.reset_interval >= 1, "reset_interval must be >= 1");
        r.check(spec.spam.warmup_steps >= 0, "warmup_steps must be >= 0");
        r.check(spec.spam.gss_threshold > 0.0, "theta must be > 0");
        r.check(spec.spam.density > 0.0 && spec.spam.density <= 1.0,
                "density must be in (0, 1]");
    } else if (spec.type == "adam_value_clip") {
        r.opt("value_clip_threshold", spec.value_clip_threshold);
        r.check(spec.value_clip_threshold > 0.0, "value_clip_threshold must be > 0");
    } else if (spec.type == "adam_norm_clip") {
        r.opt("norm_clip_max", spec.norm_clip_max);
        r.check(spec.norm_clip_max > 0.0, "norm_clip_max must be > 0");
    } else if (spec.type == "adam_gaussian_clip") {
        r.opt("gaussian_decay", spec.gaussian_decay);
        r.check(spec.gaussian_decay > 0.0 && spec.gaussian_decay < 1.0,
                "gaussian_decay must be in (0, 1)");
    } else if (spec.type == "adam_nullify") {
        r.opt("nullify_theta", spec.nullify_theta);
        r.check(spec.nullify_theta > 0.0, "nullify_theta must be > 0");
    }
    return spec;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    std::vector<std::string> issues;
    ExperimentConfig cfg;
    {
        detail::JsonReader r(j, "config", issues);
        r.require("version", cfg.version);
        r.check(cfg.version == 1, "version must be 1");
        r.require("name", cfg.name);
        r.check(!cfg.name.empty(), "name must not be empty");

        if (const auto* jp = r.claim("problem"))
            cfg.problem = detail::parse_problem(*jp, issues);
        else
            issues.push_back("config.problem: missing");

        if (const auto* jo = r.claim("optimizer"))
            cfg.optimizer = detail::parse_optimizer(*jo, issues);
        else
            issues.push_back("config.optimizer: missing");

        r.opt("steps", cfg.steps);
        r.check(cfg.steps >= 1, "steps must be >= 1");

        if (const auto* js = r.claim("schedule")) {
            detail::JsonReader rs(*js, "schedule", issues);
            rs.opt("warmup_steps", cfg.schedule.warmup_steps);
            rs.opt("floor", cfg.schedule.floor);
            rs.check(cfg.schedule.warmup_steps >= 0, "warmup_steps must be >= 0");
            rs.check(cfg.schedule.floor >= 0.0 && cfg.schedule.floor <= 1.0,
                     "floor must be in [0, 1]");
        }
        r.check(cfg.schedule.warmup_steps < cfg.steps, "schedule warmup must be < steps");

        r.require("seeds", cfg.seeds);
        r.check(!cfg.seeds.empty(), "seeds must not be empty");
        {
            std::set<std::uint64_t> uniq(cfg.seeds.begin(), cfg.seeds.end());
            r.check(uniq.size() == cfg.seeds.size(), "seeds must be distinct");
        }

        if (const auto* ji = r.claim("injectors")) {
            detail::JsonReader ri(*ji, "injectors", issues);
            if (const auto* jsp = ri.claim("spike")) {
                detail::JsonReader rsp(*jsp, "injectors.spike", issues);
                rsp.opt("probability", cfg.injectors.spike_probability);
                rsp.opt("factor", cfg.injectors.spike_factor);
                rsp.check(cfg.injectors.spike_probability >= 0.0 &&
                              cfg.injectors.spike_probability <= 1.0,
                          "probability must be in [0, 1]");
                rsp.check(cfg.injectors.spike_factor >= 1.0, "factor must be >= 1");
            }
            if (const auto* jco = ri.claim("corruption")) {
                detail::JsonReader rco(*jco, "injectors.corruption", issues);
                rco.opt("probability", cfg.injectors.corruption_probability);
                rco.opt("severity", cfg.injectors.corruption_severity);
                rco.check(cfg.injectors.corruption_probability >= 0.0 &&
                              cfg.injectors.corruption_probability <= 1.0,
                          "probability must be in [0, 1]");
                rco.check(cfg.injectors.corruption_severity >= 0.0, "severity must be >= 0");
            }
        }

        r.opt("log_every", cfg.log_every);
        r.check(cfg.log_every >= 1, "log_every must be >= 1");
        r.opt("out_dir", cfg.out_dir);
    }
    if (!issues.empty()) throw ConfigError(issues);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError({"cannot open config file: " + path});
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError({"config is not valid JSON: " + std::string(e.what())});
    }
    return parse_config(j);
}

}  // namespace spam
