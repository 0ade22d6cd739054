#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spam/adam.hpp"
#include "spam/clipping.hpp"
#include "spam/config.hpp"
#include "spam/csv.hpp"
#include "spam/errors.hpp"
#include "spam/injectors.hpp"
#include "spam/param_store.hpp"
#include "spam/problems.hpp"
#include "spam/rng.hpp"
#include "spam/schedule.hpp"
#include "spam/spam_optimizer.hpp"
#include "spam/spike_lab.hpp"

namespace spam {

/// One metrics row. Columns are fixed and ordered; the wall-time column is the
/// only one excluded from determinism guarantees.
struct MetricsRecord {
    std::int64_t step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double update_norm = 0.0;
    double warmup_scale = 1.0;
    std::size_t clipped_count = 0;
    std::size_t nullified_count = 0;
    std::size_t injected_count = 0;
    double moment_m_l1 = 0.0;
    double moment_v_l1 = 0.0;
    double wall_time_per_step = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "step,loss,grad_norm,update_norm,warmup_scale,clipped_count,nullified_count,"
    "injected_count,moment_m_l1,moment_v_l1,wall_time_per_step";

inline void write_metrics_row(std::ostream& os, const MetricsRecord& r) {
    os << r.step << ',' << fmt_double(r.loss) << ',' << fmt_double(r.grad_norm) << ','
       << fmt_double(r.update_norm) << ',' << fmt_double(r.warmup_scale) << ','
       << r.clipped_count << ',' << r.nullified_count << ',' << r.injected_count << ','
       << fmt_double(r.moment_m_l1) << ',' << fmt_double(r.moment_v_l1) << ','
       << fmt_double(r.wall_time_per_step) << '\n';
}

/// Uniform facade over the optimizer zoo: plain Adam, Adam behind one of the
/// gradient preprocessors, or the full sparse optimizer.
class OptimizerRunner {
public:
    OptimizerRunner(const OptimizerSpec& spec, std::size_t n, RngStream mask_rng) : spec_(spec) {
        if (spec.type == "spam") {
            spam_.emplace(spec.spam, n, mask_rng);
        } else {
            adam_.emplace(spec.spam.adam, n);
            if (spec.type == "adam_gaussian_clip")
                gauss_.emplace(n, spec.gaussian_decay);
            else if (spec.type == "adam_nullify")
                nullify_.emplace(n, spec.nullify_theta);
        }
    }

    /// Preprocesses the gradient in place per the optimizer flavor, then takes
    /// one step at the given learning rate.
    StepReport step(ParameterStore& store, std::vector<double>& grad, double lr) {
        if (spam_) return spam_->step(store, grad, lr);
        StepReport pre;
        if (spec_.type == "adam_value_clip") {
            pre.clipped_count = value_clip_inplace(grad, spec_.value_clip_threshold);
        } else if (spec_.type == "adam_norm_clip") {
            pre.clipped_count = norm_clip_inplace(grad, spec_.norm_clip_max);
        } else if (spec_.type == "adam_gaussian_clip") {
            if (!gauss_->seeded()) {
                gauss_->observe(grad);
            } else {
                raw_.assign(grad.begin(), grad.end());
                pre.clipped_count = gaussian_clip_inplace(grad, gauss_->mean(), gauss_->variance());
                gauss_->observe(raw_);
            }
        } else if (spec_.type == "adam_nullify") {
            pre.nullified_count = nullify_->apply(grad);
        }
        StepReport rep = adam_->step(store, grad, lr);
        rep.clipped_count = pre.clipped_count;
        rep.nullified_count = pre.nullified_count;
        return rep;
    }

    double moment_m_l1() const {
        double acc = 0.0;
        for (double m : moments_m()) acc += std::fabs(m);
        return acc;
    }

    double moment_v_l1() const {
        double acc = 0.0;
        for (double v : moments_v()) acc += std::fabs(v);
        return acc;
    }

    const std::vector<double>& moments_m() const {
        return spam_ ? spam_->first_moment() : adam_->first_moment();
    }
    const std::vector<double>& moments_v() const {
        return spam_ ? spam_->second_moment() : adam_->second_moment();
    }
    const SpamOptimizer* spam_optimizer() const { return spam_ ? &*spam_ : nullptr; }

private:
    OptimizerSpec spec_;
    std::optional<DenseAdam> adam_;
    std::optional<SpamOptimizer> spam_;
    std::optional<GaussianStats> gauss_;
    std::optional<NullifyFilter> nullify_;
    std::vector<double> raw_;
};

struct RunResult {
    std::uint64_t seed = 0;
    std::string csv_path;
    double final_loss = 0.0;
    double final_regret = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> losses;  // pre-update loss trajectory f(w_t), t = 0..T-1
    std::size_t total_clipped = 0;
    std::size_t total_nullified = 0;
    std::size_t total_injected = 0;
};

inline Problem make_problem(const ProblemSpec& spec, std::uint64_t seed) {
    RngStream rng(seed, Stream::problem_data);
    if (spec.type == "quadratic") return quadratic_problem(spec.dimension, spec.condition, rng);
    if (spec.type == "logistic")
        return logistic_problem(spec.features, spec.samples, rng, spec.batch_size);
    if (spec.type == "mlp") return mlp_problem(spec.widths, spec.samples, rng, spec.batch_size);
    throw ConfigError({"problem.type: unknown problem '" + spec.type + "'"});
}

namespace detail {

/// Convex optimum values are expensive to pin down; cache them per problem
/// signature + seed within the process.
inline std::optional<double> problem_optimum(const Problem& problem, const ProblemSpec& spec,
                                             std::uint64_t seed) {
    if (!problem.optimum_value && spec.type != "logistic") return std::nullopt;
    if (problem.optimum_value) return problem.optimum_value;
    static std::map<std::string, double> cache;
    std::ostringstream key;
    key << spec.type << '/' << spec.features << '/' << spec.samples << '/' << seed;
    auto it = cache.find(key.str());
    if (it != cache.end()) return it->second;
    const double value = optimum_by_descent(problem);
    cache.emplace(key.str(), value);
    return value;
}

}  // namespace detail

/// One deterministic run: fetch batch, evaluate the (possibly corrupted)
/// gradient, inject spikes, step the optimizer under the composed learning
/// rate, and log. Every emitted byte except the wall-time column is a pure
/// function of (config, seed).
inline RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir, std::int64_t log_every) {
    const Problem problem = make_problem(cfg.problem, seed);
    const auto optimum = detail::problem_optimum(problem, cfg.problem, seed);

    ParameterStore store = make_store(problem.segment_spec);
    RngStream init_rng(seed, Stream::init);
    store.values = problem.initial_point(init_rng);

    RngStream batch_rng(seed, Stream::batches);
    SpikeInjector spikes(cfg.injectors.spike_probability, cfg.injectors.spike_factor,
                         RngStream(seed, Stream::spike_injection));
    AnomalyInjector corruption(cfg.injectors.corruption_probability,
                               cfg.injectors.corruption_severity,
                               RngStream(seed, Stream::corruption));
    AnomalyInjector* corruptor = cfg.injectors.corruption_severity > 0.0 ? &corruption : nullptr;
    OptimizerRunner opt(cfg.optimizer, store.size(), RngStream(seed, Stream::mask_sampling));

    std::filesystem::create_directories(out_dir);
    RunResult result;
    result.seed = seed;
    result.csv_path =
        (std::filesystem::path(out_dir) / (cfg.name + "_seed" + std::to_string(seed) + ".csv"))
            .string();
    std::ofstream os(result.csv_path);
    if (!os) throw Error("cannot open output file: " + result.csv_path);
    os << "# name=" << cfg.name << " seed=" << seed << " problem=" << cfg.problem.type
       << " optimizer=" << cfg.optimizer.type << " optimum="
       << (optimum ? fmt_double(*optimum) : std::string("unknown")) << "\n";
    os << kMetricsHeader << "\n";

    result.losses.reserve(static_cast<std::size_t>(cfg.steps));
    std::vector<double> grad;
    for (std::int64_t t = 0; t < cfg.steps; ++t) {
        const auto tick = std::chrono::steady_clock::now();

        const double loss_before = problem.loss(store.values);
        if (!std::isfinite(loss_before)) throw NonFiniteAbort("non-finite loss", t);
        result.losses.push_back(loss_before);

        const std::uint64_t batch_seed = batch_rng.next_u64();
        grad = problem.gradient(store.values, batch_seed, corruptor);
        const auto hits = inject_spikes(grad, spikes);

        double grad_norm2 = 0.0;
        for (double g : grad) grad_norm2 += g * g;

        const double lr =
            global_lr(t, cfg.optimizer.spam.adam.lr, cfg.schedule.warmup_steps, cfg.steps,
                      cfg.schedule.floor);
        StepReport rep;
        try {
            rep = opt.step(store, grad, lr);
        } catch (const NonFiniteGradient& e) {
            throw NonFiniteAbort(e.what(), t);
        }

        result.total_clipped += rep.clipped_count;
        result.total_nullified += rep.nullified_count;
        result.total_injected += hits.size();

        const auto tock = std::chrono::steady_clock::now();
        if ((t + 1) % log_every == 0 || t + 1 == cfg.steps) {
            MetricsRecord row;
            row.step = t + 1;
            row.loss = problem.loss(store.values);
            if (!std::isfinite(row.loss)) throw NonFiniteAbort("non-finite loss", t + 1);
            row.grad_norm = std::sqrt(grad_norm2);
            row.update_norm = rep.update_norm;
            row.warmup_scale = rep.warmup_scale;
            row.clipped_count = rep.clipped_count;
            row.nullified_count = rep.nullified_count;
            row.injected_count = hits.size();
            row.moment_m_l1 = opt.moment_m_l1();
            row.moment_v_l1 = opt.moment_v_l1();
            row.wall_time_per_step = std::chrono::duration<double>(tock - tick).count();
            write_metrics_row(os, row);
            if (t + 1 == cfg.steps) result.final_loss = row.loss;
        }
    }
    if (cfg.steps == 0) result.final_loss = problem.loss(store.values);
    if (optimum && !result.losses.empty())
        result.final_regret = regret(result.losses, *optimum).back();
    return result;
}

inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg,
                                             const std::string& out_dir = "",
                                             std::int64_t log_every = 0) {
    const std::string dir = out_dir.empty() ? cfg.out_dir : out_dir;
    const std::int64_t every = log_every > 0 ? log_every : cfg.log_every;
    std::vector<RunResult> results;
    results.reserve(cfg.seeds.size());
    for (std::uint64_t seed : cfg.seeds) results.push_back(run_single(cfg, seed, dir, every));
    return results;
}

}  // namespace spam
