// spamlab: experiment harness for the SPAM optimizer and the gradient-spike
// analysis toolkit. Exit codes: 0 success, 2 config error, 3 non-finite abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spam/spam.hpp"

namespace {

std::vector<std::string> split_values(const std::string& csv) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(csv);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

spam::ExperimentConfig load_with_overrides(const std::string& path,
                                           const std::vector<std::uint64_t>& seed_override,
                                           const std::string& out_dir, std::int64_t log_every) {
    spam::ExperimentConfig cfg = spam::load_config(path);
    if (!seed_override.empty()) cfg.seeds = seed_override;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (log_every > 0) cfg.log_every = log_every;
    return cfg;
}

void print_compare_table(const std::vector<spam::CompareRow>& rows) {
    std::printf("%-4s %-32s %14s %14s %10s %10s %10s\n", "rank", "config", "med_final",
                "med_regret", "clipped", "nullified", "injected");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        std::printf("%-4zu %-32s %14.6g %14.6g %10.0f %10.0f %10.0f\n", i + 1, r.name.c_str(),
                    r.median_final_loss, r.median_regret, r.median_clipped, r.median_nullified,
                    r.median_injected);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SPAM optimizer experiments and gradient-spike analysis"};
    app.require_subcommand(1);

    std::string out_dir;
    std::vector<std::uint64_t> seeds;
    std::int64_t log_every = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out-dir", out_dir, "output directory (overrides the config)");
        sub->add_option("--seed", seeds, "run only these seeds (overrides the config)");
        sub->add_option("--log-every", log_every, "metrics row cadence (overrides the config)");
    };

    auto* run_cmd = app.add_subcommand("run", "run one experiment config across its seeds");
    std::string run_config;
    run_cmd->add_option("config", run_config, "experiment config (json)")->required();
    add_common(run_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a one-parameter sweep");
    std::string sweep_config, sweep_param, sweep_values;
    sweep_cmd->add_option("config", sweep_config, "experiment config (json)")->required();
    sweep_cmd->add_option("--param", sweep_param, "knob to sweep")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required();
    add_common(sweep_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "rank several configs on a shared problem");
    std::vector<std::string> compare_configs;
    compare_cmd->add_option("configs", compare_configs, "experiment configs (json)")
        ->required()
        ->expected(-1);
    add_common(compare_cmd);

    auto* sim_cmd = app.add_subcommand("simulate-moments",
                                       "paired-draw spike impact simulation on Adam moments");
    spam::MomentSimConfig sim_cfg;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    sim_cmd->add_option("--mu", sim_cfg.mean, "gradient mean");
    sim_cmd->add_option("--var", sim_cfg.variance, "gradient variance");
    sim_cmd->add_option("--steps", sim_cfg.steps, "simulation steps");
    sim_cmd->add_option("--spike-step", sim_cfg.spike_step, "step receiving the spike");
    sim_cmd->add_option("--spike-mag", sim_cfg.spike_magnitude, "spike magnitude");
    sim_cmd->add_option("--beta1", sim_cfg.beta1, "first-moment decay");
    sim_cmd->add_option("--beta2", sim_cfg.beta2, "second-moment decay");
    sim_cmd->add_option("--sim-seed", sim_seed, "rng seed for the gradient stream");
    sim_cmd->add_option("--out", sim_out, "write the paired trajectories to this csv");

    auto* trace_cmd = app.add_subcommand("analyze-trace", "offline spike scan of a gradient trace");
    std::string trace_path;
    double trace_theta = 50.0;
    trace_cmd->add_option("trace", trace_path, "trace csv: header step,<label>,...")->required();
    trace_cmd->add_option("--theta", trace_theta, "detection threshold")->required();
    trace_cmd->add_option("--out-dir", out_dir, "directory for the event and stats csvs");

    try {
        app.parse(argc, argv);

        if (*run_cmd) {
            const auto cfg = load_with_overrides(run_config, seeds, out_dir, log_every);
            const auto results = spam::run_experiment(cfg);
            for (const auto& r : results)
                std::printf("seed %llu: final_loss=%.10g regret=%.10g -> %s\n",
                            static_cast<unsigned long long>(r.seed), r.final_loss, r.final_regret,
                            r.csv_path.c_str());
        } else if (*sweep_cmd) {
            auto cfg = load_with_overrides(sweep_config, seeds, out_dir, log_every);
            const auto values = split_values(sweep_values);
            const auto points = spam::sweep(cfg, sweep_param, values, cfg.out_dir, cfg.log_every);
            const auto summary_path = std::filesystem::path(cfg.out_dir) /
                                      (cfg.name + "_sweep_" + sweep_param + ".csv");
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream os(summary_path);
            spam::write_sweep_summary_csv(os, sweep_param, points);
            std::printf("%-16s %14s %14s\n", sweep_param.c_str(), "med_final", "iqr_final");
            for (const auto& p : points)
                std::printf("%-16s %14.6g %14.6g\n", p.value.c_str(), p.median_final_loss,
                            p.iqr_final_loss);
            std::printf("summary -> %s\n", summary_path.string().c_str());
        } else if (*compare_cmd) {
            std::vector<spam::ExperimentConfig> cfgs;
            for (const auto& path : compare_configs)
                cfgs.push_back(load_with_overrides(path, seeds, out_dir, log_every));
            const std::string dir = cfgs.front().out_dir;
            const auto rows = spam::compare(cfgs, dir, cfgs.front().log_every);
            std::filesystem::create_directories(dir);
            const auto csv_path = std::filesystem::path(dir) / "compare.csv";
            std::ofstream os(csv_path);
            spam::write_compare_csv(os, rows);
            print_compare_table(rows);
            std::printf("table -> %s\n", csv_path.string().c_str());
        } else if (*sim_cmd) {
            spam::RngStream rng(sim_seed, spam::Stream::moment_sim);
            const auto res = spam::simulate_moments(sim_cfg, rng);
            if (res.m_recovery_steps)
                std::printf("first moment recovered %lld steps after the spike\n",
                            static_cast<long long>(*res.m_recovery_steps));
            else
                std::printf("first moment not recovered within %lld steps\n",
                            static_cast<long long>(sim_cfg.steps - sim_cfg.spike_step));
            if (res.v_recovery_steps)
                std::printf("second moment recovered %lld steps after the spike\n",
                            static_cast<long long>(*res.v_recovery_steps));
            else
                std::printf("second moment not recovered within %lld steps\n",
                            static_cast<long long>(sim_cfg.steps - sim_cfg.spike_step));
            std::printf("final v_spiked / v_clean = %.6g\n",
                        res.v_spiked.back() / res.v_clean.back());
            if (!sim_out.empty()) {
                std::ofstream os(sim_out);
                if (!os) throw spam::Error("cannot open output file: " + sim_out);
                os << "step,m_clean,v_clean,m_spiked,v_spiked\n";
                for (std::int64_t t = 0; t < sim_cfg.steps; ++t)
                    os << t << ',' << spam::fmt_double(res.m_clean[t]) << ','
                       << spam::fmt_double(res.v_clean[t]) << ','
                       << spam::fmt_double(res.m_spiked[t]) << ','
                       << spam::fmt_double(res.v_spiked[t]) << '\n';
                std::printf("trajectories -> %s\n", sim_out.c_str());
            }
        } else if (*trace_cmd) {
            const auto trace = spam::read_trace_csv_file(trace_path);
            const auto events = spam::detect_spikes(trace, trace_theta);
            const auto stats = spam::segment_stats(events, trace);
            const std::string dir = out_dir.empty() ? "." : out_dir;
            std::filesystem::create_directories(dir);
            const auto stem = std::filesystem::path(trace_path).stem().string();
            const auto events_path = std::filesystem::path(dir) / (stem + "_events.csv");
            const auto stats_path = std::filesystem::path(dir) / (stem + "_segment_stats.csv");
            {
                std::ofstream os(events_path);
                spam::write_spike_events_csv(os, events);
            }
            {
                std::ofstream os(stats_path);
                spam::write_segment_stats_csv(os, stats);
            }
            std::printf("%zu events over %zu steps x %zu coordinates (theta=%g)\n", events.size(),
                        trace.steps(), trace.tracked().size(), trace_theta);
            for (const auto& s : stats)
                std::printf("  %-16s spikes=%zu traced=%zu ratio=%.6g\n", s.segment.c_str(),
                            s.total_spikes, s.total_params, s.ratio);
            std::printf("events -> %s\nstats  -> %s\n", events_path.string().c_str(),
                        stats_path.string().c_str());
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const spam::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const spam::UnknownParameter& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const spam::IncomparableConfigs& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const spam::NonFiniteAbort& e) {
        std::fprintf(stderr, "aborted: %s\n", e.what());
        return 3;
    } catch (const spam::NonFiniteGradient& e) {
        std::fprintf(stderr, "aborted: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
