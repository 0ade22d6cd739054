#pragma once

#include <algorithm>
#include <cmath>
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

struct CompareRow {
    std::string name;
    double median_final_loss = 0.0;
    double median_regret = 0.0;
    double median_clipped = 0.0;
    double median_nullified = 0.0;
    double median_injected = 0.0;
    std::vector<RunResult> runs;
};

/// Runs every config on the shared problem/seeds/injectors and ranks them by
/// median final loss (ties keep config order).
inline std::vector<CompareRow> compare(const std::vector<ExperimentConfig>& cfgs,
                                       const std::string& out_dir = "",
                                       std::int64_t log_every = 0) {
    if (cfgs.empty()) throw IncomparableConfigs("compare needs at least one config");
    for (const auto& cfg : cfgs) {
        if (!(cfg.problem == cfgs.front().problem))
            throw IncomparableConfigs("configs disagree on the problem");
        if (cfg.seeds != cfgs.front().seeds)
            throw IncomparableConfigs("configs disagree on the seeds");
        if (!(cfg.injectors == cfgs.front().injectors))
            throw IncomparableConfigs("configs disagree on the injectors");
        if (cfg.steps != cfgs.front().steps)
            throw IncomparableConfigs("configs disagree on the step count");
    }

    std::vector<CompareRow> rows;
    rows.reserve(cfgs.size());
    for (const auto& cfg : cfgs) {
        CompareRow row;
        row.name = cfg.name;
        row.runs = run_experiment(cfg, out_dir, log_every);
        std::vector<double> finals, regrets, clipped, nullified, injected;
        for (const auto& r : row.runs) {
            finals.push_back(r.final_loss);
            regrets.push_back(r.final_regret);
            clipped.push_back(static_cast<double>(r.total_clipped));
            nullified.push_back(static_cast<double>(r.total_nullified));
            injected.push_back(static_cast<double>(r.total_injected));
        }
        row.median_final_loss = median(finals);
        const bool regret_known =
            std::none_of(regrets.begin(), regrets.end(), [](double x) { return std::isnan(x); });
        row.median_regret =
            regret_known ? median(regrets) : std::numeric_limits<double>::quiet_NaN();
        row.median_clipped = median(clipped);
        row.median_nullified = median(nullified);
        row.median_injected = median(injected);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
        return a.median_final_loss < b.median_final_loss;
    });
    return rows;
}

// header: rank,name,median_final_loss,median_regret,median_clipped,median_nullified,median_injected
inline void write_compare_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
    os << "rank,name,median_final_loss,median_regret,median_clipped,median_nullified,"
          "median_injected\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        os << (i + 1) << ',' << r.name << ',' << fmt_double(r.median_final_loss) << ','
           << fmt_double(r.median_regret) << ',' << fmt_double(r.median_clipped) << ','
           << fmt_double(r.median_nullified) << ',' << fmt_double(r.median_injected) << '\n';
    }
}

}  // namespace spam
