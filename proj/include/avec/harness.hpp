#pragma once

#include <string>
#include <vector>

#include "avec/config.hpp"

namespace avec {

/// Creates the run directory, persists the resolved config, runs training.
/// Returns the run directory. Throws ConfigError for bad configs and
/// propagates training failures after writing a failure marker; partial logs
/// stay parseable either way.
std::string run_experiment(const RunConfig& cfg, const std::string& out_dir = "");

/// Launches n_seeds runs (seeds first_seed, first_seed+1, ...), each in its
/// own subdirectory `s<seed>` of out_root, with up to `workers` running
/// concurrently. Returns the run directories in seed order.
std::vector<std::string> sweep(const RunConfig& base, std::size_t n_seeds,
                               std::uint64_t first_seed, const std::string& out_root,
                               std::size_t workers = 1);

struct SideStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample convention over seeds; 0 for a single run
    std::size_t n_runs = 0;
    bool single_seed_warn = false;
    std::vector<double> per_run;  // sorted final-window returns
};

struct ComparisonSummary {
    std::string env, algo;
    SideStats baseline, variant;
    double percent_change = 0.0;
    std::string to_text() const;
    std::string to_json() const;
};

/// Final-window statistics (mean return of the last up-to-100 episodes per
/// run) for both sides plus the percent change of the variant over the
/// baseline. All runs must share env and algo.
ComparisonSummary compare(const std::vector<std::string>& baseline_dirs,
                          const std::vector<std::string>& variant_dirs);

/// Long-format (step, seed, value) extraction of one metrics column across
/// runs, plus a companion per-step mean/std series. Throws listing the
/// available quantities if the requested one is absent.
void emit_plot_data(const std::vector<std::string>& run_dirs, const std::string& quantity,
                    const std::string& out_path);

}  // namespace avec
