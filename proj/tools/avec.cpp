// Command-line front end: run, sweep, compare, diagnose, emit-plot-data.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "avec/harness.hpp"
#include "avec/metrics.hpp"
#include "avec/train.hpp"

namespace {

avec::RunConfig resolve_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
    avec::RunConfig cfg =
        config_path.empty() ? avec::RunConfig{} : avec::load_config_file(config_path);
    for (const std::string& o : overrides) avec::apply_override(cfg, o);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avec: actor-critic laboratory with a residual-variance critic"};
    app.require_subcommand(1);

    std::string config_path, out_dir, quantity, run_dir, out_file, json_out;
    std::vector<std::string> overrides, baseline_dirs, variant_dirs, run_dirs;
    std::size_t n_seeds = 6, workers = 1, budget = 0;
    std::uint64_t first_seed = 0;
    long ckpt_step = -1;

    auto* run_cmd = app.add_subcommand("run", "run one training configuration");
    run_cmd->add_option("--config", config_path, "config file");
    run_cmd->add_option("--set", overrides, "key=value override (repeatable)");
    run_cmd->add_option("--out", out_dir, "output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a seed sweep");
    sweep_cmd->add_option("--config", config_path, "config file");
    sweep_cmd->add_option("--set", overrides, "key=value override (repeatable)");
    sweep_cmd->add_option("--out", out_dir, "output root directory");
    sweep_cmd->add_option("--seeds", n_seeds, "number of seeds (default 6)");
    sweep_cmd->add_option("--first-seed", first_seed, "first seed (default 0)");
    sweep_cmd->add_option("--workers", workers, "parallel workers (default 1)");

    auto* cmp_cmd = app.add_subcommand("compare", "baseline-vs-variant summary");
    cmp_cmd->add_option("--baseline", baseline_dirs, "baseline run dirs")->required();
    cmp_cmd->add_option("--variant", variant_dirs, "variant run dirs")->required();
    cmp_cmd->add_option("--json", json_out, "also write the summary as JSON");

    auto* diag_cmd = app.add_subcommand("diagnose", "re-run diagnostics on a checkpoint");
    diag_cmd->add_option("--run", run_dir, "run directory")->required();
    diag_cmd->add_option("--step", ckpt_step, "checkpoint step (default: final)");
    diag_cmd->add_option("--budget", budget, "override the transition budget");

    auto* plot_cmd = app.add_subcommand("emit-plot-data", "long-format metric extraction");
    plot_cmd->add_option("--run", run_dirs, "run directories")->required();
    plot_cmd->add_option("--quantity", quantity, "metrics column")->required();
    plot_cmd->add_option("--out", out_file, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            avec::RunConfig cfg = resolve_config(config_path, overrides);
            std::string dir = avec::run_experiment(cfg, out_dir);
            std::cout << "run complete: " << dir << "\n";
        } else if (*sweep_cmd) {
            avec::RunConfig cfg = resolve_config(config_path, overrides);
            std::string root = !out_dir.empty()         ? out_dir
                               : !cfg.out.empty()       ? cfg.out
                                                        : cfg.default_out_dir() + "_sweep";
            auto dirs = avec::sweep(cfg, n_seeds, first_seed, root, workers);
            for (const auto& d : dirs) std::cout << d << "\n";
        } else if (*cmp_cmd) {
            avec::ComparisonSummary sum = avec::compare(baseline_dirs, variant_dirs);
            std::cout << sum.to_text();
            if (!json_out.empty()) {
                std::ofstream f(json_out);
                f << sum.to_json() << "\n";
            }
        } else if (*diag_cmd) {
            avec::RunConfig cfg = avec::load_config_file(run_dir + "/config.cfg");
            std::string ckpt = ckpt_step < 0
                                   ? run_dir + "/checkpoint_final.json"
                                   : run_dir + "/checkpoint_" +
                                         std::to_string(ckpt_step) + ".json";
            avec::DiagnosticsReport rep = avec::diagnose_checkpoint(cfg, ckpt, budget);
            std::cout << rep.to_json() << "\n";
            std::ofstream f(run_dir + "/diag_cli_" + std::to_string(rep.step) + ".json");
            f << rep.to_json() << "\n";
        } else if (*plot_cmd) {
            avec::emit_plot_data(run_dirs, quantity, out_file);
            std::cout << "wrote " << out_file << " and " << out_file << ".meanstd.csv\n";
        }
    } catch (const avec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
