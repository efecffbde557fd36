#include "avec/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "avec/diagnostics.hpp"

#include "json.hpp"

#include "avec/metrics.hpp"
#include "avec/train.hpp"

namespace avec {

namespace fs = std::filesystem;

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    f << text;
}

double final_window_return(const std::string& run_dir, std::size_t window = 100) {
    auto episodes = read_episodes(run_dir + "/episodes.csv");
    if (episodes.empty())
        throw std::runtime_error("compare: no completed episodes in " + run_dir);
    const std::size_t n = std::min(window, episodes.size());
    double sum = 0.0;
    for (std::size_t i = episodes.size() - n; i < episodes.size(); ++i)
        sum += episodes[i].ret;
    return sum / static_cast<double>(n);
}

SideStats side_stats(const std::vector<std::string>& dirs) {
    SideStats s;
    for (const std::string& d : dirs) s.per_run.push_back(final_window_return(d));
    std::sort(s.per_run.begin(), s.per_run.end());  // permutation-invariant aggregation
    s.n_runs = s.per_run.size();
    s.mean = vec_mean(s.per_run);
    if (s.n_runs < 2) {
        s.stddev = 0.0;
        s.single_seed_warn = true;
    } else {
        double sq = 0.0;
        for (double v : s.per_run) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(s.n_runs - 1));
    }
    return s;
}

RunConfig config_of(const std::string& run_dir) {
    return load_config_file(run_dir + "/config.cfg");
}

}  // namespace

std::string run_experiment(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    std::string dir = !out_dir.empty() ? out_dir
                      : !cfg.out.empty() ? cfg.out
                                         : cfg.default_out_dir();
    fs::create_directories(dir);
    RunConfig resolved = cfg;
    resolved.out = dir;
    write_text(dir + "/config.cfg", serialize_config(resolved));
    try {
        train(resolved, dir);
    } catch (const std::exception& e) {
        nlohmann::json status;
        status["status"] = "failed";
        status["error"] = e.what();
        write_text(dir + "/status.json", status.dump(1) + "\n");
        throw;
    }
    nlohmann::json status;
    status["status"] = "ok";
    write_text(dir + "/status.json", status.dump(1) + "\n");
    return dir;
}

std::vector<std::string> sweep(const RunConfig& base, std::size_t n_seeds,
                               std::uint64_t first_seed, const std::string& out_root,
                               std::size_t workers) {
    base.validate();
    if (n_seeds == 0) throw ConfigError("sweep: need at least one seed");
    fs::create_directories(out_root);
    std::vector<std::string> dirs(n_seeds);
    std::vector<RunConfig> cfgs(n_seeds);
    for (std::size_t i = 0; i < n_seeds; ++i) {
        cfgs[i] = base;
        cfgs[i].seed = first_seed + i;
        dirs[i] = out_root + "/s" + std::to_string(cfgs[i].seed);
    }
    // isolated worker threads; runs share nothing but the filesystem
    std::vector<std::string> errors(n_seeds);
    std::size_t next = 0;
    std::mutex mtx;
    auto worker = [&] {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard<std::mutex> lock(mtx);
                if (next >= n_seeds) return;
                i = next++;
            }
            try {
                run_experiment(cfgs[i], dirs[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t n_workers = std::max<std::size_t>(1, std::min(workers, n_seeds));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < n_seeds; ++i)
        if (!errors[i].empty())
            throw std::runtime_error("sweep: run " + dirs[i] + " failed: " + errors[i]);
    return dirs;
}

ComparisonSummary compare(const std::vector<std::string>& baseline_dirs,
                          const std::vector<std::string>& variant_dirs) {
    if (baseline_dirs.empty() || variant_dirs.empty())
        throw std::invalid_argument("compare: need at least one run per side");
    ComparisonSummary sum;
    RunConfig first = config_of(baseline_dirs.front());
    sum.env = first.env;
    sum.algo = first.algo;
    for (const auto& dirs : {baseline_dirs, variant_dirs})
        for (const std::string& d : dirs) {
            RunConfig c = config_of(d);
            if (c.env != sum.env || c.algo != sum.algo)
                throw std::invalid_argument("compare: mismatched env/algo in " + d);
        }
    sum.baseline = side_stats(baseline_dirs);
    sum.variant = side_stats(variant_dirs);
    // percent change is undefined against a zero baseline; reported as NaN
    sum.percent_change = sum.baseline.mean != 0.0
                             ? percent_variation(sum.variant.mean, sum.baseline.mean)
                             : std::numeric_limits<double>::quiet_NaN();
    return sum;
}

std::string ComparisonSummary::to_text() const {
    std::ostringstream os;
    os << env << " / " << algo << "\n";
    os << "  baseline: mean " << baseline.mean << " +- " << baseline.stddev << " ("
       << baseline.n_runs << " runs)";
    if (baseline.single_seed_warn) os << " [single seed: std not meaningful]";
    os << "\n  variant:  mean " << variant.mean << " +- " << variant.stddev << " ("
       << variant.n_runs << " runs)";
    if (variant.single_seed_warn) os << " [single seed: std not meaningful]";
    if (std::isnan(percent_change))
        os << "\n  change:   undefined (baseline mean is zero)\n";
    else
        os << "\n  change:   " << (percent_change >= 0 ? "+" : "") << percent_change
           << "%\n";
    return os.str();
}

std::string ComparisonSummary::to_json() const {
    nlohmann::json j;
    j["env"] = env;
    j["algo"] = algo;
    j["baseline"] = {{"mean", baseline.mean},
                     {"stddev", baseline.stddev},
                     {"n_runs", baseline.n_runs},
                     {"single_seed_warn", baseline.single_seed_warn},
                     {"per_run", baseline.per_run}};
    j["variant"] = {{"mean", variant.mean},
                    {"stddev", variant.stddev},
                    {"n_runs", variant.n_runs},
                    {"single_seed_warn", variant.single_seed_warn},
                    {"per_run", variant.per_run}};
    if (std::isnan(percent_change))
        j["percent_change"] = nullptr;
    else
        j["percent_change"] = percent_change;
    return j.dump(1);
}

void emit_plot_data(const std::vector<std::string>& run_dirs, const std::string& quantity,
                    const std::string& out_path) {
    if (run_dirs.empty()) throw std::invalid_argument("emit_plot_data: no runs");
    struct Point {
        long step;
        std::uint64_t seed;
        double value;
    };
    std::vector<Point> points;
    std::vector<std::string> available;
    for (const std::string& d : run_dirs) {
        RunConfig cfg = config_of(d);
        MetricsTable table = read_metrics(d + "/metrics.csv");
        if (available.empty()) available = table.columns;
        bool any = false;
        for (const auto& row : table.rows) {
            auto it = row.find(quantity);
            if (it == row.end()) continue;
            auto step_it = row.find("wall_step");
            if (step_it == row.end()) continue;
            points.push_back({static_cast<long>(step_it->second), cfg.seed, it->second});
            any = true;
        }
        if (!any) {
            std::string cols;
            for (const auto& c : available) cols += (cols.empty() ? "" : ", ") + c;
            throw std::invalid_argument("emit_plot_data: quantity '" + quantity +
                                        "' not found in " + d +
                                        "; available: " + cols);
        }
    }
    std::sort(points.begin(), points.end(), [](const Point& a, const Point& b) {
        return a.step != b.step ? a.step < b.step : a.seed < b.seed;
    });
    std::ofstream tidy(out_path);
    if (!tidy) throw std::runtime_error("emit_plot_data: cannot open " + out_path);
    tidy << "# avec-plotdata-v1 quantity=" << quantity << "\n";
    tidy << "step,seed,value\n";
    for (const Point& p : points)
        tidy << p.step << "," << p.seed << "," << p.value << "\n";

    std::ofstream agg(out_path + ".meanstd.csv");
    agg << "# avec-plotdata-meanstd-v1 quantity=" << quantity << "\n";
    agg << "step,mean,std,n\n";
    std::size_t i = 0;
    while (i < points.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < points.size() && points[j].step == points[i].step) {
            sum += points[j].value;
            ++j;
        }
        const double n = static_cast<double>(j - i);
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t k = i; k < j; ++k)
            sq += (points[k].value - mean) * (points[k].value - mean);
        const double sd = (j - i) < 2 ? 0.0 : std::sqrt(sq / (n - 1.0));
        agg << points[i].step << "," << mean << "," << sd << "," << (j - i) << "\n";
        i = j;
    }
}

}  // namespace avec
