#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "avec/harness.hpp"
#include "avec/metrics.hpp"
#include "avec/train.hpp"

using namespace avec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("avec_train_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig tiny_ppo() {
    RunConfig cfg;
    cfg.env = "chain3";
    cfg.algo = "ppo";
    cfg.total_steps = 512;
    cfg.ppo_horizon = 128;
    cfg.ppo_epochs = 2;
    cfg.ppo_minibatches = 4;
    cfg.ppo_hidden = 8;
    cfg.ppo_layers = 1;
    cfg.diag_budget = 400;
    cfg.diag_grad_batches = 2;
    cfg.diag_grad_batch_size = 64;
    return cfg;
}

RunConfig tiny_sac() {
    RunConfig cfg;
    cfg.env = "lqr1";
    cfg.algo = "sac";
    cfg.total_steps = 400;
    cfg.sac_batch_size = 16;
    cfg.sac_min_fill = 64;
    cfg.sac_hidden = 8;
    cfg.sac_layers = 1;
    cfg.sac_replay_capacity = 1000;
    cfg.sac_log_interval = 100;
    cfg.diag_budget = 300;
    cfg.diag_grad_batches = 2;
    cfg.diag_grad_batch_size = 16;
    return cfg;
}

}  // namespace

TEST_CASE("run: total_steps=0 leaves a config, empty metrics, init checkpoint") {
    TempDir tmp("zero");
    RunConfig cfg = tiny_ppo();
    cfg.total_steps = 0;
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    CHECK(fs::exists(dir + "/config.cfg"));
    CHECK(fs::exists(dir + "/checkpoint_init.json"));
    CHECK(fs::exists(dir + "/status.json"));
    MetricsTable t = read_metrics(dir + "/metrics.csv");
    CHECK(t.rows.empty());
    RunConfig reread = load_config_file(dir + "/config.cfg");
    CHECK(reread.total_steps == 0);
}

TEST_CASE("run: same config twice gives byte-identical logs") {
    TempDir tmp("det");
    RunConfig cfg = tiny_ppo();
    cfg.seed = 5;
    std::string d1 = run_experiment(cfg, tmp.str() + "/a");
    std::string d2 = run_experiment(cfg, tmp.str() + "/b");
    CHECK(slurp(d1 + "/metrics.csv") == slurp(d2 + "/metrics.csv"));
    CHECK(slurp(d1 + "/episodes.csv") == slurp(d2 + "/episodes.csv"));
    CHECK(slurp(d1 + "/checkpoint_final.json") == slurp(d2 + "/checkpoint_final.json"));
    CHECK(!read_metrics(d1 + "/metrics.csv").rows.empty());
}

TEST_CASE("run: ppo on the chain logs updates, episodes and diagnostics") {
    TempDir tmp("ppo");
    RunConfig cfg = tiny_ppo();
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    MetricsTable t = read_metrics(dir + "/metrics.csv");
    REQUIRE(!t.rows.empty());
    bool any_diag = false;
    for (const auto& row : t.rows)
        if (row.count("diag_cosine")) {
            any_diag = true;
            const double cos = row.at("diag_cosine");
            CHECK(cos >= -1.0);
            CHECK(cos <= 1.0);
            // decomposition identity within the report
            const double d = row.at("diag_true_dist");
            CHECK(std::abs(row.at("diag_bias2") + row.at("diag_var") - d * d) <= 1e-8);
        }
    CHECK(any_diag);
    CHECK(!read_episodes(dir + "/episodes.csv").empty());

    // checkpoints land on the update boundaries crossing the schedule
    std::size_t mid_checkpoints = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("checkpoint_", 0) == 0 && name.find("init") == std::string::npos &&
            name.find("final") == std::string::npos)
            mid_checkpoints += 1;
    }
    CHECK(mid_checkpoints >= 2);

    // wall step never decreases down the log
    long prev = -1;
    for (const auto& row : t.rows) {
        const long w = static_cast<long>(row.at("wall_step"));
        CHECK(w >= prev);
        prev = w;
    }

    // the first logged entropy is the closed form of the initial log-std
    auto env = make_env(cfg.env);
    Rng init(cfg.seed);
    Rng init_rng = init.child(1);
    PpoState state = build_ppo_state(cfg, *env, init_rng);
    ObsFilter filter;
    restore_ppo(state, filter, load_checkpoint(dir + "/checkpoint_init.json"));
    REQUIRE(t.rows[0].count("entropy"));
    CHECK(std::abs(t.rows[0].at("entropy") - state.policy.entropy()) <= 1e-10);
}

TEST_CASE("run: sac trains, logs and checkpoints") {
    TempDir tmp("sac");
    RunConfig cfg = tiny_sac();
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    MetricsTable t = read_metrics(dir + "/metrics.csv");
    REQUIRE(!t.rows.empty());
    bool any_q = false;
    for (const auto& row : t.rows)
        if (row.count("q1_loss")) any_q = true;
    CHECK(any_q);
    CHECK(fs::exists(dir + "/checkpoint_final.json"));
    CHECK(fs::exists(dir + "/visitation.csv"));  // lqr1 has a 1-D observation
}

TEST_CASE("run: avec-ppo exposes a nonzero correction in the logs") {
    TempDir tmp("avec");
    RunConfig cfg = tiny_ppo();
    cfg.critic_loss = "avec";
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    MetricsTable t = read_metrics(dir + "/metrics.csv");
    bool nonzero = false;
    for (const auto& row : t.rows)
        if (row.count("correction") && row.at("correction") != 0.0) nonzero = true;
    CHECK(nonzero);
    for (const auto& row : t.rows)
        if (row.count("bias_ident_dev")) CHECK(row.at("bias_ident_dev") <= 1e-10);
}

TEST_CASE("run: checkpoint restore reproduces the saved estimator exactly") {
    TempDir tmp("ckpt");
    RunConfig cfg = tiny_ppo();
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    auto env = make_env(cfg.env, cfg.env_horizon);
    Rng init(999);  // arbitrary; parameters are overwritten by the restore
    PpoState state = build_ppo_state(cfg, *env, init);
    ObsFilter filter;
    restore_ppo(state, filter, load_checkpoint(dir + "/checkpoint_final.json"));
    // restoring twice gives identical parameters
    PpoState state2 = build_ppo_state(cfg, *env, init);
    ObsFilter filter2;
    restore_ppo(state2, filter2, load_checkpoint(dir + "/checkpoint_final.json"));
    CHECK(state.policy.flat_params() == state2.policy.flat_params());
    CHECK(state.critic.net.flat_params() == state2.critic.net.flat_params());
    CHECK(state.critic.correction == state2.critic.correction);
}

TEST_CASE("run: diagnose_checkpoint is read-only and reproducible") {
    TempDir tmp("diag");
    RunConfig cfg = tiny_ppo();
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    const std::string ckpt = dir + "/checkpoint_final.json";
    const std::string before = slurp(ckpt);
    DiagnosticsReport r1 = diagnose_checkpoint(cfg, ckpt, 300);
    DiagnosticsReport r2 = diagnose_checkpoint(cfg, ckpt, 300);
    CHECK(slurp(ckpt) == before);
    CHECK(r1.true_distance == r2.true_distance);
    CHECK(r1.cosine_similarity == r2.cosine_similarity);
    CHECK(r1.decomposition_residual() <= 1e-8);
}

TEST_CASE("run: runtime faults preserve partial logs and mark the run failed") {
    TempDir tmp("fault");
    RunConfig cfg = tiny_ppo();
    // one Adam step of this size sends the critic to ~1e200; squaring the
    // residual on the next minibatch overflows to inf and aborts the update
    cfg.ppo_critic_stepsize = 1e200;
    cfg.diag_enable = false;
    bool threw = false;
    try {
        run_experiment(cfg, tmp.str() + "/run");
    } catch (const std::exception&) {
        threw = true;
    }
    CHECK(threw);
    CHECK(fs::exists(tmp.str() + "/run/metrics.csv"));
    std::string status = slurp(tmp.str() + "/run/status.json");
    CHECK(status.find("failed") != std::string::npos);
}

TEST_CASE("sweep: seeds land in sibling directories with distinct seeds") {
    TempDir tmp("sweep");
    RunConfig cfg = tiny_ppo();
    cfg.total_steps = 128;
    cfg.diag_enable = false;
    auto dirs = sweep(cfg, 3, 10, tmp.str() + "/sw", 2);
    REQUIRE(dirs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        RunConfig c = load_config_file(dirs[i] + "/config.cfg");
        CHECK(c.seed == 10 + i);
    }
    // distinct seeds produce distinct logs
    CHECK(slurp(dirs[0] + "/metrics.csv") != slurp(dirs[1] + "/metrics.csv"));
}

TEST_CASE("run: alpha-family critic trains end to end") {
    TempDir tmp("alpha");
    RunConfig cfg = tiny_ppo();
    cfg.critic_loss = "alpha";
    cfg.critic_alpha = 0.5;
    cfg.diag_enable = false;
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    MetricsTable t = read_metrics(dir + "/metrics.csv");
    REQUIRE(!t.rows.empty());
    for (const auto& row : t.rows) {
        if (row.count("critic_loss")) CHECK(std::isfinite(row.at("critic_loss")));
        // the alpha family exposes no bias-correction constant
        if (row.count("correction")) CHECK(row.at("correction") == 0.0);
    }
}

TEST_CASE("run: corrected-advantage wiring trains under the variance objective") {
    TempDir tmp("corradv");
    RunConfig cfg = tiny_ppo();
    cfg.critic_loss = "avec";
    cfg.correct_advantages = true;
    cfg.diag_enable = false;
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    CHECK(!read_metrics(dir + "/metrics.csv").rows.empty());
    // the two wirings genuinely diverge once the correction is nonzero
    RunConfig off = cfg;
    off.correct_advantages = false;
    std::string dir2 = run_experiment(off, tmp.str() + "/run2");
    CHECK(slurp(dir + "/metrics.csv") != slurp(dir2 + "/metrics.csv"));
}

TEST_CASE("run: learned-temperature sac adapts log_alpha") {
    TempDir tmp("temp");
    RunConfig cfg = tiny_sac();
    cfg.sac_learn_temperature = true;
    cfg.diag_enable = false;
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    auto params = load_checkpoint(dir + "/checkpoint_final.json");
    for (const auto& p : params)
        if (p.name == "log_alpha")
            CHECK(p.value.data[0] != std::log(cfg.sac_temperature));
}

TEST_CASE("obs normalization switch: runs and checkpoints the filter state") {
    TempDir tmp("norm");
    RunConfig cfg = tiny_ppo();
    cfg.normalize_obs = true;
    cfg.diag_enable = false;
    std::string dir = run_experiment(cfg, tmp.str() + "/run");
    auto params = load_checkpoint(dir + "/checkpoint_final.json");
    bool has_filter = false;
    for (const auto& p : params)
        if (p.name == "obs_filter.count") has_filter = true;
    CHECK(has_filter);
}
