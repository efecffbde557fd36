#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace avec {

/// Invalid configuration; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Full run configuration. The file grammar is one `key = value` pair per
/// line with dotted section keys; `#` starts a comment. Unknown keys are
/// rejected. serialize() always emits every key so a run directory carries
/// the complete resolved configuration.
struct RunConfig {
    std::string env = "chain3";
    std::size_t env_horizon = 0;  // 0 keeps the env default
    bool normalize_obs = false;
    std::string algo = "ppo";
    std::uint64_t seed = 0;
    long total_steps = 50000;
    double gamma = 0.99;

    std::string critic_loss = "mse";
    double critic_alpha = 1.0;
    bool correct_advantages = false;

    std::size_t ppo_horizon = 512;
    std::size_t ppo_epochs = 10;
    std::size_t ppo_minibatches = 32;
    double ppo_clip = 0.2;
    double ppo_gae_lambda = 0.95;
    double ppo_actor_stepsize = 2.5e-4;
    double ppo_critic_stepsize = 2.5e-4;
    double ppo_entropy_coef = 0.0;
    double ppo_max_grad_norm = 0.5;
    bool ppo_norm_adv = true;
    std::size_t ppo_hidden = 64;
    std::size_t ppo_layers = 2;
    std::string ppo_activation = "tanh";
    double ppo_init_log_std = 0.0;

    double sac_stepsize = 3e-4;
    std::size_t sac_batch_size = 256;
    std::size_t sac_replay_capacity = 1000000;
    double sac_tau = 0.01;
    std::size_t sac_target_interval = 1;
    std::size_t sac_grad_steps = 1;
    std::size_t sac_min_fill = 1000;
    double sac_temperature = 0.2;
    bool sac_learn_temperature = false;
    std::size_t sac_hidden = 256;
    std::size_t sac_layers = 2;
    std::string sac_activation = "relu";
    std::size_t sac_log_interval = 500;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    bool diag_enable = true;
    std::size_t diag_budget = 10000;
    std::size_t diag_grad_batches = 10;
    std::size_t diag_grad_batch_size = 500;
    std::string diag_schedule = "0.1,0.2,0.4,0.6,0.9";

    std::string out;  // output directory; empty derives one from the config

    bool operator==(const RunConfig&) const = default;

    /// Checkpoint steps implied by diag_schedule and total_steps.
    std::vector<long> checkpoint_steps() const;
    void validate() const;
    std::string default_out_dir() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

/// Applies one `key=value` override (CLI `--set`).
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace avec
