#include "avec/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "avec/critic.hpp"
#include "avec/envs.hpp"
#include "avec/mlp.hpp"

namespace avec {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
T parse_number(const std::string& key, const std::string& v);

template <>
double parse_number<double>(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config: bad float for " + key + ": '" + v + "'");
    }
}

template <>
long parse_number<long>(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long x = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

template <>
std::size_t parse_number<std::size_t>(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size() || (!v.empty() && v[0] == '-'))
            throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(x);
    } catch (...) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad bool for " + key + ": '" + v + "'");
}

// Ordered key table; serialization emits keys in this order.
const std::vector<std::pair<std::string, Field>>& field_table() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        auto add_str = [&](const char* key, std::string RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) { return c.*mem; },
                          [mem](RunConfig& c, const std::string& v) { c.*mem = v; }}});
        };
        auto add_double = [&](const char* key, double RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) { return fmt_double(c.*mem); },
                          [mem, key](RunConfig& c, const std::string& v) {
                              c.*mem = parse_number<double>(key, v);
                          }}});
        };
        auto add_size = [&](const char* key, std::size_t RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) { return std::to_string(c.*mem); },
                          [mem, key](RunConfig& c, const std::string& v) {
                              c.*mem = parse_number<std::size_t>(key, v);
                          }}});
        };
        auto add_long = [&](const char* key, long RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) { return std::to_string(c.*mem); },
                          [mem, key](RunConfig& c, const std::string& v) {
                              c.*mem = parse_number<long>(key, v);
                          }}});
        };
        auto add_u64 = [&](const char* key, std::uint64_t RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) { return std::to_string(c.*mem); },
                          [mem, key](RunConfig& c, const std::string& v) {
                              c.*mem = parse_number<std::uint64_t>(key, v);
                          }}});
        };
        auto add_bool = [&](const char* key, bool RunConfig::* mem) {
            t.push_back({key,
                         {[mem](const RunConfig& c) {
                              return std::string(c.*mem ? "true" : "false");
                          },
                          [mem, key](RunConfig& c, const std::string& v) {
                              c.*mem = parse_bool(key, v);
                          }}});
        };

        add_str("env", &RunConfig::env);
        add_size("env.horizon", &RunConfig::env_horizon);
        add_bool("env.normalize_obs", &RunConfig::normalize_obs);
        add_str("algo", &RunConfig::algo);
        add_u64("seed", &RunConfig::seed);
        add_long("total_steps", &RunConfig::total_steps);
        add_double("gamma", &RunConfig::gamma);
        add_str("critic.loss", &RunConfig::critic_loss);
        add_double("critic.alpha", &RunConfig::critic_alpha);
        add_bool("avec.correct_advantages", &RunConfig::correct_advantages);
        add_size("ppo.horizon", &RunConfig::ppo_horizon);
        add_size("ppo.epochs", &RunConfig::ppo_epochs);
        add_size("ppo.minibatches", &RunConfig::ppo_minibatches);
        add_double("ppo.clip", &RunConfig::ppo_clip);
        add_double("ppo.gae_lambda", &RunConfig::ppo_gae_lambda);
        add_double("ppo.actor_stepsize", &RunConfig::ppo_actor_stepsize);
        add_double("ppo.critic_stepsize", &RunConfig::ppo_critic_stepsize);
        add_double("ppo.entropy_coef", &RunConfig::ppo_entropy_coef);
        add_double("ppo.max_grad_norm", &RunConfig::ppo_max_grad_norm);
        add_bool("ppo.norm_adv", &RunConfig::ppo_norm_adv);
        add_size("ppo.hidden", &RunConfig::ppo_hidden);
        add_size("ppo.layers", &RunConfig::ppo_layers);
        add_str("ppo.activation", &RunConfig::ppo_activation);
        add_double("ppo.init_log_std", &RunConfig::ppo_init_log_std);
        add_double("sac.stepsize", &RunConfig::sac_stepsize);
        add_size("sac.batch_size", &RunConfig::sac_batch_size);
        add_size("sac.replay_capacity", &RunConfig::sac_replay_capacity);
        add_double("sac.tau", &RunConfig::sac_tau);
        add_size("sac.target_interval", &RunConfig::sac_target_interval);
        add_size("sac.grad_steps", &RunConfig::sac_grad_steps);
        add_size("sac.min_fill", &RunConfig::sac_min_fill);
        add_double("sac.temperature", &RunConfig::sac_temperature);
        add_bool("sac.learn_temperature", &RunConfig::sac_learn_temperature);
        add_size("sac.hidden", &RunConfig::sac_hidden);
        add_size("sac.layers", &RunConfig::sac_layers);
        add_str("sac.activation", &RunConfig::sac_activation);
        add_size("sac.log_interval", &RunConfig::sac_log_interval);
        add_double("adam.beta1", &RunConfig::adam_beta1);
        add_double("adam.beta2", &RunConfig::adam_beta2);
        add_double("adam.eps", &RunConfig::adam_eps);
        add_bool("diag.enable", &RunConfig::diag_enable);
        add_size("diag.budget", &RunConfig::diag_budget);
        add_size("diag.grad_batches", &RunConfig::diag_grad_batches);
        add_size("diag.grad_batch_size", &RunConfig::diag_grad_batch_size);
        add_str("diag.schedule", &RunConfig::diag_schedule);
        add_str("out", &RunConfig::out);
        return t;
    }();
    return table;
}

const Field* find_field(const std::string& key) {
    for (const auto& [k, f] : field_table())
        if (k == key) return &f;
    return nullptr;
}

std::vector<double> parse_schedule(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        double f = parse_number<double>("diag.schedule", item);
        if (!(f > 0.0 && f < 1.0))
            throw ConfigError("config: diag.schedule fractions must lie in (0,1)");
        out.push_back(f);
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string stripped = line;
        if (auto pos = stripped.find('#'); pos != std::string::npos)
            stripped = stripped.substr(0, pos);
        stripped = trim(stripped);
        if (stripped.empty()) continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        const Field* f = find_field(key);
        if (!f) throw ConfigError("config: unknown key '" + key + "'");
        f->set(cfg, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::string out = "# avec run configuration (resolved)\n";
    for (const auto& [k, f] : field_table()) out += k + " = " + f.get(cfg) + "\n";
    return out;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must look like key=value: '" + assignment + "'");
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) throw ConfigError("config: unknown key '" + key + "'");
    f->set(cfg, value);
}

void RunConfig::validate() const {
    if (algo == "trpo")
        throw ConfigError(
            "algo = trpo is not supported by this lab (no trust-region variant); "
            "use ppo or sac");
    if (algo != "ppo" && algo != "sac")
        throw ConfigError("algo must be ppo or sac, got '" + algo + "'");
    const auto ids = env_ids();
    if (std::find(ids.begin(), ids.end(), env) == ids.end())
        throw ConfigError("unknown env '" + env + "'");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in [0,1)");
    if (!(ppo_gae_lambda >= 0.0 && ppo_gae_lambda <= 1.0))
        throw ConfigError("ppo.gae_lambda must lie in [0,1]");
    if (total_steps < 0) throw ConfigError("total_steps must be >= 0");
    try {
        CriticLossSpec::parse(critic_loss, critic_alpha);
        parse_activation(ppo_activation);
        parse_activation(sac_activation);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (ppo_horizon == 0 || ppo_minibatches == 0 || ppo_epochs == 0)
        throw ConfigError("ppo.horizon, ppo.epochs, ppo.minibatches must be >= 1");
    if (ppo_horizon % ppo_minibatches != 0)
        throw ConfigError("ppo.horizon must be divisible by ppo.minibatches");
    CriticLossSpec spec = CriticLossSpec::parse(critic_loss, critic_alpha);
    if (spec.needs_pairs() && ppo_horizon / ppo_minibatches < 2 && algo == "ppo")
        throw ConfigError("critic.loss = " + critic_loss +
                          " needs PPO minibatches of size >= 2");
    if (algo == "sac" && spec.needs_pairs() && sac_batch_size < 2)
        throw ConfigError("critic.loss = " + critic_loss + " needs sac.batch_size >= 2");
    if (sac_batch_size == 0 || sac_replay_capacity == 0)
        throw ConfigError("sac.batch_size and sac.replay_capacity must be >= 1");
    if (sac_min_fill < sac_batch_size)
        throw ConfigError("sac.min_fill must be >= sac.batch_size");
    if (!(sac_tau > 0.0 && sac_tau <= 1.0)) throw ConfigError("sac.tau must lie in (0,1]");
    if (sac_temperature <= 0.0) throw ConfigError("sac.temperature must be > 0");
    if (ppo_hidden == 0 || sac_hidden == 0) throw ConfigError("hidden width must be >= 1");
    if (diag_grad_batches < 2) throw ConfigError("diag.grad_batches must be >= 2");
    if (diag_grad_batch_size == 0 || diag_budget == 0)
        throw ConfigError("diag budgets must be >= 1");
    parse_schedule(diag_schedule);
}

std::vector<long> RunConfig::checkpoint_steps() const {
    std::vector<long> steps;
    for (double f : parse_schedule(diag_schedule)) {
        long s = static_cast<long>(std::llround(f * static_cast<double>(total_steps)));
        if (s > 0 && s < total_steps &&
            (steps.empty() || steps.back() != s))
            steps.push_back(s);
    }
    return steps;
}

std::string RunConfig::default_out_dir() const {
    std::string loss_tag = critic_loss;
    if (critic_loss == "alpha") loss_tag += fmt_double(critic_alpha);
    return "runs/" + env + "_" + algo + "_" + loss_tag + "_s" + std::to_string(seed);
}

}  // namespace avec
