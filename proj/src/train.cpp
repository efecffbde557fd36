#include "avec/train.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "avec/metrics.hpp"

namespace avec {

namespace {

ValueFn make_value_fn(const CriticState& critic, const ObsFilter* filter,
                      bool corrected) {
    return [&critic, filter, corrected](std::span<const double> obs) {
        std::vector<double> x =
            filter ? filter->apply(obs) : std::vector<double>(obs.begin(), obs.end());
        return corrected ? critic.corrected_value(x) : critic.raw_value(x);
    };
}

std::vector<std::size_t> net_widths(std::size_t in, std::size_t hidden,
                                    std::size_t layers, std::size_t out) {
    std::vector<std::size_t> w{in};
    for (std::size_t i = 0; i < layers; ++i) w.push_back(hidden);
    w.push_back(out);
    return w;
}

void append_mlp(std::vector<NamedTensor>& out, const std::string& prefix,
                const Mlp& net) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        out.push_back({prefix + ".w" + std::to_string(l), net.w[l]});
        out.push_back({prefix + ".b" + std::to_string(l), net.b[l]});
    }
}

const Tensor& find_tensor(const std::vector<NamedTensor>& params,
                          const std::string& name) {
    for (const NamedTensor& p : params)
        if (p.name == name) return p.value;
    throw std::runtime_error("checkpoint: missing tensor " + name);
}

void restore_mlp(Mlp& net, const std::string& prefix,
                 const std::vector<NamedTensor>& params) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const Tensor& w = find_tensor(params, prefix + ".w" + std::to_string(l));
        const Tensor& b = find_tensor(params, prefix + ".b" + std::to_string(l));
        if (w.shape != net.w[l].shape || b.shape != net.b[l].shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + prefix);
        net.w[l] = w;
        net.b[l] = b;
    }
}

void append_filter(std::vector<NamedTensor>& out, const ObsFilter& filter) {
    if (!filter.enabled) return;
    out.push_back({"obs_filter.mean", Tensor({filter.mean.size()}, filter.mean)});
    out.push_back({"obs_filter.m2", Tensor({filter.m2.size()}, filter.m2)});
    out.push_back({"obs_filter.count", Tensor::scalar(filter.count)});
}

void restore_filter(ObsFilter& filter, const std::vector<NamedTensor>& params) {
    if (!filter.enabled) return;
    filter.mean = find_tensor(params, "obs_filter.mean").data;
    filter.m2 = find_tensor(params, "obs_filter.m2").data;
    filter.count = find_tensor(params, "obs_filter.count").data[0];
}

struct EpisodeStats {
    std::size_t count = 0;
    double sum = 0.0, len_sum = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    void add(const EpisodeRecord& e) {
        count += 1;
        sum += e.ret;
        len_sum += static_cast<double>(e.len);
        min = std::min(min, e.ret);
        max = std::max(max, e.ret);
    }
    void fill(MetricsRow& row) const {
        if (count == 0) return;
        row.ep_count = static_cast<double>(count);
        row.ep_ret_mean = sum / static_cast<double>(count);
        row.ep_ret_min = min;
        row.ep_ret_max = max;
        row.ep_len_mean = len_sum / static_cast<double>(count);
    }
};

void write_visitation(const std::string& out_dir, const VisitationAccum& vis) {
    Histogram h = vis.normalized();
    std::ofstream f(out_dir + "/visitation.csv");
    f << "# avec-visitation-v1\n";
    if (h.bins_per_dim.size() == 1) {
        f << "bin_center_0,freq\n";
        for (std::size_t i = 0; i < h.freq.size(); ++i) {
            const double c0 = h.lo[0] + (static_cast<double>(i) + 0.5) *
                                            (h.hi[0] - h.lo[0]) /
                                            static_cast<double>(h.bins_per_dim[0]);
            f << c0 << "," << h.freq[i] << "\n";
        }
    } else {
        f << "bin_center_0,bin_center_1,freq\n";
        const std::size_t b1 = h.bins_per_dim[1];
        for (std::size_t i = 0; i < h.freq.size(); ++i) {
            const std::size_t i0 = i / b1, i1 = i % b1;
            const double c0 = h.lo[0] + (static_cast<double>(i0) + 0.5) *
                                            (h.hi[0] - h.lo[0]) /
                                            static_cast<double>(h.bins_per_dim[0]);
            const double c1 = h.lo[1] + (static_cast<double>(i1) + 0.5) *
                                            (h.hi[1] - h.lo[1]) /
                                            static_cast<double>(b1);
            f << c0 << "," << c1 << "," << h.freq[i] << "\n";
        }
    }
}

void write_states(const std::string& out_dir,
                  const std::vector<std::vector<double>>& states) {
    std::ofstream f(out_dir + "/states.csv");
    f << "# avec-states-v1\n";
    for (const auto& s : states) {
        for (std::size_t i = 0; i < s.size(); ++i) f << (i ? "," : "") << s[i];
        f << "\n";
    }
}

}  // namespace

PpoParams ppo_params_from(const RunConfig& cfg) {
    PpoParams p;
    p.epochs = cfg.ppo_epochs;
    p.minibatches = cfg.ppo_minibatches;
    p.clip = cfg.ppo_clip;
    p.gae = GaeConfig{cfg.gamma, cfg.ppo_gae_lambda};
    p.actor_stepsize = cfg.ppo_actor_stepsize;
    p.critic_stepsize = cfg.ppo_critic_stepsize;
    p.entropy_coef = cfg.ppo_entropy_coef;
    p.max_grad_norm = cfg.ppo_max_grad_norm;
    p.norm_adv = cfg.ppo_norm_adv;
    p.loss = CriticLossSpec::parse(cfg.critic_loss, cfg.critic_alpha);
    p.correct_advantages = cfg.correct_advantages;
    p.adam_beta1 = cfg.adam_beta1;
    p.adam_beta2 = cfg.adam_beta2;
    p.adam_eps = cfg.adam_eps;
    return p;
}

SacParams sac_params_from(const RunConfig& cfg) {
    SacParams p;
    p.batch_size = cfg.sac_batch_size;
    p.tau = cfg.sac_tau;
    p.gamma = cfg.gamma;
    p.stepsize = cfg.sac_stepsize;
    p.temperature = cfg.sac_temperature;
    p.learn_temperature = cfg.sac_learn_temperature;
    p.target_interval = cfg.sac_target_interval;
    p.loss = CriticLossSpec::parse(cfg.critic_loss, cfg.critic_alpha);
    p.adam_beta1 = cfg.adam_beta1;
    p.adam_beta2 = cfg.adam_beta2;
    p.adam_eps = cfg.adam_eps;
    return p;
}

PpoState build_ppo_state(const RunConfig& cfg, const Env& env, Rng& init_rng) {
    PpoState st;
    const Activation act = parse_activation(cfg.ppo_activation);
    st.policy = GaussianPolicy::make(env.obs_dim(), env.act_dim(), cfg.ppo_hidden,
                                     cfg.ppo_layers, act, cfg.ppo_init_log_std,
                                     env.act_limit(), init_rng);
    st.critic.net = Mlp::make(net_widths(env.obs_dim(), cfg.ppo_hidden, cfg.ppo_layers, 1),
                              act, init_rng, 0.01);
    PpoParams params = ppo_params_from(cfg);
    std::vector<const Tensor*> actor_params;
    for (std::size_t l = 0; l < st.policy.mean.layer_count(); ++l) {
        actor_params.push_back(&st.policy.mean.w[l]);
        actor_params.push_back(&st.policy.mean.b[l]);
    }
    actor_params.push_back(&st.policy.log_std);
    st.actor_opt = AdamState::init(actor_params, params.actor_adam());
    std::vector<const Tensor*> critic_params;
    for (std::size_t l = 0; l < st.critic.net.layer_count(); ++l) {
        critic_params.push_back(&st.critic.net.w[l]);
        critic_params.push_back(&st.critic.net.b[l]);
    }
    st.critic_opt = AdamState::init(critic_params, params.critic_adam());
    return st;
}

SacNets build_sac_state(const RunConfig& cfg, const Env& env, Rng& init_rng) {
    return make_sac_nets(env.obs_dim(), env.act_dim(), cfg.sac_hidden, cfg.sac_layers,
                         parse_activation(cfg.sac_activation), env.act_limit(),
                         sac_params_from(cfg), init_rng);
}

std::vector<NamedTensor> snapshot_ppo(const PpoState& state, const ObsFilter& filter) {
    std::vector<NamedTensor> out;
    append_mlp(out, "policy", state.policy.mean);
    out.push_back({"policy.log_std", state.policy.log_std});
    append_mlp(out, "critic", state.critic.net);
    out.push_back({"critic.correction", Tensor::scalar(state.critic.correction)});
    append_filter(out, filter);
    return out;
}

void restore_ppo(PpoState& state, ObsFilter& filter,
                 const std::vector<NamedTensor>& params) {
    restore_mlp(state.policy.mean, "policy", params);
    state.policy.log_std = find_tensor(params, "policy.log_std");
    restore_mlp(state.critic.net, "critic", params);
    state.critic.correction = find_tensor(params, "critic.correction").data[0];
    restore_filter(filter, params);
}

std::vector<NamedTensor> snapshot_sac(const SacNets& nets, const ObsFilter& filter) {
    std::vector<NamedTensor> out;
    append_mlp(out, "policy", nets.policy.net);
    append_mlp(out, "q1", nets.q1);
    append_mlp(out, "q2", nets.q2);
    append_mlp(out, "value", nets.value);
    append_mlp(out, "value_target", nets.value_target);
    out.push_back({"corr1", Tensor::scalar(nets.corr1)});
    out.push_back({"corr2", Tensor::scalar(nets.corr2)});
    out.push_back({"log_alpha", Tensor::scalar(nets.log_alpha)});
    append_filter(out, filter);
    return out;
}

void restore_sac(SacNets& nets, ObsFilter& filter,
                 const std::vector<NamedTensor>& params) {
    restore_mlp(nets.policy.net, "policy", params);
    restore_mlp(nets.q1, "q1", params);
    restore_mlp(nets.q2, "q2", params);
    restore_mlp(nets.value, "value", params);
    restore_mlp(nets.value_target, "value_target", params);
    nets.corr1 = find_tensor(params, "corr1").data[0];
    nets.corr2 = find_tensor(params, "corr2").data[0];
    nets.log_alpha = find_tensor(params, "log_alpha").data[0];
    restore_filter(filter, params);
}

// ---------------------------------------------------------------------------
// diagnostics at a frozen parameter point (read-only)
// ---------------------------------------------------------------------------

DiagnosticsReport ppo_diagnostics(const RunConfig& cfg, const Env& env,
                                  const PpoState& state, const ObsFilter& filter,
                                  long step, std::size_t budget) {
    const PpoParams params = ppo_params_from(cfg);
    const bool corrected = params.loss.kind == CriticLoss::avec;
    const ObsFilter* fptr = filter.enabled ? &filter : nullptr;
    // plain variants consume already-filtered observations (rollout rows);
    // filtered variants take raw observations (true-target samples)
    ValueFn raw_plain = make_value_fn(state.critic, nullptr, false);
    ValueFn est_plain = make_value_fn(state.critic, nullptr, corrected);
    ValueFn est_fn = make_value_fn(state.critic, fptr, corrected);

    DiagnosticsReport rep;
    rep.step = step;
    rep.corrected = corrected;

    Rng diag_rng = Rng(cfg.seed).child(0xD1A60000ull + static_cast<std::uint64_t>(step));

    // estimation error against a freshly built empirical target batch,
    // using the same GAE construction the critic trains against
    {
        Rng r = diag_rng.child(1);
        EnvCursor cursor(env, r.seed());
        ObsFilter frozen = filter;  // apply-only copy
        RolloutBuffer buf =
            collect_rollout(cursor, state.policy, est_plain, cfg.ppo_horizon, r, nullptr,
                            nullptr, nullptr, frozen.enabled ? &frozen : nullptr,
                            /*adapt_filter=*/false);
        GaeResult res = gae_targets(buf.rew, buf.terminal, buf.episode_end, buf.value,
                                    buf.next_value, params.gae);
        // buf.obs rows are already filtered; compare against the estimator
        // on those rows directly
        double sq = 0.0;
        for (std::size_t i = 0; i < buf.size(); ++i) {
            const double v = corrected
                                 ? state.critic.corrected_value(buf.obs_row(i))
                                 : state.critic.raw_value(buf.obs_row(i));
            const double d = v - res.targets[i];
            sq += d * d;
        }
        rep.empirical_distance = std::sqrt(sq / static_cast<double>(buf.size()));
        rep.empirical_samples = buf.size();
    }

    // approximation error against Monte-Carlo returns of the current policy
    {
        Rng r = diag_rng.child(2);
        ObsFilter frozen = filter;
        ActionSampler sampler = [&](std::span<const double> obs, Rng& rr) {
            std::vector<double> x = frozen.enabled
                                        ? frozen.apply(obs)
                                        : std::vector<double>(obs.begin(), obs.end());
            return state.policy.sample(x, rr);
        };
        TrueTargetEstimate est =
            true_target_estimate(env, sampler, budget, cfg.gamma, r, false);
        rep.true_distance = true_target_distance(est_fn, est);
        rep.true_samples = est.obs.size();
        rep.true_transitions = est.transitions_used;
        std::vector<double> preds(est.obs.size());
        for (std::size_t i = 0; i < est.obs.size(); ++i) preds[i] = est_fn(est.obs[i]);
        auto [b2, var] = bias_variance_decompose(preds, est.returns);
        rep.bias2 = b2;
        rep.variance = var;
    }

    // gradient noise at the frozen point
    {
        Rng r = diag_rng.child(3);
        auto grads = gradient_batches(env, state.policy, raw_plain,
                                      cfg.diag_grad_batches, cfg.diag_grad_batch_size,
                                      params.gae, params.norm_adv, r, fptr);
        rep.cosine_similarity = pairwise_cosine_similarity(grads);
        rep.grad_batches = grads.size();
    }
    return rep;
}

DiagnosticsReport sac_diagnostics(const RunConfig& cfg, const Env& env,
                                  const SacNets& nets, const ObsFilter& filter,
                                  const ReplayBuffer& replay, long step,
                                  std::size_t budget) {
    const SacParams params = sac_params_from(cfg);
    const bool corrected = params.loss.kind == CriticLoss::avec;
    DiagnosticsReport rep;
    rep.step = step;
    rep.corrected = corrected;
    Rng diag_rng = Rng(cfg.seed).child(0xD1A70000ull + static_cast<std::uint64_t>(step));
    ObsFilter frozen = filter;

    QFn q_est = [&](std::span<const double> obs, std::span<const double> act) {
        std::vector<double> x = frozen.enabled
                                    ? frozen.apply(obs)
                                    : std::vector<double>(obs.begin(), obs.end());
        return nets.q1_value(x, act) + (corrected ? nets.corr1 : 0.0);
    };

    // estimation error against TD targets on a fresh replay batch
    {
        Rng r = diag_rng.child(1);
        const std::size_t n = std::min<std::size_t>(replay.size(), params.batch_size);
        ReplayBuffer::Batch batch = replay.sample(n, r);
        std::vector<double> next_v(n);
        for (std::size_t i = 0; i < n; ++i)
            next_v[i] = nets.value_target.value1(std::span<const double>(
                &batch.next_obs.data[i * batch.next_obs.shape[1]],
                batch.next_obs.shape[1]));
        std::vector<double> q_hat =
            sac_td_targets(batch.rew, batch.done, next_v, params.gamma);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // replay already holds filtered observations
            const double q =
                nets.q1_value({&batch.obs.data[i * batch.obs.shape[1]],
                               batch.obs.shape[1]},
                              {&batch.act.data[i * batch.act.shape[1]],
                               batch.act.shape[1]}) +
                (corrected ? nets.corr1 : 0.0);
            const double d = q - q_hat[i];
            sq += d * d;
        }
        rep.empirical_distance = std::sqrt(sq / static_cast<double>(n));
        rep.empirical_samples = n;
    }

    // approximation error against Monte-Carlo state-action returns
    {
        Rng r = diag_rng.child(2);
        ActionSampler sampler = [&](std::span<const double> obs, Rng& rr) {
            std::vector<double> x = frozen.enabled
                                        ? frozen.apply(obs)
                                        : std::vector<double>(obs.begin(), obs.end());
            return nets.policy.sample(x, rr);
        };
        TrueTargetEstimate est =
            true_target_estimate(env, sampler, budget, cfg.gamma, r, true);
        rep.true_distance = true_target_distance_q(q_est, est);
        rep.true_samples = est.obs.size();
        rep.true_transitions = est.transitions_used;
        std::vector<double> preds(est.obs.size());
        for (std::size_t i = 0; i < est.obs.size(); ++i)
            preds[i] = q_est(est.obs[i], est.act[i]);
        auto [b2, var] = bias_variance_decompose(preds, est.returns);
        rep.bias2 = b2;
        rep.variance = var;
    }

    // gradient noise of the policy objective over fresh replay minibatches
    {
        Rng r = diag_rng.child(3);
        auto grads = sac_gradient_batches(replay, nets, params, cfg.diag_grad_batches,
                                          std::min<std::size_t>(replay.size(),
                                                                cfg.diag_grad_batch_size),
                                          r);
        rep.cosine_similarity = pairwise_cosine_similarity(grads);
        rep.grad_batches = grads.size();
    }
    return rep;
}

namespace {

void write_diag(const std::string& out_dir, const DiagnosticsReport& rep,
                MetricsWriter& writer, long update) {
    std::ofstream f(out_dir + "/diag_" + std::to_string(rep.step) + ".json");
    f << rep.to_json() << "\n";
    MetricsRow row;
    row.wall_step = rep.step;
    row.update = update;
    row.diag_emp_dist = rep.empirical_distance;
    row.diag_true_dist = rep.true_distance;
    row.diag_bias2 = rep.bias2;
    row.diag_var = rep.variance;
    row.diag_cosine = rep.cosine_similarity;
    writer.row(row);
}

void train_ppo(const RunConfig& cfg, const std::string& out_dir, const Env& env) {
    Rng root(cfg.seed);
    Rng init_rng = root.child(1);
    PpoState state = build_ppo_state(cfg, env, init_rng);
    PpoParams params = ppo_params_from(cfg);
    ObsFilter filter;
    filter.enabled = cfg.normalize_obs;
    if (filter.enabled) filter.init(env.obs_dim());

    MetricsWriter writer(out_dir);
    save_checkpoint(out_dir + "/checkpoint_init.json", 0, snapshot_ppo(state, filter));

    EnvCursor cursor(env, root.child(2).seed());
    Rng sample_rng = root.child(3);
    Rng update_rng = root.child(4);

    std::unique_ptr<VisitationAccum> vis;
    std::vector<std::vector<double>> state_log;
    if (env.obs_dim() <= 2) {
        auto [lo, hi] = env.obs_bounds();
        vis = std::make_unique<VisitationAccum>(
            std::vector<std::size_t>(env.obs_dim(), 64), lo, hi);
    }

    std::vector<long> schedule = cfg.checkpoint_steps();
    std::size_t next_ckpt = 0;
    long update = 0;
    long episode_index = 0;
    ValueFn raw_fn = make_value_fn(state.critic, nullptr, false);

    while (cursor.wall_step() < cfg.total_steps) {
        std::vector<EpisodeRecord> episodes;
        RolloutBuffer buf = collect_rollout(
            cursor, state.policy, raw_fn, cfg.ppo_horizon, sample_rng, &episodes,
            vis.get(), env.obs_dim() <= 2 ? &state_log : nullptr,
            filter.enabled ? &filter : nullptr, true);
        UpdateMetrics met = ppo_update(buf, state, params, update_rng);
        update += 1;

        MetricsRow row;
        row.wall_step = cursor.wall_step();
        row.update = update;
        EpisodeStats stats;
        for (const EpisodeRecord& e : episodes) {
            stats.add(e);
            writer.episode(e.wall_step, episode_index++, e.ret, e.len);
        }
        stats.fill(row);
        row.actor_loss = met.actor_loss;
        row.critic_loss = met.critic_loss;
        row.clip_frac = met.clip_frac;
        row.approx_kl = met.approx_kl;
        row.entropy = met.entropy;
        row.actor_grad_norm = met.actor_grad_norm;
        row.correction = met.correction;
        row.crit_bias2 = met.crit_bias2;
        row.crit_var = met.crit_var;
        row.bias_ident_dev = met.bias_ident_dev;
        row.act_clip_frac =
            static_cast<double>(buf.clipped_steps) / static_cast<double>(buf.size());
        writer.row(row);

        // checkpoint at the first update boundary past each scheduled step;
        // rows stay in wall-step order
        bool crossed = false;
        while (next_ckpt < schedule.size() && cursor.wall_step() >= schedule[next_ckpt]) {
            crossed = true;
            next_ckpt += 1;
        }
        if (crossed) {
            const long step = cursor.wall_step();
            save_checkpoint(out_dir + "/checkpoint_" + std::to_string(step) + ".json",
                            step, snapshot_ppo(state, filter));
            if (cfg.diag_enable) {
                DiagnosticsReport rep =
                    ppo_diagnostics(cfg, env, state, filter, step, cfg.diag_budget);
                write_diag(out_dir, rep, writer, update);
            }
        }
    }
    save_checkpoint(out_dir + "/checkpoint_final.json", cursor.wall_step(),
                    snapshot_ppo(state, filter));
    if (vis && vis->total() > 0) {
        write_visitation(out_dir, *vis);
        write_states(out_dir, state_log);
    }
}

void train_sac(const RunConfig& cfg, const std::string& out_dir, const Env& env) {
    Rng root(cfg.seed);
    Rng init_rng = root.child(1);
    SacNets nets = build_sac_state(cfg, env, init_rng);
    SacParams params = sac_params_from(cfg);
    ObsFilter filter;
    filter.enabled = cfg.normalize_obs;
    if (filter.enabled) filter.init(env.obs_dim());

    MetricsWriter writer(out_dir);
    save_checkpoint(out_dir + "/checkpoint_init.json", 0, snapshot_sac(nets, filter));

    EnvCursor cursor(env, root.child(2).seed());
    Rng act_rng = root.child(3);
    Rng update_rng = root.child(4);
    ReplayBuffer replay(cfg.sac_replay_capacity, env.obs_dim(), env.act_dim());

    std::unique_ptr<VisitationAccum> vis;
    std::vector<std::vector<double>> state_log;
    if (env.obs_dim() <= 2) {
        auto [lo, hi] = env.obs_bounds();
        vis = std::make_unique<VisitationAccum>(
            std::vector<std::size_t>(env.obs_dim(), 64), lo, hi);
    }

    std::vector<long> schedule = cfg.checkpoint_steps();
    std::size_t next_ckpt = 0;
    std::size_t update_index = 0;
    long episode_index = 0;
    EpisodeStats window;
    UpdateMetrics last_met;
    bool any_update = false;

    while (cursor.wall_step() < cfg.total_steps) {
        std::vector<double> raw_obs = env.observe(cursor.state());
        if (filter.enabled) filter.update(raw_obs);
        std::vector<double> obs = filter.apply(raw_obs);
        std::vector<double> action = nets.policy.sample(obs, act_rng);
        if (vis) vis->add(raw_obs);
        if (env.obs_dim() <= 2 && cursor.wall_step() % 25 == 0)
            state_log.push_back(raw_obs);

        auto info = cursor.step(action);
        std::vector<double> next_obs = filter.apply(env.observe(info.outcome.state));
        replay.push(obs, action, info.outcome.reward, next_obs, info.outcome.terminal);
        if (info.episode_over) {
            window.add(info.episode);
            writer.episode(info.episode.wall_step, episode_index++, info.episode.ret,
                           info.episode.len);
        }

        if (replay.size() >= cfg.sac_min_fill) {
            for (std::size_t g = 0; g < cfg.sac_grad_steps; ++g) {
                last_met = sac_update(replay, nets, params, update_rng, update_index);
                update_index += 1;
                any_update = true;
            }
        }

        if (cursor.wall_step() % static_cast<long>(cfg.sac_log_interval) == 0) {
            MetricsRow row;
            row.wall_step = cursor.wall_step();
            row.update = static_cast<long>(update_index);
            window.fill(row);
            window = EpisodeStats{};
            if (any_update) {
                row.actor_loss = last_met.actor_loss;
                row.critic_loss = last_met.q1_loss;
                row.value_loss = last_met.value_loss;
                row.q1_loss = last_met.q1_loss;
                row.q2_loss = last_met.q2_loss;
                row.entropy = last_met.entropy;
                row.actor_grad_norm = last_met.actor_grad_norm;
                row.correction = last_met.correction;
                row.bias_ident_dev = last_met.bias_ident_dev;
            }
            writer.row(row);
        }

        bool crossed = false;
        while (next_ckpt < schedule.size() && cursor.wall_step() >= schedule[next_ckpt]) {
            crossed = true;
            next_ckpt += 1;
        }
        if (crossed) {
            const long step = cursor.wall_step();
            save_checkpoint(out_dir + "/checkpoint_" + std::to_string(step) + ".json",
                            step, snapshot_sac(nets, filter));
            if (cfg.diag_enable && replay.size() >= cfg.sac_min_fill) {
                DiagnosticsReport rep = sac_diagnostics(cfg, env, nets, filter, replay,
                                                        step, cfg.diag_budget);
                write_diag(out_dir, rep, writer, static_cast<long>(update_index));
            }
        }
    }
    save_checkpoint(out_dir + "/checkpoint_final.json", cursor.wall_step(),
                    snapshot_sac(nets, filter));
    if (vis && vis->total() > 0) {
        write_visitation(out_dir, *vis);
        write_states(out_dir, state_log);
    }
}

}  // namespace

void train(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    auto env = make_env(cfg.env, cfg.env_horizon);
    if (cfg.algo == "ppo")
        train_ppo(cfg, out_dir, *env);
    else
        train_sac(cfg, out_dir, *env);
}

DiagnosticsReport diagnose_checkpoint(const RunConfig& cfg,
                                      const std::string& checkpoint_path,
                                      std::size_t budget_override) {
    cfg.validate();
    auto env = make_env(cfg.env, cfg.env_horizon);
    long step = 0;
    std::vector<NamedTensor> params = load_checkpoint(checkpoint_path, &step);
    const std::size_t budget = budget_override ? budget_override : cfg.diag_budget;
    Rng init_rng = Rng(cfg.seed).child(1);
    ObsFilter filter;
    filter.enabled = cfg.normalize_obs;
    if (filter.enabled) filter.init(env->obs_dim());
    if (cfg.algo == "ppo") {
        PpoState state = build_ppo_state(cfg, *env, init_rng);
        restore_ppo(state, filter, params);
        return ppo_diagnostics(cfg, *env, state, filter, step, budget);
    }
    SacNets nets = build_sac_state(cfg, *env, init_rng);
    restore_sac(nets, filter, params);
    // rebuild a replay set by rolling the restored policy (the training
    // buffer is not checkpointed)
    ReplayBuffer replay(std::max<std::size_t>(budget, cfg.sac_batch_size),
                        env->obs_dim(), env->act_dim());
    Rng roll_rng = Rng(cfg.seed).child(0xF111);
    EnvCursor cursor(*env, roll_rng.seed());
    while (replay.size() < std::max<std::size_t>(budget, cfg.sac_batch_size)) {
        std::vector<double> raw_obs = env->observe(cursor.state());
        std::vector<double> obs = filter.apply(raw_obs);
        std::vector<double> action = nets.policy.sample(obs, roll_rng);
        auto info = cursor.step(action);
        std::vector<double> next_obs = filter.apply(env->observe(info.outcome.state));
        replay.push(obs, action, info.outcome.reward, next_obs, info.outcome.terminal);
    }
    return sac_diagnostics(cfg, *env, nets, filter, replay, step, budget);
}

}  // namespace avec
