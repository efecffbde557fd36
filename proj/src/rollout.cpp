#include "avec/rollout.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

RolloutBuffer::RolloutBuffer(std::size_t t, std::size_t od, std::size_t ad)
    : horizon(t),
      obs_dim(od),
      act_dim(ad),
      obs({t, od}),
      act({t, ad}),
      logp(t),
      rew(t),
      value(t),
      next_value(t),
      terminal(t, 0),
      episode_end(t, 0) {
    if (t == 0) throw std::invalid_argument("RolloutBuffer: horizon must be >= 1");
}

EnvCursor::EnvCursor(const Env& env, std::uint64_t seed)
    : env_(&env), reset_rng_(Rng(seed).child(0x52455345ull)) {
    begin_episode();
}

void EnvCursor::begin_episode() {
    // per-episode reset seed drawn from a dedicated stream
    const std::uint64_t ep_seed =
        Rng::splitmix(reset_rng_.seed() + 0x9e37 * (episode_count_ + 1));
    state_ = env_->initial_state(ep_seed);
    episode_count_ += 1;
    t_in_ep_ = 0;
    ep_ret_ = 0.0;
}

EnvCursor::StepInfo EnvCursor::step(std::span<const double> action) {
    StepInfo info;
    info.obs_before = env_->observe(state_);
    info.outcome = env_->transition(state_, action);
    wall_step_ += 1;
    t_in_ep_ += 1;
    ep_ret_ += info.outcome.reward;
    const bool over = info.outcome.terminal || t_in_ep_ >= env_->horizon();
    if (over) {
        info.episode_over = true;
        info.episode = EpisodeRecord{wall_step_, ep_ret_, t_in_ep_};
        begin_episode();
    } else {
        state_ = info.outcome.state;
    }
    return info;
}

void ObsFilter::update(std::span<const double> x) {
    if (!enabled) return;
    if (mean.size() != x.size()) init(x.size());
    count += 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double delta = x[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (x[i] - mean[i]);
    }
}

std::vector<double> ObsFilter::apply(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    if (!enabled || count < 2.0) return out;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double var = m2[i] / count;
        double z = (out[i] - mean[i]) / std::sqrt(var + 1e-8);
        out[i] = std::min(10.0, std::max(-10.0, z));
    }
    return out;
}

RolloutBuffer collect_rollout(EnvCursor& cursor, const GaussianPolicy& policy,
                              const ValueFn& value_fn, std::size_t horizon, Rng& rng,
                              std::vector<EpisodeRecord>* episodes,
                              VisitationAccum* visitation,
                              std::vector<std::vector<double>>* state_log,
                              ObsFilter* filter, bool adapt_filter) {
    const Env& env = cursor.env();
    RolloutBuffer buf(horizon, env.obs_dim(), env.act_dim());
    for (std::size_t t = 0; t < horizon; ++t) {
        std::vector<double> raw_obs = env.observe(cursor.state());
        if (filter && adapt_filter) filter->update(raw_obs);
        std::vector<double> obs = filter ? filter->apply(raw_obs) : raw_obs;
        double logp = 0.0;
        std::vector<double> action = policy.sample(obs, rng, &logp);
        const double v = value_fn(obs);

        auto info = cursor.step(action);
        std::vector<double> next_obs = env.observe(info.outcome.state);
        if (filter) next_obs = filter->apply(next_obs);

        for (std::size_t j = 0; j < buf.obs_dim; ++j) buf.obs.data[t * buf.obs_dim + j] = obs[j];
        for (std::size_t j = 0; j < buf.act_dim; ++j)
            buf.act.data[t * buf.act_dim + j] = action[j];
        buf.logp[t] = logp;
        buf.rew[t] = info.outcome.reward;
        buf.value[t] = v;
        buf.next_value[t] = value_fn(next_obs);
        buf.terminal[t] = info.outcome.terminal ? 1 : 0;
        buf.episode_end[t] = info.episode_over ? 1 : 0;
        if (info.outcome.clipped) buf.clipped_steps += 1;
        if (info.episode_over && episodes) episodes->push_back(info.episode);
        if (visitation) visitation->add(raw_obs);
        if (state_log && t % 25 == 0) state_log->push_back(raw_obs);
    }
    return buf;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
    obs_.resize(capacity * obs_dim);
    act_.resize(capacity * act_dim);
    next_obs_.resize(capacity * obs_dim);
    rew_.resize(capacity);
    done_.resize(capacity);
}

void ReplayBuffer::push(std::span<const double> obs, std::span<const double> act,
                        double rew, std::span<const double> next_obs, bool done) {
    if (obs.size() != obs_dim_ || act.size() != act_dim_ || next_obs.size() != obs_dim_)
        throw std::invalid_argument("ReplayBuffer::push: dimension mismatch");
    for (std::size_t j = 0; j < obs_dim_; ++j) obs_[head_ * obs_dim_ + j] = obs[j];
    for (std::size_t j = 0; j < act_dim_; ++j) act_[head_ * act_dim_ + j] = act[j];
    for (std::size_t j = 0; j < obs_dim_; ++j) next_obs_[head_ * obs_dim_ + j] = next_obs[j];
    rew_[head_] = rew;
    done_[head_] = done ? 1 : 0;
    head_ = (head_ + 1) % capacity_;
    if (size_ < capacity_) size_ += 1;
}

ReplayBuffer::Batch ReplayBuffer::sample(std::size_t n, Rng& rng) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer::sample: buffer empty");
    Batch b;
    b.obs = Tensor({n, obs_dim_});
    b.act = Tensor({n, act_dim_});
    b.next_obs = Tensor({n, obs_dim_});
    b.rew.resize(n);
    b.done.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = static_cast<std::size_t>(rng.integer(size_));
        for (std::size_t j = 0; j < obs_dim_; ++j)
            b.obs.data[i * obs_dim_ + j] = obs_[k * obs_dim_ + j];
        for (std::size_t j = 0; j < act_dim_; ++j)
            b.act.data[i * act_dim_ + j] = act_[k * act_dim_ + j];
        for (std::size_t j = 0; j < obs_dim_; ++j)
            b.next_obs.data[i * obs_dim_ + j] = next_obs_[k * obs_dim_ + j];
        b.rew[i] = rew_[k];
        b.done[i] = done_[k];
    }
    return b;
}

}  // namespace avec
