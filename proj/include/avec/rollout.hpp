#pragma once

#include <functional>
#include <vector>

#include "avec/envs.hpp"
#include "avec/policy.hpp"
#include "avec/rng.hpp"
#include "avec/visitation.hpp"

namespace avec {

using ValueFn = std::function<double(std::span<const double>)>;

/// Running observation normalizer (Welford). Off by default; enabled only
/// through env.normalize_obs. Normalized observations are clipped to [-10,10].
struct ObsFilter {
    bool enabled = false;
    std::vector<double> mean, m2;
    double count = 0.0;

    void init(std::size_t dim) {
        mean.assign(dim, 0.0);
        m2.assign(dim, 0.0);
        count = 0.0;
    }
    void update(std::span<const double> x);
    std::vector<double> apply(std::span<const double> x) const;
};

/// Fixed-horizon on-policy storage. Values are recorded at collection time
/// and stay frozen across all epochs of one update. `terminal` marks true
/// environment termination; `episode_end` additionally marks horizon
/// truncation (a new episode starts at the next row).
struct RolloutBuffer {
    std::size_t horizon = 0, obs_dim = 0, act_dim = 0;
    Tensor obs;   // [T, obs_dim]
    Tensor act;   // [T, act_dim]
    std::vector<double> logp, rew, value, next_value;
    std::vector<uint8_t> terminal, episode_end;
    std::size_t clipped_steps = 0;

    RolloutBuffer() = default;
    RolloutBuffer(std::size_t t, std::size_t od, std::size_t ad);
    std::size_t size() const { return horizon; }
    std::span<const double> obs_row(std::size_t i) const {
        return {&obs.data[i * obs_dim], obs_dim};
    }
};

struct EpisodeRecord {
    long wall_step = 0;
    double ret = 0.0;
    std::size_t len = 0;
};

/// Walks one environment across rollout boundaries; episodes continue from
/// buffer to buffer. Deterministic given the seed.
class EnvCursor {
  public:
    EnvCursor(const Env& env, std::uint64_t seed);

    const Env& env() const { return *env_; }
    long wall_step() const { return wall_step_; }
    std::span<const double> state() const { return state_; }

    /// Applies one action; returns the transition outcome and handles
    /// episode bookkeeping (returns completed-episode record if any).
    struct StepInfo {
        std::vector<double> obs_before;
        StepOutcome outcome;
        bool episode_over = false;  // terminal or horizon cap hit
        EpisodeRecord episode;      // valid when episode_over
    };
    StepInfo step(std::span<const double> action);

  private:
    const Env* env_;
    Rng reset_rng_;
    std::vector<double> state_;
    std::size_t t_in_ep_ = 0;
    double ep_ret_ = 0.0;
    long wall_step_ = 0;
    std::uint64_t episode_count_ = 0;

    void begin_episode();
};

/// Fills a buffer of exactly `horizon` transitions; log-probs and values
/// come from the given policy/value function at collection time. When a
/// filter is supplied, stored observations are normalized (and the filter
/// statistics adapt unless adapt_filter is off); visitation and the state
/// log always see raw observations.
RolloutBuffer collect_rollout(EnvCursor& cursor, const GaussianPolicy& policy,
                              const ValueFn& value_fn, std::size_t horizon, Rng& rng,
                              std::vector<EpisodeRecord>* episodes = nullptr,
                              VisitationAccum* visitation = nullptr,
                              std::vector<std::vector<double>>* state_log = nullptr,
                              ObsFilter* filter = nullptr, bool adapt_filter = true);

/// Uniform-replay ring buffer for off-policy training.
class ReplayBuffer {
  public:
    ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim);

    void push(std::span<const double> obs, std::span<const double> act, double rew,
              std::span<const double> next_obs, bool done);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }

    struct Batch {
        Tensor obs, act, next_obs;  // [n, dim]
        std::vector<double> rew;
        std::vector<uint8_t> done;
    };
    /// Uniform sample with replacement over the current contents.
    Batch sample(std::size_t n, Rng& rng) const;

  private:
    std::size_t capacity_, obs_dim_, act_dim_;
    std::size_t size_ = 0, head_ = 0;
    std::vector<double> obs_, act_, next_obs_, rew_;
    std::vector<uint8_t> done_;
};

}  // namespace avec
