#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "avec/tabular.hpp"

namespace avec {

struct StepOutcome {
    std::vector<double> state;
    double reward = 0.0;
    bool terminal = false;  // true environment termination, not the horizon cap
    bool clipped = false;   // action had to be clipped into the box
};

/// Deterministic desk-scale environment. transition() is a pure function of
/// (state, action): no internal state, no randomness. All tasks are noiseless.
/// Actions live in the box [-act_limit, act_limit]^act_dim; out-of-range
/// actions are clipped and the clipping is reported in the outcome.
class Env {
  public:
    virtual ~Env() = default;
    virtual std::string id() const = 0;
    virtual std::size_t state_dim() const = 0;
    virtual std::size_t obs_dim() const = 0;
    virtual std::size_t act_dim() const = 0;
    virtual double act_limit() const = 0;
    virtual std::size_t horizon() const = 0;
    virtual std::vector<double> initial_state(std::uint64_t seed) const = 0;
    virtual StepOutcome transition(std::span<const double> state,
                                   std::span<const double> action) const = 0;
    virtual std::vector<double> observe(std::span<const double> state) const {
        return std::vector<double>(state.begin(), state.end());
    }
    /// Observation-space box used for visitation binning.
    virtual std::pair<std::vector<double>, std::vector<double>> obs_bounds() const = 0;
};

/// ids: chain3, chain5, lqr1, lqr2, cartpole_swingup, sparse_mountaincar,
/// sparse_acrobot. horizon_override = 0 keeps the per-env default.
std::unique_ptr<Env> make_env(const std::string& id, std::size_t horizon_override = 0);

std::vector<std::string> env_ids();

/// Chain environments wrap a TabularMdp behind a continuous interface:
/// one-hot observations and a 1-D action in [-1,1] split into equal bins.
class TabularEnv : public Env {
  public:
    TabularEnv(std::string id, TabularMdp mdp, std::size_t horizon);
    std::string id() const override { return id_; }
    std::size_t state_dim() const override { return mdp_.n_states; }
    std::size_t obs_dim() const override { return mdp_.n_states; }
    std::size_t act_dim() const override { return 1; }
    double act_limit() const override { return 1.0; }
    std::size_t horizon() const override { return horizon_; }
    std::vector<double> initial_state(std::uint64_t seed) const override;
    StepOutcome transition(std::span<const double> state,
                           std::span<const double> action) const override;
    std::pair<std::vector<double>, std::vector<double>> obs_bounds() const override;

    const TabularMdp& mdp() const { return mdp_; }
    std::size_t action_bin(double a) const;
    std::size_t state_index(std::span<const double> state) const;

  private:
    std::string id_;
    TabularMdp mdp_;
    std::size_t horizon_;
};

/// Probability that a clipped 1-D Gaussian action N(mean, std^2) lands in
/// each of the env's action bins (exact, via the Gaussian CDF). Used to turn
/// a continuous policy on a TabularEnv into a tabular action distribution.
std::vector<double> gaussian_bin_probs(const TabularEnv& env, double mean, double stddev);

}  // namespace avec
