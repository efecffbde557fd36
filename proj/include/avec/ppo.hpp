#pragma once

#include <optional>
#include <string>

#include "avec/adam.hpp"
#include "avec/critic.hpp"
#include "avec/policy.hpp"
#include "avec/rollout.hpp"

namespace avec {

/// Raised when an update hits a non-finite loss; carries a diagnostic dump.
struct TrainingFault : std::runtime_error {
    explicit TrainingFault(const std::string& what) : std::runtime_error(what) {}
};

struct PpoParams {
    std::size_t epochs = 10;
    std::size_t minibatches = 32;
    double clip = 0.2;
    GaeConfig gae;
    double actor_stepsize = 2.5e-4;
    double critic_stepsize = 2.5e-4;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;
    bool norm_adv = true;
    CriticLossSpec loss;
    bool correct_advantages = false;  // feed bias-corrected values to the GAE
                                      // pass that builds the actor advantages
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    AdamConfig actor_adam() const { return {actor_stepsize, adam_beta1, adam_beta2, adam_eps}; }
    AdamConfig critic_adam() const { return {critic_stepsize, adam_beta1, adam_beta2, adam_eps}; }
};

/// Value-function estimator state. `correction` is the bias-correction
/// constant of the residual-variance critic: the exposed estimate is
/// f(s) + correction, recomputed from each update's batch. It stays 0 for
/// the MSE and alpha objectives.
struct CriticState {
    Mlp net;
    double correction = 0.0;
    double raw_value(std::span<const double> obs) const { return net.value1(obs); }
    double corrected_value(std::span<const double> obs) const {
        return net.value1(obs) + correction;
    }
};

struct PpoState {
    GaussianPolicy policy;
    CriticState critic;
    AdamState actor_opt, critic_opt;
};

struct UpdateMetrics {
    double actor_loss = 0.0;
    double critic_loss = 0.0;
    double clip_frac = 0.0;
    double approx_kl = 0.0;
    double entropy = 0.0;
    double actor_grad_norm = 0.0;
    double correction = 0.0;
    double crit_bias2 = 0.0;        // per-minibatch mean, population convention
    double crit_var = 0.0;
    double bias_ident_dev = 0.0;    // max |mean(g) - mean(targets)| over minibatches
    // SAC-only fields
    double value_loss = 0.0;
    double q1_loss = 0.0;
    double q2_loss = 0.0;
    double mean_q_target = 0.0;
    std::size_t critic_steps = 0;
};

/// One clipped-surrogate PPO update. Targets and advantages are built from
/// the rollout-time value snapshot; with the residual-variance objective the
/// regression targets come from the bias-corrected estimate while the actor
/// advantages keep the raw one (flip with correct_advantages).
UpdateMetrics ppo_update(const RolloutBuffer& buf, PpoState& state,
                         const PpoParams& params, Rng& rng);

}  // namespace avec
