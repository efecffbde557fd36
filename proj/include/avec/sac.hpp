#pragma once

#include "avec/adam.hpp"
#include "avec/critic.hpp"
#include "avec/policy.hpp"
#include "avec/ppo.hpp"
#include "avec/rollout.hpp"

namespace avec {

struct SacParams {
    std::size_t batch_size = 256;
    double tau = 0.01;  // Polyak weight on the fresh value parameters
    double gamma = 0.99;
    double stepsize = 3e-4;
    double temperature = 0.2;
    bool learn_temperature = false;
    std::size_t target_interval = 1;
    CriticLossSpec loss;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    AdamConfig adam() const { return {stepsize, adam_beta1, adam_beta2, adam_eps}; }
};

/// Policy, two Q-networks, soft value network and its Polyak target.
/// corr1/corr2 are the per-batch bias-correction constants of the
/// residual-variance objective (0 under MSE/alpha).
struct SacNets {
    SquashedGaussianPolicy policy;
    Mlp q1, q2;          // (obs ++ act) -> 1
    Mlp value;           // obs -> 1
    Mlp value_target;    // Polyak copy of value
    double corr1 = 0.0, corr2 = 0.0;
    double log_alpha = 0.0;  // used when learn_temperature
    AdamState policy_opt, q1_opt, q2_opt, value_opt, alpha_opt;

    double q1_value(std::span<const double> obs, std::span<const double> act) const;
    double q2_value(std::span<const double> obs, std::span<const double> act) const;
};

SacNets make_sac_nets(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden,
                      std::size_t layers, Activation act, double act_limit,
                      const SacParams& params, Rng& rng);

/// One SAC gradient step on a uniformly sampled batch: soft value net on the
/// squared-residual objective, both Q-nets per the critic loss spec (with
/// per-batch bias correction under the residual-variance objective), then the
/// reparameterized policy, then the Polyak target update.
UpdateMetrics sac_update(ReplayBuffer& replay, SacNets& nets, const SacParams& params,
                         Rng& rng, std::size_t update_index);

/// value_target <- tau * value + (1 - tau) * value_target.
void polyak_update(const Mlp& fresh, Mlp& target, double tau);

/// Independent policy-loss gradient estimates at frozen parameters, one per
/// freshly sampled replay minibatch.
std::vector<std::vector<double>> sac_gradient_batches(const ReplayBuffer& replay,
                                                      const SacNets& nets,
                                                      const SacParams& params,
                                                      std::size_t n_batches,
                                                      std::size_t batch_size, Rng& rng);

}  // namespace avec
