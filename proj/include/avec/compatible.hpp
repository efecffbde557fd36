#pragma once

#include <vector>

#include "avec/rng.hpp"
#include "avec/tabular.hpp"

namespace avec {

/// Linear critic over the compatible features psi(s,a) = d log pi(a|s) / d logits,
/// fitted by minimizing the residual variance against the exact Q-values under
/// the discounted state-action measure, plus its bias-correction constant.
/// At this fit the score-weighted residual vanishes, so the corrected
/// estimator feeds an exactly unbiased likelihood-ratio policy gradient.
struct CompatibleCritic {
    std::vector<double> weights;  // one per logit
    double correction = 0.0;

    double raw(const TabularMdp& mdp, const SoftmaxPolicy& pi, std::size_t s,
               std::size_t a) const;
    double corrected(const TabularMdp& mdp, const SoftmaxPolicy& pi, std::size_t s,
                     std::size_t a) const {
        return raw(mdp, pi, s, a) + correction;
    }
};

/// Closed-form fit (weighted centered least squares via eigen-pseudoinverse).
CompatibleCritic fit_compatible_avec_critic(const TabularMdp& mdp,
                                            const SoftmaxPolicy& pi);

struct McGradientEstimate {
    std::vector<double> mean;       // per logit
    std::vector<double> std_error;  // per logit, over trajectories
    std::size_t n_trajectories = 0;
};

/// Likelihood-ratio gradient sum_t gamma^t dlogpi(a_t|s_t) * value(s_t, a_t)
/// averaged over sampled trajectories. Trajectories are truncated once
/// gamma^t < 1e-6. `value` is any per-(s,a) scalar table.
McGradientEstimate mc_policy_gradient(const TabularMdp& mdp, const SoftmaxPolicy& pi,
                                      const std::vector<double>& value_table,
                                      std::size_t n_trajectories, Rng& rng);

/// REINFORCE-style batched gradient estimates (returns-to-go as the value),
/// one flattened estimate per batch. Used by the gradient-noise diagnostics
/// on tabular oracles.
std::vector<std::vector<double>> tabular_gradient_batches(const TabularMdp& mdp,
                                                          const SoftmaxPolicy& pi,
                                                          std::size_t n_batches,
                                                          std::size_t traj_per_batch,
                                                          Rng& rng);

/// Trajectory length at which gamma^t drops below 1e-6.
std::size_t truncation_length(double gamma);

}  // namespace avec
