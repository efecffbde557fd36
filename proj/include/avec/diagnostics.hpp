#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avec/critic.hpp"
#include "avec/envs.hpp"
#include "avec/policy.hpp"
#include "avec/rollout.hpp"

namespace avec {

using QFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Monte-Carlo return estimates aggregated per distinct visited state
/// (or state-action pair when actions are kept). Episodes are rolled until
/// termination or until gamma^t < 1e-6; the recorded bound is gamma^K.
struct TrueTargetEstimate {
    std::vector<std::vector<double>> obs;
    std::vector<std::vector<double>> act;  // empty unless with_actions
    std::vector<double> returns;           // mean return-to-go per key
    std::vector<std::size_t> visits;
    std::size_t transitions_used = 0;
    double truncation_bound = 0.0;
    bool with_actions = false;
};

using ActionSampler =
    std::function<std::vector<double>(std::span<const double>, Rng&)>;

TrueTargetEstimate true_target_estimate(const Env& env, const ActionSampler& policy,
                                        std::size_t budget, double gamma, Rng& rng,
                                        bool with_actions = false);

/// Root-mean-square distance between the estimator and the empirical targets
/// the critic trained against.
double empirical_target_distance(const ValueFn& estimator, const Tensor& obs,
                                 std::span<const double> targets);

/// RMS distance of a state-value estimator to the Monte-Carlo true targets.
double true_target_distance(const ValueFn& estimator, const TrueTargetEstimate& est);
/// State-action variant.
double true_target_distance_q(const QFn& estimator, const TrueTargetEstimate& est);

/// Population-convention decomposition: returns (bias^2, variance) with
/// bias^2 + variance == mean squared residual exactly. n >= 2.
std::pair<double, double> bias_variance_decompose(std::span<const double> predictions,
                                                  std::span<const double> true_targets);

/// (a - b) / b as a percentage; b must be nonzero.
double percent_variation(double quantity_variant, double quantity_base);

/// Mean cosine over all unordered pairs. Vectors must be same-length and
/// nonzero-norm.
double pairwise_cosine_similarity(const std::vector<std::vector<double>>& gradients);

/// Independent policy-gradient estimates at a frozen parameter point:
/// n_batches fresh rollouts of batch_size transitions each, score-function
/// gradient with GAE advantages from the frozen value function.
std::vector<std::vector<double>> gradient_batches(const Env& env,
                                                  const GaussianPolicy& policy,
                                                  const ValueFn& value_fn,
                                                  std::size_t n_batches,
                                                  std::size_t batch_size,
                                                  const GaeConfig& gae, bool norm_adv,
                                                  Rng& rng,
                                                  const ObsFilter* filter = nullptr);

struct DiagnosticsReport {
    long step = 0;
    double empirical_distance = 0.0;
    double true_distance = 0.0;
    double bias2 = 0.0;
    double variance = 0.0;
    double cosine_similarity = 0.0;
    std::size_t true_samples = 0;
    std::size_t true_transitions = 0;
    std::size_t empirical_samples = 0;
    std::size_t grad_batches = 0;
    bool corrected = false;  // distances computed with the bias-corrected estimator

    /// bias^2 + variance must equal the squared true-target distance.
    double decomposition_residual() const {
        return std::abs(bias2 + variance - true_distance * true_distance);
    }
    std::string to_json() const;
};

}  // namespace avec
