#pragma once

#include <span>
#include <string>
#include <vector>

#include "avec/rng.hpp"
#include "avec/tape.hpp"

namespace avec {

/// Critic objective selector. alpha interpolates between residual variance
/// (alpha = 0, population convention) and MSE (alpha = 1).
enum class CriticLoss { mse, avec, alpha };

struct CriticLossSpec {
    CriticLoss kind = CriticLoss::mse;
    double alpha = 1.0;

    static CriticLossSpec parse(const std::string& name, double alpha);
    std::string name() const;
    bool needs_pairs() const { return kind != CriticLoss::mse; }  // requires T >= 2
};

// ---------------------------------------------------------------------------
// Loss values on plain batches. predictions and targets must have equal
// length and be finite throughout.
// ---------------------------------------------------------------------------

/// Mean squared residual. T >= 1.
double mse_loss(std::span<const double> predictions, std::span<const double> targets);

/// Unbiased (1/(T-1)) sample variance of the residuals. T >= 2.
double residual_variance_loss(std::span<const double> predictions,
                              std::span<const double> targets);

/// Population variance + alpha * (mean residual)^2, so that
/// alpha_loss(.,1) == mse_loss exactly and alpha_loss(.,0) equals the
/// population residual variance (residual_variance_loss * (T-1)/T). T >= 2.
double alpha_loss(std::span<const double> predictions, std::span<const double> targets,
                  double alpha);

/// mean(targets - predictions); the constant added by bias correction.
double bias_correction_constant(std::span<const double> predictions,
                                std::span<const double> targets);

/// g_i = f_i + mean(targets - predictions). The correction is plain data:
/// it never participates in differentiation.
std::vector<double> bias_correct(std::span<const double> predictions,
                                 std::span<const double> targets);

// ---------------------------------------------------------------------------
// Differentiable loss node. The batch mean inside the variance is part of
// the graph, so the gradient flows through each prediction twice.
// ---------------------------------------------------------------------------

Var critic_loss_node(Tape& tape, Var predictions, std::span<const double> targets,
                     const CriticLossSpec& spec);

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

struct GaeConfig {
    double gamma = 0.99;
    double lambda = 0.95;
    void validate() const;
};

struct GaeResult {
    std::vector<double> advantages;
    std::vector<double> targets;  // values + advantages
};

/// Backward GAE recursion with delta_t = r_t + gamma * v'_t * (1 - terminal_t)
/// - v_t. `terminal` marks true environment termination (masks the bootstrap);
/// `episode_end` additionally marks horizon truncation (breaks the recursion
/// chain but keeps the bootstrap, i.e. time-limit bootstrapping stays on).
GaeResult gae_targets(std::span<const double> rewards, std::span<const uint8_t> terminal,
                      std::span<const uint8_t> episode_end, std::span<const double> values,
                      std::span<const double> next_values, const GaeConfig& cfg);

/// Q_hat = r + gamma * (1 - done) * v_next. No gradient flows through here.
std::vector<double> sac_td_targets(std::span<const double> rewards,
                                   std::span<const uint8_t> done,
                                   std::span<const double> next_values, double gamma);

// ---------------------------------------------------------------------------
// Centering contraction: draw T iid unit-variance variables M times, center
// each draw by its sample mean, and compare the empirical variance of the
// first variable with the identity's prediction 1 - 2/T + 1/T = 1 - 1/T.
// ---------------------------------------------------------------------------

struct ContractionResult {
    double empirical = 0.0;
    double predicted = 0.0;
};

ContractionResult variance_contraction_check(std::size_t n_vars, std::size_t n_samples,
                                             Rng& rng);

}  // namespace avec
