#pragma once

#include <span>
#include <vector>

#include "avec/mlp.hpp"
#include "avec/rng.hpp"
#include "avec/tape.hpp"

namespace avec {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Diagonal Gaussian policy with a state-independent log-std vector and no
/// squashing; actions are clipped by the environment. log-std is clamped to
/// [-20, 2] wherever it is used.
struct GaussianPolicy {
    Mlp mean;
    Tensor log_std;  // [act_dim]
    double act_limit = 1.0;

    static GaussianPolicy make(std::size_t obs_dim, std::size_t act_dim,
                               std::size_t hidden, std::size_t layers, Activation act,
                               double init_log_std, double act_limit, Rng& rng);

    std::size_t act_dim() const { return log_std.numel(); }
    std::size_t param_count() const { return mean.param_count() + log_std.numel(); }

    std::vector<double> sample(std::span<const double> obs, Rng& rng,
                               double* logp = nullptr) const;
    double log_prob(std::span<const double> obs, std::span<const double> act) const;

    /// Closed-form entropy: sum_i(log sigma_i) + k/2 * log(2*pi*e).
    double entropy() const;

    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> p);

    struct Ctx {
        MlpVars mean_vars;
        Var log_std_var;
    };
    Ctx inject(Tape& tape, bool needs_grad = true) const;
    /// Per-sample log pi(a|s) as an [m,1] node.
    Var log_prob_node(Tape& tape, const Ctx& ctx, const Tensor& obs, const Tensor& act) const;
    Var entropy_node(Tape& tape, const Ctx& ctx) const;
    std::vector<double> collect_grads_ctx(Tape& tape, const Ctx& ctx) const;
};

/// Tanh-squashed Gaussian whose mean and log-std both come from one network
/// head (columns [0,k) mean, [k,2k) log-std). Actions are act_limit * tanh(u).
struct SquashedGaussianPolicy {
    Mlp net;  // obs -> 2 * act_dim
    double act_limit = 1.0;

    static SquashedGaussianPolicy make(std::size_t obs_dim, std::size_t act_dim,
                                       std::size_t hidden, std::size_t layers,
                                       Activation act, double act_limit, Rng& rng);

    std::size_t act_dim() const { return net.out_dim() / 2; }

    std::vector<double> sample(std::span<const double> obs, Rng& rng,
                               double* logp = nullptr) const;

    struct Ctx {
        MlpVars net_vars;
    };
    Ctx inject(Tape& tape, bool needs_grad = true) const;

    struct SampleNode {
        Var action;  // [m, k], already scaled by act_limit
        Var logp;    // [m, 1]
    };
    /// Reparameterized sample a = act_limit * tanh(mu + sigma * noise) with
    /// the exact squash correction; `noise` is an [m,k] standard-normal draw.
    SampleNode sample_node(Tape& tape, const Ctx& ctx, const Tensor& obs,
                           const Tensor& noise) const;
};

}  // namespace avec
