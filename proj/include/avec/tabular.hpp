#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avec/rng.hpp"
#include "avec/tensor.hpp"

namespace avec {

/// Finite MDP with deterministic transitions, indexed by (s, a).
struct TabularMdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<std::size_t> next;  // [s * n_actions + a] -> next state
    std::vector<double> reward;     // [s * n_actions + a]
    double gamma = 0.9;
    std::vector<double> start_dist;  // p0; defaults to point mass on state 0

    std::size_t idx(std::size_t s, std::size_t a) const { return s * n_actions + a; }
    void validate() const;
};

/// Shipped oracle MDPs: "single", "mdp2", "chain3", "chain5".
TabularMdp make_tabular_mdp(const std::string& name);

/// Stochastic tabular policy with one logit per (s, a).
struct SoftmaxPolicy {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> logits;  // [s * n_actions + a]

    SoftmaxPolicy() = default;
    SoftmaxPolicy(std::size_t s, std::size_t a)
        : n_states(s), n_actions(a), logits(s * a, 0.0) {}

    std::vector<double> probs(std::size_t s) const;  // sums to 1 within 1e-12
    std::vector<double> all_probs() const;           // [s * n_actions + a]
    std::size_t sample(std::size_t s, Rng& rng) const;
};

/// Solves (I - gamma * P_pi) V = r_pi by dense elimination and asserts the
/// Bellman residual is below 1e-10 in max norm.
std::vector<double> exact_values(const TabularMdp& mdp,
                                 const std::vector<double>& action_probs);
std::vector<double> exact_values(const TabularMdp& mdp, const SoftmaxPolicy& pi);

/// Q(s,a) = r(s,a) + gamma * V(next(s,a)).
std::vector<double> exact_q_values(const TabularMdp& mdp, const SoftmaxPolicy& pi);

/// Unnormalized discounted state visitation rho(s) = sum_t gamma^t P(s_t = s).
std::vector<double> discounted_visitation(const TabularMdp& mdp,
                                          const SoftmaxPolicy& pi);

/// Expected discounted return J = p0 . V.
double exact_objective(const TabularMdp& mdp, const SoftmaxPolicy& pi);

/// Gradient of J w.r.t. the policy logits, exact up to linear-solver
/// precision (implicit differentiation of the Bellman system).
/// Requires n_states * n_actions <= 100.
std::vector<double> exact_policy_gradient(const TabularMdp& mdp,
                                          const SoftmaxPolicy& pi);

struct TabularTrajectory {
    std::vector<std::size_t> states, actions;
    std::vector<double> rewards;
};

std::size_t sample_start_state(const TabularMdp& mdp, Rng& rng);
TabularTrajectory sample_trajectory(const TabularMdp& mdp, const SoftmaxPolicy& pi,
                                    std::size_t max_len, Rng& rng);

/// Dense solve of A x = b with partial pivoting; A is consumed.
std::vector<double> solve_dense(Tensor a, std::vector<double> b);

/// Jacobi eigendecomposition of a symmetric matrix. Returns eigenvalues and
/// fills evecs with the corresponding orthonormal columns.
std::vector<double> symmetric_eigen(Tensor a, Tensor& evecs);

}  // namespace avec
