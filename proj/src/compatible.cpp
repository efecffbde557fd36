#include "avec/compatible.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

namespace {

// psi(s,a)[s*A+b] = [s==s] * (delta_ab - pi(b|s)); all other states zero.
std::vector<double> feature_row(const SoftmaxPolicy& pi, std::size_t s, std::size_t a) {
    const std::size_t A = pi.n_actions;
    std::vector<double> psi(pi.n_states * A, 0.0);
    auto p = pi.probs(s);
    for (std::size_t b = 0; b < A; ++b) psi[s * A + b] = (b == a ? 1.0 : 0.0) - p[b];
    return psi;
}

}  // namespace

std::size_t truncation_length(double gamma) {
    if (gamma <= 0.0) return 1;
    return static_cast<std::size_t>(std::ceil(std::log(1e-6) / std::log(gamma)));
}

double CompatibleCritic::raw(const TabularMdp& mdp, const SoftmaxPolicy& pi,
                             std::size_t s, std::size_t a) const {
    const std::size_t A = pi.n_actions;
    auto p = pi.probs(s);
    double v = 0.0;
    for (std::size_t b = 0; b < A; ++b)
        v += weights[s * A + b] * ((b == a ? 1.0 : 0.0) - p[b]);
    (void)mdp;
    return v;
}

CompatibleCritic fit_compatible_avec_critic(const TabularMdp& mdp,
                                            const SoftmaxPolicy& pi) {
    const std::size_t S = mdp.n_states, A = mdp.n_actions, D = S * A;
    std::vector<double> q = exact_q_values(mdp, pi);
    std::vector<double> rho = discounted_visitation(mdp, pi);

    // normalized discounted state-action measure
    std::vector<double> w(D);
    double z = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        auto p = pi.probs(s);
        for (std::size_t a = 0; a < A; ++a) {
            w[s * A + a] = rho[s] * p[a];
            z += w[s * A + a];
        }
    }
    for (double& x : w) x /= z;

    // weighted means of features and targets
    std::vector<double> psi_bar(D, 0.0);
    double q_bar = 0.0;
    std::vector<std::vector<double>> psi(D);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t i = s * A + a;
            psi[i] = feature_row(pi, s, a);
            for (std::size_t d = 0; d < D; ++d) psi_bar[d] += w[i] * psi[i][d];
            q_bar += w[i] * q[i];
        }

    // normal equations on centered data: (sum w psi~ psi~^T) phi = sum w psi~ q~
    Tensor gram({D, D});
    std::vector<double> rhs(D, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t i = s * A + a;
            std::vector<double> centered(D);
            for (std::size_t d = 0; d < D; ++d) centered[d] = psi[i][d] - psi_bar[d];
            const double qc = q[i] - q_bar;
            for (std::size_t r = 0; r < D; ++r) {
                rhs[r] += w[i] * centered[r] * qc;
                for (std::size_t c = 0; c < D; ++c)
                    gram(r, c) += w[i] * centered[r] * centered[c];
            }
        }

    // pseudo-inverse solve; the gram matrix is rank-deficient along the
    // softmax shift directions, and rhs lies in its range
    Tensor evecs;
    std::vector<double> evals = symmetric_eigen(gram, evecs);
    double emax = 0.0;
    for (double e : evals) emax = std::max(emax, std::abs(e));
    const double tol = emax * 1e-12;
    CompatibleCritic crit;
    crit.weights.assign(D, 0.0);
    for (std::size_t j = 0; j < D; ++j) {
        if (std::abs(evals[j]) <= tol) continue;
        double proj = 0.0;
        for (std::size_t r = 0; r < D; ++r) proj += evecs(r, j) * rhs[r];
        proj /= evals[j];
        for (std::size_t r = 0; r < D; ++r) crit.weights[r] += proj * evecs(r, j);
    }

    // correction = E_w[q - f]
    double resid_mean = 0.0;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t i = s * A + a;
            resid_mean += w[i] * (q[i] - crit.raw(mdp, pi, s, a));
        }
    crit.correction = resid_mean;
    return crit;
}

McGradientEstimate mc_policy_gradient(const TabularMdp& mdp, const SoftmaxPolicy& pi,
                                      const std::vector<double>& value_table,
                                      std::size_t n_trajectories, Rng& rng) {
    const std::size_t S = mdp.n_states, A = mdp.n_actions, D = S * A;
    if (value_table.size() != D)
        throw std::invalid_argument("mc_policy_gradient: value table size mismatch");
    const std::size_t max_len = truncation_length(mdp.gamma);
    std::vector<double> sum(D, 0.0), sumsq(D, 0.0), est(D);
    for (std::size_t traj = 0; traj < n_trajectories; ++traj) {
        std::fill(est.begin(), est.end(), 0.0);
        std::size_t s = sample_start_state(mdp, rng);
        double disc = 1.0;
        for (std::size_t t = 0; t < max_len; ++t) {
            const std::size_t a = pi.sample(s, rng);
            auto p = pi.probs(s);
            const double v = value_table[s * A + a];
            for (std::size_t b = 0; b < A; ++b)
                est[s * A + b] += disc * (((b == a) ? 1.0 : 0.0) - p[b]) * v;
            s = mdp.next[mdp.idx(s, a)];
            disc *= mdp.gamma;
        }
        for (std::size_t d = 0; d < D; ++d) {
            sum[d] += est[d];
            sumsq[d] += est[d] * est[d];
        }
    }
    McGradientEstimate out;
    out.n_trajectories = n_trajectories;
    out.mean.resize(D);
    out.std_error.resize(D);
    const double n = static_cast<double>(n_trajectories);
    for (std::size_t d = 0; d < D; ++d) {
        out.mean[d] = sum[d] / n;
        const double var = std::max(0.0, sumsq[d] / n - out.mean[d] * out.mean[d]);
        out.std_error[d] = std::sqrt(var / n);
    }
    return out;
}

std::vector<std::vector<double>> tabular_gradient_batches(const TabularMdp& mdp,
                                                          const SoftmaxPolicy& pi,
                                                          std::size_t n_batches,
                                                          std::size_t traj_per_batch,
                                                          Rng& rng) {
    if (n_batches < 2)
        throw std::invalid_argument("tabular_gradient_batches: need at least 2 batches");
    const std::size_t S = mdp.n_states, A = mdp.n_actions, D = S * A;
    const std::size_t max_len = truncation_length(mdp.gamma);
    std::vector<std::vector<double>> out;
    for (std::size_t b = 0; b < n_batches; ++b) {
        std::vector<double> grad(D, 0.0);
        for (std::size_t traj = 0; traj < traj_per_batch; ++traj) {
            TabularTrajectory tr = sample_trajectory(mdp, pi, max_len, rng);
            // returns-to-go
            std::vector<double> g(tr.rewards.size());
            double acc = 0.0;
            for (std::size_t t = tr.rewards.size(); t-- > 0;) {
                acc = tr.rewards[t] + mdp.gamma * acc;
                g[t] = acc;
            }
            double disc = 1.0;
            for (std::size_t t = 0; t < tr.states.size(); ++t) {
                const std::size_t s = tr.states[t], a = tr.actions[t];
                auto p = pi.probs(s);
                for (std::size_t bb = 0; bb < A; ++bb)
                    grad[s * A + bb] += disc * (((bb == a) ? 1.0 : 0.0) - p[bb]) * g[t];
                disc *= mdp.gamma;
            }
        }
        for (double& x : grad) x /= static_cast<double>(traj_per_batch);
        out.push_back(std::move(grad));
    }
    return out;
}

}  // namespace avec
