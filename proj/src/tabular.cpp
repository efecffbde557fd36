#include "avec/tabular.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

void TabularMdp::validate() const {
    if (n_states == 0 || n_actions == 0)
        throw std::invalid_argument("TabularMdp: empty state or action space");
    if (next.size() != n_states * n_actions || reward.size() != n_states * n_actions)
        throw std::invalid_argument("TabularMdp: table size mismatch");
    for (std::size_t s : next)
        if (s >= n_states) throw std::invalid_argument("TabularMdp: next state out of range");
    for (double r : reward)
        if (!std::isfinite(r)) throw std::invalid_argument("TabularMdp: non-finite reward");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("TabularMdp: gamma must lie in [0,1)");
    if (!start_dist.empty()) {
        if (start_dist.size() != n_states)
            throw std::invalid_argument("TabularMdp: start_dist size mismatch");
        double sum = 0.0;
        for (double p : start_dist) sum += p;
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("TabularMdp: start_dist must sum to 1");
    }
}

TabularMdp make_tabular_mdp(const std::string& name) {
    TabularMdp m;
    auto chain = [](std::size_t n) {
        TabularMdp c;
        c.n_states = n;
        c.n_actions = 2;  // 0 = left, 1 = right
        c.next.resize(n * 2);
        c.reward.resize(n * 2, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            c.next[c.idx(s, 0)] = s == 0 ? 0 : s - 1;
            c.next[c.idx(s, 1)] = s + 1 >= n ? n - 1 : s + 1;
        }
        // reward for arriving at (or staying in) the terminal-end state
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t a = 0; a < 2; ++a)
                if (c.next[c.idx(s, a)] == n - 1) c.reward[c.idx(s, a)] = 1.0;
        c.gamma = 0.9;
        return c;
    };
    if (name == "chain3") {
        m = chain(3);
    } else if (name == "chain5") {
        m = chain(5);
    } else if (name == "mdp2") {
        m.n_states = 2;
        m.n_actions = 2;
        m.next = {0, 1, 0, 1};
        m.reward = {0.0, 1.0, 0.5, 2.0};
        m.gamma = 0.9;
    } else if (name == "single") {
        m.n_states = 1;
        m.n_actions = 1;
        m.next = {0};
        m.reward = {1.0};
        m.gamma = 0.9;
    } else {
        throw std::invalid_argument("unknown tabular MDP: " + name);
    }
    m.validate();
    return m;
}

std::vector<double> SoftmaxPolicy::probs(std::size_t s) const {
    std::vector<double> p(n_actions);
    double mx = logits[s * n_actions];
    for (std::size_t a = 1; a < n_actions; ++a)
        mx = std::max(mx, logits[s * n_actions + a]);
    double z = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
        p[a] = std::exp(logits[s * n_actions + a] - mx);
        z += p[a];
    }
    for (double& x : p) x /= z;
    return p;
}

std::vector<double> SoftmaxPolicy::all_probs() const {
    std::vector<double> out(n_states * n_actions);
    for (std::size_t s = 0; s < n_states; ++s) {
        auto p = probs(s);
        for (std::size_t a = 0; a < n_actions; ++a) out[s * n_actions + a] = p[a];
    }
    return out;
}

std::size_t SoftmaxPolicy::sample(std::size_t s, Rng& rng) const {
    auto p = probs(s);
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
        acc += p[a];
        if (u < acc) return a;
    }
    return n_actions - 1;
}

std::vector<double> solve_dense(Tensor a, std::vector<double> b) {
    if (a.rank() != 2 || a.shape[0] != a.shape[1] || a.shape[0] != b.size())
        throw std::invalid_argument("solve_dense: bad dimensions");
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) < 1e-14)
            throw std::runtime_error("solve_dense: singular system");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(piv, c), a(col, c));
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
        x[i] = s / a(i, i);
    }
    return x;
}

namespace {

// Row-stochastic P_pi and r_pi for a (possibly non-softmax) action
// distribution given as a flat [s * A + a] table.
void policy_kernel(const TabularMdp& mdp, const std::vector<double>& probs,
                   Tensor& p_pi, std::vector<double>& r_pi) {
    const std::size_t S = mdp.n_states, A = mdp.n_actions;
    p_pi = Tensor({S, S});
    r_pi.assign(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = probs[s * A + a];
            p_pi(s, mdp.next[mdp.idx(s, a)]) += pa;
            r_pi[s] += pa * mdp.reward[mdp.idx(s, a)];
        }
}

}  // namespace

std::vector<double> exact_values(const TabularMdp& mdp,
                                 const std::vector<double>& action_probs) {
    mdp.validate();
    if (action_probs.size() != mdp.n_states * mdp.n_actions)
        throw std::invalid_argument("exact_values: probability table size mismatch");
    const std::size_t S = mdp.n_states;
    Tensor p_pi;
    std::vector<double> r_pi;
    policy_kernel(mdp, action_probs, p_pi, r_pi);
    Tensor a({S, S});
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j)
            a(i, j) = (i == j ? 1.0 : 0.0) - mdp.gamma * p_pi(i, j);
    std::vector<double> v = solve_dense(a, r_pi);
    // Bellman residual must vanish to solver precision.
    for (std::size_t s = 0; s < S; ++s) {
        double rhs = r_pi[s];
        for (std::size_t j = 0; j < S; ++j) rhs += mdp.gamma * p_pi(s, j) * v[j];
        if (std::abs(rhs - v[s]) > 1e-10)
            throw std::runtime_error("exact_values: Bellman residual above 1e-10");
    }
    return v;
}

std::vector<double> exact_values(const TabularMdp& mdp, const SoftmaxPolicy& pi) {
    return exact_values(mdp, pi.all_probs());
}

std::vector<double> exact_q_values(const TabularMdp& mdp, const SoftmaxPolicy& pi) {
    std::vector<double> v = exact_values(mdp, pi);
    std::vector<double> q(mdp.n_states * mdp.n_actions);
    for (std::size_t s = 0; s < mdp.n_states; ++s)
        for (std::size_t a = 0; a < mdp.n_actions; ++a)
            q[mdp.idx(s, a)] =
                mdp.reward[mdp.idx(s, a)] + mdp.gamma * v[mdp.next[mdp.idx(s, a)]];
    return q;
}

std::vector<double> discounted_visitation(const TabularMdp& mdp,
                                          const SoftmaxPolicy& pi) {
    const std::size_t S = mdp.n_states;
    Tensor p_pi;
    std::vector<double> r_pi;
    policy_kernel(mdp, pi.all_probs(), p_pi, r_pi);
    std::vector<double> p0(S, 0.0);
    if (mdp.start_dist.empty())
        p0[0] = 1.0;
    else
        p0 = mdp.start_dist;
    // rho solves (I - gamma * P_pi^T) rho = p0
    Tensor a({S, S});
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < S; ++j)
            a(i, j) = (i == j ? 1.0 : 0.0) - mdp.gamma * p_pi(j, i);
    return solve_dense(a, p0);
}

double exact_objective(const TabularMdp& mdp, const SoftmaxPolicy& pi) {
    std::vector<double> v = exact_values(mdp, pi);
    double j = 0.0;
    if (mdp.start_dist.empty()) return v[0];
    for (std::size_t s = 0; s < mdp.n_states; ++s) j += mdp.start_dist[s] * v[s];
    return j;
}

std::vector<double> exact_policy_gradient(const TabularMdp& mdp,
                                          const SoftmaxPolicy& pi) {
    if (mdp.n_states * mdp.n_actions > 100)
        throw std::invalid_argument("exact_policy_gradient: MDP too large (> 100 entries)");
    // Implicit differentiation of the Bellman system collapses to
    // dJ/dlogit(s,a) = rho(s) * pi(a|s) * (Q(s,a) - V(s)).
    const std::size_t S = mdp.n_states, A = mdp.n_actions;
    std::vector<double> v = exact_values(mdp, pi);
    std::vector<double> q = exact_q_values(mdp, pi);
    std::vector<double> rho = discounted_visitation(mdp, pi);
    std::vector<double> grad(S * A);
    for (std::size_t s = 0; s < S; ++s) {
        auto p = pi.probs(s);
        for (std::size_t a = 0; a < A; ++a)
            grad[s * A + a] = rho[s] * p[a] * (q[mdp.idx(s, a)] - v[s]);
    }
    return grad;
}

std::size_t sample_start_state(const TabularMdp& mdp, Rng& rng) {
    if (mdp.start_dist.empty()) return 0;
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t s = 0; s < mdp.n_states; ++s) {
        acc += mdp.start_dist[s];
        if (u < acc) return s;
    }
    return mdp.n_states - 1;
}

TabularTrajectory sample_trajectory(const TabularMdp& mdp, const SoftmaxPolicy& pi,
                                    std::size_t max_len, Rng& rng) {
    TabularTrajectory tr;
    std::size_t s = sample_start_state(mdp, rng);
    for (std::size_t t = 0; t < max_len; ++t) {
        std::size_t a = pi.sample(s, rng);
        tr.states.push_back(s);
        tr.actions.push_back(a);
        tr.rewards.push_back(mdp.reward[mdp.idx(s, a)]);
        s = mdp.next[mdp.idx(s, a)];
    }
    return tr;
}

std::vector<double> symmetric_eigen(Tensor a, Tensor& evecs) {
    if (a.rank() != 2 || a.shape[0] != a.shape[1])
        throw std::invalid_argument("symmetric_eigen: matrix must be square");
    const std::size_t n = a.shape[0];
    evecs = Tensor({n, n});
    for (std::size_t i = 0; i < n; ++i) evecs(i, i) = 1.0;
    // cyclic Jacobi rotations
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = evecs(k, p), vkq = evecs(k, q);
                    evecs(k, p) = c * vkp - s * vkq;
                    evecs(k, q) = s * vkp + c * vkq;
                }
            }
    }
    std::vector<double> evals(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
    return evals;
}

}  // namespace avec
