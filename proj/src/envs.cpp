#include "avec/envs.hpp"

#include <cmath>
#include <stdexcept>

#include "avec/rng.hpp"

namespace avec {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_action(std::span<const double> action, std::size_t dim) {
    if (action.size() != dim)
        throw std::invalid_argument("env: action dimension mismatch");
    for (double a : action)
        if (!std::isfinite(a)) throw std::invalid_argument("env: non-finite action");
}

double clip(double x, double lo, double hi, bool& clipped) {
    if (x < lo) {
        clipped = true;
        return lo;
    }
    if (x > hi) {
        clipped = true;
        return hi;
    }
    return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularEnv
// ---------------------------------------------------------------------------

TabularEnv::TabularEnv(std::string id, TabularMdp mdp, std::size_t horizon)
    : id_(std::move(id)), mdp_(std::move(mdp)), horizon_(horizon) {
    mdp_.validate();
}

std::vector<double> TabularEnv::initial_state(std::uint64_t) const {
    std::vector<double> onehot(mdp_.n_states, 0.0);
    onehot[0] = 1.0;  // fixed start at state 0
    return onehot;
}

std::size_t TabularEnv::state_index(std::span<const double> state) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < state.size(); ++i)
        if (state[i] > state[best]) best = i;
    return best;
}

std::size_t TabularEnv::action_bin(double a) const {
    const double lim = act_limit();
    const std::size_t bins = mdp_.n_actions;
    double x = std::min(lim, std::max(-lim, a));
    auto bin = static_cast<std::size_t>((x + lim) / (2.0 * lim) * static_cast<double>(bins));
    return bin >= bins ? bins - 1 : bin;
}

StepOutcome TabularEnv::transition(std::span<const double> state,
                                   std::span<const double> action) const {
    check_action(action, 1);
    StepOutcome out;
    bool clipped = false;
    const double a = clip(action[0], -act_limit(), act_limit(), clipped);
    const std::size_t s = state_index(state);
    const std::size_t bin = action_bin(a);
    const std::size_t s2 = mdp_.next[mdp_.idx(s, bin)];
    out.state.assign(mdp_.n_states, 0.0);
    out.state[s2] = 1.0;
    out.reward = mdp_.reward[mdp_.idx(s, bin)];
    out.terminal = false;  // infinite-horizon chain; episodes end at the cap
    out.clipped = clipped;
    return out;
}

std::pair<std::vector<double>, std::vector<double>> TabularEnv::obs_bounds() const {
    return {std::vector<double>(mdp_.n_states, 0.0), std::vector<double>(mdp_.n_states, 1.0)};
}

std::vector<double> gaussian_bin_probs(const TabularEnv& env, double mean, double stddev) {
    const std::size_t bins = env.mdp().n_actions;
    const double lim = env.act_limit();
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (stddev * std::sqrt(2.0))); };
    std::vector<double> p(bins);
    double prev = 0.0;  // CDF at -inf; clipping folds the tails into edge bins
    for (std::size_t i = 0; i < bins; ++i) {
        const double hi_edge = -lim + (2.0 * lim) * static_cast<double>(i + 1) /
                                          static_cast<double>(bins);
        const double c = (i + 1 == bins) ? 1.0 : cdf(hi_edge);
        p[i] = c - prev;
        prev = c;
    }
    return p;
}

// ---------------------------------------------------------------------------
// LQR: x' = Ax + Bu with A = B = I, r = -(x.x + u.u), fixed x0 = ones.
// ---------------------------------------------------------------------------

class LqrEnv : public Env {
  public:
    LqrEnv(std::size_t dim, std::size_t horizon) : dim_(dim), horizon_(horizon) {}
    std::string id() const override { return "lqr" + std::to_string(dim_); }
    std::size_t state_dim() const override { return dim_; }
    std::size_t obs_dim() const override { return dim_; }
    std::size_t act_dim() const override { return dim_; }
    double act_limit() const override { return 2.0; }
    std::size_t horizon() const override { return horizon_; }

    std::vector<double> initial_state(std::uint64_t) const override {
        return std::vector<double>(dim_, 1.0);
    }

    StepOutcome transition(std::span<const double> state,
                           std::span<const double> action) const override {
        check_action(action, dim_);
        StepOutcome out;
        out.state.resize(dim_);
        double cost = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            const double u = clip(action[i], -act_limit(), act_limit(), out.clipped);
            out.state[i] = state[i] + u;
            cost += state[i] * state[i] + u * u;
        }
        out.reward = -cost;
        out.terminal = false;
        return out;
    }

    std::pair<std::vector<double>, std::vector<double>> obs_bounds() const override {
        return {std::vector<double>(dim_, -5.0), std::vector<double>(dim_, 5.0)};
    }

  private:
    std::size_t dim_, horizon_;
};

// ---------------------------------------------------------------------------
// Cart-pole swing-up: dense reward cos(theta), theta = 0 upright. The pole
// starts hanging down with a small seeded angle offset.
// state = (x, xdot, theta, thetadot); obs = (x, xdot, cos, sin, thetadot).
// ---------------------------------------------------------------------------

class CartpoleSwingupEnv : public Env {
  public:
    explicit CartpoleSwingupEnv(std::size_t horizon) : horizon_(horizon) {}
    std::string id() const override { return "cartpole_swingup"; }
    std::size_t state_dim() const override { return 4; }
    std::size_t obs_dim() const override { return 5; }
    std::size_t act_dim() const override { return 1; }
    double act_limit() const override { return 1.0; }
    std::size_t horizon() const override { return horizon_; }

    std::vector<double> initial_state(std::uint64_t seed) const override {
        Rng rng(Rng::splitmix(seed ^ 0x43505355ull));
        return {0.0, 0.0, kPi + rng.uniform(-0.05, 0.05), 0.0};
    }

    StepOutcome transition(std::span<const double> state,
                           std::span<const double> action) const override {
        check_action(action, 1);
        StepOutcome out;
        const double force_mag = 10.0, g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, dt = 0.02;
        const double force = force_mag * clip(action[0], -1.0, 1.0, out.clipped);
        const double x = state[0], xd = state[1], th = state[2], thd = state[3];
        const double ct = std::cos(th), st = std::sin(th);
        const double total = mc + mp;
        const double tmp = (force + mp * l * thd * thd * st) / total;
        const double thacc = (g * st - ct * tmp) / (l * (4.0 / 3.0 - mp * ct * ct / total));
        const double xacc = tmp - mp * l * thacc * ct / total;
        out.state = {x + dt * xd, xd + dt * xacc, th + dt * thd, thd + dt * thacc};
        out.reward = std::cos(out.state[2]);
        out.terminal = std::abs(out.state[0]) > 2.4;  // cart ran off the track
        return out;
    }

    std::vector<double> observe(std::span<const double> s) const override {
        return {s[0], s[1], std::cos(s[2]), std::sin(s[2]), s[3]};
    }

    std::pair<std::vector<double>, std::vector<double>> obs_bounds() const override {
        return {{-2.4, -5.0, -1.0, -1.0, -10.0}, {2.4, 5.0, 1.0, 1.0, 10.0}};
    }

  private:
    std::size_t horizon_;
};

// ---------------------------------------------------------------------------
// Sparse mountain car: reward 0 everywhere except +100 on the transition
// that reaches the goal position. Start position seeded in [-0.6, -0.4].
// ---------------------------------------------------------------------------

class SparseMountainCarEnv : public Env {
  public:
    explicit SparseMountainCarEnv(std::size_t horizon) : horizon_(horizon) {}
    std::string id() const override { return "sparse_mountaincar"; }
    std::size_t state_dim() const override { return 2; }
    std::size_t obs_dim() const override { return 2; }
    std::size_t act_dim() const override { return 1; }
    double act_limit() const override { return 1.0; }
    std::size_t horizon() const override { return horizon_; }

    std::vector<double> initial_state(std::uint64_t seed) const override {
        Rng rng(Rng::splitmix(seed ^ 0x4d43415255ull));
        return {rng.uniform(-0.6, -0.4), 0.0};
    }

    StepOutcome transition(std::span<const double> state,
                           std::span<const double> action) const override {
        check_action(action, 1);
        StepOutcome out;
        const double a = clip(action[0], -1.0, 1.0, out.clipped);
        double p = state[0], v = state[1];
        v += 0.0015 * a - 0.0025 * std::cos(3.0 * p);
        v = std::min(0.07, std::max(-0.07, v));
        p += v;
        if (p < -1.2) {
            p = -1.2;
            v = 0.0;
        }
        out.terminal = p >= 0.45;
        out.reward = out.terminal ? 100.0 : 0.0;
        out.state = {p, v};
        return out;
    }

    std::pair<std::vector<double>, std::vector<double>> obs_bounds() const override {
        return {{-1.2, -0.07}, {0.6, 0.07}};
    }

  private:
    std::size_t horizon_;
};

// ---------------------------------------------------------------------------
// Sparse two-link swing-up (acrobot-style): torque on the middle joint,
// reward +1 only on the transition that lifts the tip above one link height.
// state = (th1, th2, dth1, dth2); obs = (cos/sin of both angles, velocities).
// ---------------------------------------------------------------------------

class SparseAcrobotEnv : public Env {
  public:
    explicit SparseAcrobotEnv(std::size_t horizon) : horizon_(horizon) {}
    std::string id() const override { return "sparse_acrobot"; }
    std::size_t state_dim() const override { return 4; }
    std::size_t obs_dim() const override { return 6; }
    std::size_t act_dim() const override { return 1; }
    double act_limit() const override { return 1.0; }
    std::size_t horizon() const override { return horizon_; }

    std::vector<double> initial_state(std::uint64_t seed) const override {
        Rng rng(Rng::splitmix(seed ^ 0x41435242ull));
        std::vector<double> s(4);
        for (double& x : s) x = rng.uniform(-0.1, 0.1);
        return s;
    }

    StepOutcome transition(std::span<const double> state,
                           std::span<const double> action) const override {
        check_action(action, 1);
        StepOutcome out;
        const double torque = clip(action[0], -1.0, 1.0, out.clipped);
        std::vector<double> s(state.begin(), state.end());
        // RK4 over dt = 0.2
        const double dt = 0.2;
        auto k1 = deriv(s, torque);
        auto k2 = deriv(advance(s, k1, dt / 2), torque);
        auto k3 = deriv(advance(s, k2, dt / 2), torque);
        auto k4 = deriv(advance(s, k3, dt), torque);
        for (std::size_t i = 0; i < 4; ++i)
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        s[0] = wrap(s[0]);
        s[1] = wrap(s[1]);
        s[2] = std::min(4.0 * kPi, std::max(-4.0 * kPi, s[2]));
        s[3] = std::min(9.0 * kPi, std::max(-9.0 * kPi, s[3]));
        out.terminal = -std::cos(s[0]) - std::cos(s[0] + s[1]) > 1.0;
        out.reward = out.terminal ? 1.0 : 0.0;
        out.state = std::move(s);
        return out;
    }

    std::vector<double> observe(std::span<const double> s) const override {
        return {std::cos(s[0]), std::sin(s[0]), std::cos(s[1]), std::sin(s[1]), s[2], s[3]};
    }

    std::pair<std::vector<double>, std::vector<double>> obs_bounds() const override {
        return {{-1, -1, -1, -1, -4 * kPi, -9 * kPi}, {1, 1, 1, 1, 4 * kPi, 9 * kPi}};
    }

  private:
    std::size_t horizon_;

    static double wrap(double th) {
        while (th > kPi) th -= 2.0 * kPi;
        while (th < -kPi) th += 2.0 * kPi;
        return th;
    }

    static std::vector<double> advance(const std::vector<double>& s,
                                       const std::vector<double>& d, double h) {
        std::vector<double> r(4);
        for (std::size_t i = 0; i < 4; ++i) r[i] = s[i] + h * d[i];
        return r;
    }

    // Standard two-link dynamics (unit masses and lengths, gravity 9.8).
    static std::vector<double> deriv(const std::vector<double>& s, double torque) {
        const double m1 = 1.0, m2 = 1.0, l1 = 1.0, lc1 = 0.5, lc2 = 0.5;
        const double i1 = 1.0, i2 = 1.0, g = 9.8;
        const double th1 = s[0], th2 = s[1], dth1 = s[2], dth2 = s[3];
        const double d1 = m1 * lc1 * lc1 +
                          m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(th2)) + i1 + i2;
        const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(th2)) + i2;
        const double phi2 = m2 * lc2 * g * std::cos(th1 + th2 - kPi / 2.0);
        const double phi1 = -m2 * l1 * lc2 * dth2 * dth2 * std::sin(th2) -
                            2.0 * m2 * l1 * lc2 * dth2 * dth1 * std::sin(th2) +
                            (m1 * lc1 + m2 * l1) * g * std::cos(th1 - kPi / 2.0) + phi2;
        const double ddth2 =
            (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dth1 * dth1 * std::sin(th2) - phi2) /
            (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        const double ddth1 = -(d2 * ddth2 + phi1) / d1;
        return {dth1, dth2, ddth1, ddth2};
    }
};

// ---------------------------------------------------------------------------

std::vector<std::string> env_ids() {
    return {"chain3", "chain5",           "lqr1",          "lqr2",
            "cartpole_swingup", "sparse_mountaincar", "sparse_acrobot"};
}

std::unique_ptr<Env> make_env(const std::string& id, std::size_t horizon_override) {
    auto h = [&](std::size_t dflt) { return horizon_override ? horizon_override : dflt; };
    if (id == "chain3")
        return std::make_unique<TabularEnv>("chain3", make_tabular_mdp("chain3"), h(100));
    if (id == "chain5")
        return std::make_unique<TabularEnv>("chain5", make_tabular_mdp("chain5"), h(100));
    if (id == "lqr1") return std::make_unique<LqrEnv>(1, h(100));
    if (id == "lqr2") return std::make_unique<LqrEnv>(2, h(100));
    if (id == "cartpole_swingup") return std::make_unique<CartpoleSwingupEnv>(h(200));
    if (id == "sparse_mountaincar") return std::make_unique<SparseMountainCarEnv>(h(200));
    if (id == "sparse_acrobot") return std::make_unique<SparseAcrobotEnv>(h(200));
    throw std::invalid_argument("unknown env id: " + id);
}

}  // namespace avec
