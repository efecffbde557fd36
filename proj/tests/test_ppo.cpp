#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>

#include "avec/ppo.hpp"
#include "avec/train.hpp"
#include "test_util.hpp"

using namespace avec;

namespace {

// 2-step seeded toy problem with linear 1-1 nets; everything is small enough
// to recompute by hand.
struct ToyProblem {
    PpoState state;
    RolloutBuffer buf{2, 1, 1};
    PpoParams params;

    ToyProblem() {
        state.policy.mean = Mlp({1, 1}, Activation::tanh);
        state.policy.mean.w[0].data[0] = 0.05;
        state.policy.log_std = Tensor({1}, {0.0});
        state.policy.act_limit = 1.0;
        state.critic.net = Mlp({1, 1}, Activation::tanh);
        state.critic.net.w[0].data[0] = 0.1;

        params.epochs = 1;
        params.minibatches = 1;
        params.clip = 0.2;
        params.gae = GaeConfig{0.9, 0.95};
        params.actor_stepsize = 2.5e-4;
        params.critic_stepsize = 2.5e-4;
        params.norm_adv = false;
        params.max_grad_norm = 0.5;
        params.loss = CriticLossSpec{CriticLoss::mse, 1.0};

        std::vector<const Tensor*> ap{&state.policy.mean.w[0], &state.policy.mean.b[0],
                                      &state.policy.log_std};
        state.actor_opt = AdamState::init(ap, params.actor_adam());
        std::vector<const Tensor*> cp{&state.critic.net.w[0], &state.critic.net.b[0]};
        state.critic_opt = AdamState::init(cp, params.critic_adam());

        buf.obs.data = {1.0, -0.5};
        buf.act.data = {0.3, -0.2};
        buf.rew = {1.0, 0.0};
        buf.value = {0.1, -0.05};
        buf.next_value = {-0.05, 0.0};
        buf.terminal = {0, 1};
        buf.episode_end = {0, 1};
        for (std::size_t t = 0; t < 2; ++t) {
            std::vector<double> o{buf.obs.data[t]}, a{buf.act.data[t]};
            buf.logp[t] = state.policy.log_prob(o, a);
        }
    }
};

double adam_first_step(double lr, double g) { return lr * g / (std::abs(g) + 1e-8); }

}  // namespace

TEST_CASE("ppo_update: MSE critic step reproduces an independent reference trace") {
    ToyProblem toy;
    Rng rng(0);
    UpdateMetrics met = ppo_update(toy.buf, toy.state, toy.params, rng);

    // --- reference GAE ---
    const double gamma = 0.9, lambda = 0.95;
    const double d1 = 0.0 + 0.0 - (-0.05);
    const double d0 = 1.0 + gamma * (-0.05) - 0.1;
    const double a1 = d1;
    const double a0 = d0 + gamma * lambda * a1;
    const double tgt0 = 0.1 + a0, tgt1 = -0.05 + a1;

    // --- reference critic step (linear f = w s + b, MSE) ---
    const double f0 = 0.1 * 1.0, f1 = 0.1 * -0.5;
    const double loss = 0.5 * ((f0 - tgt0) * (f0 - tgt0) + (f1 - tgt1) * (f1 - tgt1));
    CHECK(met.critic_loss == doctest::Approx(loss).epsilon(1e-12));
    double gw = (f0 - tgt0) * 1.0 + (f1 - tgt1) * (-0.5);  // 2/n sum(resid * s)
    double gb = (f0 - tgt0) + (f1 - tgt1);
    const double norm = std::sqrt(gw * gw + gb * gb);
    if (norm > 0.5) {
        gw *= 0.5 / norm;
        gb *= 0.5 / norm;
    }
    const double w_ref = 0.1 - adam_first_step(2.5e-4, gw);
    const double b_ref = 0.0 - adam_first_step(2.5e-4, gb);
    CHECK(toy.state.critic.net.w[0].data[0] == doctest::Approx(w_ref).epsilon(1e-9));
    CHECK(toy.state.critic.net.b[0].data[0] == doctest::Approx(b_ref).epsilon(1e-9));

    // --- reference actor step (ratios exactly 1 at the frozen point) ---
    const double mu0 = 0.05, mu1 = -0.025;
    const double z0 = 0.3 - mu0, z1 = -0.2 - mu1;  // sigma = 1
    double gwm = -0.5 * (z0 * 1.0 * a0 + z1 * (-0.5) * a1);
    double gbm = -0.5 * (z0 * a0 + z1 * a1);
    double gls = -0.5 * ((z0 * z0 - 1.0) * a0 + (z1 * z1 - 1.0) * a1);
    const double anorm = std::sqrt(gwm * gwm + gbm * gbm + gls * gls);
    CHECK(met.actor_grad_norm == doctest::Approx(anorm).epsilon(1e-9));
    if (anorm > 0.5) {
        gwm *= 0.5 / anorm;
        gbm *= 0.5 / anorm;
        gls *= 0.5 / anorm;
    }
    CHECK(toy.state.policy.mean.w[0].data[0] ==
          doctest::Approx(0.05 - adam_first_step(2.5e-4, gwm)).epsilon(1e-9));
    CHECK(toy.state.policy.mean.b[0].data[0] ==
          doctest::Approx(0.0 - adam_first_step(2.5e-4, gbm)).epsilon(1e-9));
    CHECK(toy.state.policy.log_std.data[0] ==
          doctest::Approx(0.0 - adam_first_step(2.5e-4, gls)).epsilon(1e-9));

    CHECK(met.actor_loss == doctest::Approx(-(a0 + a1) / 2.0).epsilon(1e-9));
    CHECK(met.correction == 0.0);  // MSE leaves no bias-correction constant
}

TEST_CASE("ppo_update: zero-advantage buffer gives a vanishing actor gradient") {
    ToyProblem toy;
    toy.params.norm_adv = true;
    toy.buf.rew = {0.0, 0.0};
    toy.buf.value = {0.0, 0.0};
    toy.buf.next_value = {0.0, 0.0};
    Rng rng(0);
    UpdateMetrics met = ppo_update(toy.buf, toy.state, toy.params, rng);
    CHECK(met.actor_grad_norm <= 1e-8);
}

TEST_CASE("ppo_update: one small residual-variance step decreases the loss") {
    ToyProblem toy;
    toy.params.loss = CriticLossSpec{CriticLoss::avec, 0.0};
    toy.params.critic_stepsize = 1e-6;
    toy.params.actor_stepsize = 0.0;

    // recompute the targets the update will build (correction starts at 0)
    GaeResult res = gae_targets(toy.buf.rew, toy.buf.terminal, toy.buf.episode_end,
                                toy.buf.value, toy.buf.next_value, toy.params.gae);
    auto loss_now = [&](const Mlp& net) {
        std::vector<double> preds{net.value1(std::vector<double>{1.0}),
                                  net.value1(std::vector<double>{-0.5})};
        return residual_variance_loss(preds, res.targets);
    };
    const double before = loss_now(toy.state.critic.net);
    REQUIRE(before > 0.0);
    Rng rng(0);
    ppo_update(toy.buf, toy.state, toy.params, rng);
    CHECK(loss_now(toy.state.critic.net) < before);
}

TEST_CASE("ppo_update: AVEC exposes a mean-matching corrected estimator") {
    ToyProblem toy;
    toy.params.loss = CriticLossSpec{CriticLoss::avec, 0.0};
    Rng rng(0);
    UpdateMetrics met = ppo_update(toy.buf, toy.state, toy.params, rng);
    GaeResult res = gae_targets(toy.buf.rew, toy.buf.terminal, toy.buf.episode_end,
                                toy.buf.value, toy.buf.next_value, toy.params.gae);
    // correction = mean(target - f_new) over the batch
    std::vector<double> preds{toy.state.critic.net.value1(std::vector<double>{1.0}),
                              toy.state.critic.net.value1(std::vector<double>{-0.5})};
    const double expect = vec_mean(res.targets) - vec_mean(preds);
    CHECK(met.correction == doctest::Approx(expect).epsilon(1e-12));
    CHECK(met.bias_ident_dev <= 1e-10);
}

TEST_CASE("ppo_update: MSE path is bit-identical with AVEC plumbing toggled") {
    ToyProblem a, b;
    b.params.correct_advantages = true;  // inert under MSE: correction is zero
    Rng ra(3), rb(3);
    ppo_update(a.buf, a.state, a.params, ra);
    ppo_update(b.buf, b.state, b.params, rb);
    CHECK(a.state.policy.flat_params() == b.state.policy.flat_params());
    CHECK(a.state.critic.net.flat_params() == b.state.critic.net.flat_params());
    CHECK(a.state.critic.correction == b.state.critic.correction);
}

TEST_CASE("ppo_update: minibatch size below 2 rejected for pairwise losses") {
    ToyProblem toy;
    toy.params.loss = CriticLossSpec{CriticLoss::avec, 0.0};
    toy.params.minibatches = 2;  // two singleton minibatches
    Rng rng(0);
    CHECK_THROWS_AS(ppo_update(toy.buf, toy.state, toy.params, rng),
                    std::invalid_argument);
}

TEST_CASE("normalized actor gradient direction is invariant to advantage shifts") {
    Rng rng(21);
    GaussianPolicy pol = GaussianPolicy::make(2, 1, 4, 1, Activation::tanh, 0.0, 1.0, rng);
    Tensor obs({6, 2}), act({6, 1});
    for (double& v : obs.data) v = rng.normal();
    for (double& v : act.data) v = rng.normal();
    std::vector<double> adv(6);
    for (double& v : adv) v = rng.normal();

    auto grad_for = [&](std::vector<double> a) {
        const double mean = vec_mean(a);
        double sq = 0.0;
        for (double x : a) sq += (x - mean) * (x - mean);
        const double sd = std::sqrt(sq / (a.size() - 1.0));
        for (double& x : a) x = (x - mean) / (sd + 1e-8);
        Tape tape;
        auto ctx = pol.inject(tape);
        Var lp = pol.log_prob_node(tape, ctx, obs, act);
        Var loss = tape.neg(
            tape.mean(tape.mul(lp, tape.constant(Tensor({6, 1}, std::move(a))))));
        tape.backward(loss);
        return pol.collect_grads_ctx(tape, ctx);
    };
    auto g1 = grad_for(adv);
    std::vector<double> shifted = adv;
    for (double& x : shifted) x += 7.3;
    auto g2 = grad_for(shifted);
    const double cos = dot(g1, g2) / (l2_norm(g1) * l2_norm(g2));
    CHECK(cos == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collect_rollout: deterministic given the seed, bit-identical buffers") {
    auto env = make_env("sparse_mountaincar");
    Rng rng(5);
    GaussianPolicy pol = GaussianPolicy::make(env->obs_dim(), env->act_dim(), 8, 1,
                                              Activation::tanh, -20.0, 1.0, rng);
    ValueFn zero = [](std::span<const double>) { return 0.0; };
    auto collect = [&] {
        EnvCursor cursor(*env, 11);
        Rng r(17);
        return collect_rollout(cursor, pol, zero, 64, r);
    };
    RolloutBuffer b1 = collect();
    RolloutBuffer b2 = collect();
    CHECK(std::memcmp(b1.obs.data.data(), b2.obs.data.data(),
                      b1.obs.data.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(b1.act.data.data(), b2.act.data.data(),
                      b1.act.data.size() * sizeof(double)) == 0);
    CHECK(b1.logp == b2.logp);
    CHECK(b1.rew == b2.rew);
}

TEST_CASE("collect_rollout: T=1 records a single transition with its bootstrap") {
    auto env = make_env("lqr1");
    Rng rng(6);
    GaussianPolicy pol = GaussianPolicy::make(1, 1, 4, 1, Activation::tanh, 0.0, 2.0, rng);
    ValueFn vf = [](std::span<const double> o) { return 2.0 * o[0]; };
    EnvCursor cursor(*env, 3);
    Rng r(4);
    RolloutBuffer buf = collect_rollout(cursor, pol, vf, 1, r);
    CHECK(buf.size() == 1);
    CHECK(buf.value[0] == doctest::Approx(2.0 * 1.0));  // x0 = 1
    CHECK(std::isfinite(buf.next_value[0]));
}

TEST_CASE("collect_rollout: sparse env with a hopeless policy records zero rewards") {
    auto env = make_env("sparse_mountaincar");
    Rng rng(7);
    GaussianPolicy pol = GaussianPolicy::make(2, 1, 4, 1, Activation::tanh, -3.0, 1.0, rng);
    ValueFn zero = [](std::span<const double>) { return 0.0; };
    EnvCursor cursor(*env, 9);
    Rng r(8);
    RolloutBuffer buf = collect_rollout(cursor, pol, zero, 128, r);
    for (double x : buf.rew) CHECK(x == 0.0);
}
