#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "avec/sac.hpp"
#include "test_util.hpp"

using namespace avec;

namespace {

SacNets tiny_nets(const SacParams& params, Rng& rng) {
    return make_sac_nets(2, 1, 8, 1, Activation::relu, 1.0, params, rng);
}

ReplayBuffer seeded_replay(std::size_t n, Rng& rng) {
    ReplayBuffer replay(1024, 2, 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> obs{rng.normal(), rng.normal()};
        std::vector<double> act{std::tanh(rng.normal())};
        std::vector<double> next{rng.normal(), rng.normal()};
        replay.push(obs, act, rng.normal(), next, rng.uniform() < 0.1);
    }
    return replay;
}

}  // namespace

TEST_CASE("polyak: tau=1 copies the fresh network exactly") {
    Rng rng(1);
    Mlp fresh = Mlp::make({2, 4, 1}, Activation::relu, rng, 0.01);
    Mlp target = Mlp::make({2, 4, 1}, Activation::relu, rng, 0.01);
    polyak_update(fresh, target, 1.0);
    CHECK(target.flat_params() == fresh.flat_params());
}

TEST_CASE("polyak: error to a frozen net decays geometrically with factor 1-tau") {
    Rng rng(2);
    Mlp fresh = Mlp::make({2, 4, 1}, Activation::relu, rng, 0.01);
    Mlp target = Mlp::make({2, 4, 1}, Activation::relu, rng, 0.01);
    const double tau = 0.25;
    std::vector<double> f = fresh.flat_params();
    std::vector<double> e0 = target.flat_params();
    for (std::size_t i = 0; i < e0.size(); ++i) e0[i] -= f[i];
    for (int k = 1; k <= 5; ++k) {
        polyak_update(fresh, target, tau);
        std::vector<double> e = target.flat_params();
        for (std::size_t i = 0; i < e.size(); ++i) {
            const double expect = e0[i] * std::pow(1.0 - tau, k);
            CHECK(std::abs((e[i] - f[i]) - expect) <= 1e-12);
        }
    }
}

TEST_CASE("sac_update: TD targets follow r + gamma (1-done) V_target") {
    SacParams params;
    params.batch_size = 16;
    Rng init(3);
    SacNets nets = tiny_nets(params, init);
    Rng data(4);
    ReplayBuffer replay = seeded_replay(64, data);
    Rng upd(5);
    UpdateMetrics met = sac_update(replay, nets, params, upd, 0);
    CHECK(std::isfinite(met.q1_loss));
    CHECK(std::isfinite(met.q2_loss));
    CHECK(std::isfinite(met.value_loss));
    CHECK(std::isfinite(met.actor_loss));
    CHECK(std::isfinite(met.mean_q_target));
}

TEST_CASE("sac_update: AVEC correction mean-matches the corrected Q to the targets") {
    SacParams params;
    params.batch_size = 32;
    params.loss = CriticLossSpec{CriticLoss::avec, 0.0};
    Rng init(6);
    SacNets nets = tiny_nets(params, init);
    Rng data(7);
    ReplayBuffer replay = seeded_replay(128, data);
    Rng upd(8);
    UpdateMetrics met = sac_update(replay, nets, params, upd, 0);
    CHECK(met.bias_ident_dev <= 1e-10);
    CHECK(nets.corr1 != 0.0);
    CHECK(nets.corr2 != 0.0);
}

TEST_CASE("sac_update: MSE keeps the corrections at exactly zero") {
    SacParams params;
    params.batch_size = 16;
    Rng init(9);
    SacNets nets = tiny_nets(params, init);
    Rng data(10);
    ReplayBuffer replay = seeded_replay(64, data);
    Rng upd(11);
    sac_update(replay, nets, params, upd, 0);
    CHECK(nets.corr1 == 0.0);
    CHECK(nets.corr2 == 0.0);
}

TEST_CASE("sac_update: golden trace - losses match an independent recomputation") {
    SacParams params;
    params.batch_size = 4;
    params.tau = 1.0;  // makes the post-update target net easy to verify
    Rng init(12);
    SacNets nets = tiny_nets(params, init);
    SacNets before = nets;  // snapshot for the reference pass
    Rng data(13);
    ReplayBuffer replay = seeded_replay(16, data);

    // replicate the exact sampling and noise stream of sac_update
    Rng upd_clone(14);
    ReplayBuffer::Batch batch = replay.sample(4, upd_clone);
    Tensor noise({4, 1});
    for (double& x : noise.data) x = upd_clone.normal();

    Rng upd(14);
    UpdateMetrics met = sac_update(replay, nets, params, upd, 0);

    // reference value loss: squared residual to min-Q minus alpha*logp
    double vloss = 0.0;
    {
        Tape tape;
        auto ctx = before.policy.inject(tape, false);
        auto node = before.policy.sample_node(tape, ctx, batch.obs, noise);
        const Tensor& act = tape.value(node.action);
        const Tensor& logp = tape.value(node.logp);
        for (std::size_t i = 0; i < 4; ++i) {
            std::vector<double> obs{batch.obs(i, 0), batch.obs(i, 1)};
            std::vector<double> a{act.data[i]};
            const double qmin =
                std::min(before.q1_value(obs, a), before.q2_value(obs, a));
            const double target = qmin - params.temperature * logp.data[i];
            const double resid = before.value.value1(obs) - target;
            vloss += resid * resid;
        }
        vloss /= 4.0;
    }
    CHECK(met.value_loss == doctest::Approx(vloss).epsilon(1e-10));

    // reference q losses against r + gamma (1-d) V_target(s')
    std::vector<double> q_hat(4);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> next{batch.next_obs(i, 0), batch.next_obs(i, 1)};
        q_hat[i] = batch.rew[i] +
                   params.gamma * (batch.done[i] ? 0.0 : 1.0) *
                       before.value_target.value1(next);
    }
    CHECK(met.mean_q_target == doctest::Approx(vec_mean(q_hat)).epsilon(1e-12));
    double q1loss = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> obs{batch.obs(i, 0), batch.obs(i, 1)};
        std::vector<double> a{batch.act(i, 0)};
        const double r = before.q1_value(obs, a) - q_hat[i];
        q1loss += r * r;
    }
    q1loss /= 4.0;
    CHECK(met.q1_loss == doctest::Approx(q1loss).epsilon(1e-10));

    // tau=1: the target net equals the freshly updated value net
    CHECK(nets.value_target.flat_params() == nets.value.flat_params());
}

TEST_CASE("sac_update: replay below batch size is rejected") {
    SacParams params;
    params.batch_size = 64;
    Rng init(15);
    SacNets nets = tiny_nets(params, init);
    Rng data(16);
    ReplayBuffer replay = seeded_replay(8, data);
    Rng upd(17);
    CHECK_THROWS_AS(sac_update(replay, nets, params, upd, 0), std::logic_error);
}

TEST_CASE("replay buffer: ring evicts oldest entries and samples uniformly") {
    ReplayBuffer replay(4, 1, 1);
    for (int i = 0; i < 6; ++i) {
        std::vector<double> o{static_cast<double>(i)}, a{0.0}, n{0.0};
        replay.push(o, a, static_cast<double>(i), n, false);
    }
    CHECK(replay.size() == 4);
    Rng rng(18);
    auto batch = replay.sample(256, rng);
    double lo = 100, hi = -100;
    for (double r : batch.rew) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo >= 2.0);  // entries 0 and 1 were evicted
    CHECK(hi == 5.0);
}

TEST_CASE("sac gradient batches: shapes and determinism") {
    SacParams params;
    params.batch_size = 8;
    Rng init(19);
    SacNets nets = tiny_nets(params, init);
    Rng data(20);
    ReplayBuffer replay = seeded_replay(64, data);
    Rng g1(21), g2(21);
    auto a = sac_gradient_batches(replay, nets, params, 3, 8, g1);
    auto b = sac_gradient_batches(replay, nets, params, 3, 8, g2);
    REQUIRE(a.size() == 3);
    CHECK(a[0].size() == nets.policy.net.param_count());
    CHECK(a == b);
}
