#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "avec/policy.hpp"
#include "test_util.hpp"

using namespace avec;

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

TEST_CASE("gaussian policy: log-prob matches the closed form") {
    Rng rng(1);
    GaussianPolicy pol = GaussianPolicy::make(3, 2, 8, 2, Activation::tanh, -0.3, 1.0, rng);
    std::vector<double> obs{0.1, -0.4, 0.7};
    Tensor mu = pol.mean.value(Tensor({3}, std::vector<double>(obs)));
    std::vector<double> act{0.5, -0.2};
    double expected = -0.5 * 2 * kLog2Pi;
    for (std::size_t i = 0; i < 2; ++i) {
        const double sigma = std::exp(-0.3);
        const double z = (act[i] - mu.data[i]) / sigma;
        expected += -0.5 * z * z - (-0.3);
    }
    CHECK(pol.log_prob(obs, act) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gaussian policy: sampling records the log-prob of the drawn action") {
    Rng rng(2);
    GaussianPolicy pol = GaussianPolicy::make(2, 1, 4, 1, Activation::tanh, 0.0, 1.0, rng);
    std::vector<double> obs{0.3, 0.9};
    Rng srng(5);
    double logp = 0.0;
    auto act = pol.sample(obs, srng, &logp);
    CHECK(pol.log_prob(obs, act) == doctest::Approx(logp).epsilon(1e-12));
}

TEST_CASE("gaussian policy: entropy equals the closed form of the log-std") {
    Rng rng(3);
    GaussianPolicy pol = GaussianPolicy::make(2, 3, 4, 1, Activation::tanh, 0.2, 1.0, rng);
    double expected = 0.5 * 3 * (kLog2Pi + 1.0) + 3 * 0.2;
    CHECK(pol.entropy() == doctest::Approx(expected).epsilon(1e-12));

    // clamping applies: a wildly negative log-std saturates at -20
    pol.log_std.data[0] = -50.0;
    double clamped = 0.5 * 3 * (kLog2Pi + 1.0) + (-20.0 + 0.2 + 0.2);
    CHECK(pol.entropy() == doctest::Approx(clamped).epsilon(1e-12));
}

TEST_CASE("gaussian policy: tape log-prob agrees with the plain path") {
    Rng rng(4);
    GaussianPolicy pol = GaussianPolicy::make(3, 2, 6, 2, Activation::tanh, -0.1, 1.0, rng);
    Tensor obs({4, 3}), act({4, 2});
    for (double& v : obs.data) v = rng.normal();
    for (double& v : act.data) v = rng.normal();
    Tape tape;
    auto ctx = pol.inject(tape);
    Var lp = pol.log_prob_node(tape, ctx, obs, act);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> o{obs(i, 0), obs(i, 1), obs(i, 2)};
        std::vector<double> a{act(i, 0), act(i, 1)};
        CHECK(tape.value(lp).data[i] == doctest::Approx(pol.log_prob(o, a)).epsilon(1e-12));
    }
    // entropy node agrees too
    Tape t2;
    auto ctx2 = pol.inject(t2);
    CHECK(t2.scalar_value(pol.entropy_node(t2, ctx2)) ==
          doctest::Approx(pol.entropy()).epsilon(1e-12));
}

TEST_CASE("gaussian policy: log-prob gradient passes finite differences") {
    Rng rng(5);
    GaussianPolicy pol = GaussianPolicy::make(2, 1, 4, 1, Activation::tanh, 0.0, 1.0, rng);
    Tensor obs({3, 2}), act({3, 1});
    for (double& v : obs.data) v = rng.normal();
    for (double& v : act.data) v = rng.normal();

    Tape tape;
    auto ctx = pol.inject(tape);
    Var loss = tape.mean(pol.log_prob_node(tape, ctx, obs, act));
    tape.backward(loss);
    std::vector<double> analytic = pol.collect_grads_ctx(tape, ctx);

    auto f = [&](std::span<const double> p) {
        GaussianPolicy p2 = pol;
        p2.set_flat_params(p);
        Tape t2;
        auto c2 = p2.inject(t2, false);
        return t2.scalar_value(t2.mean(p2.log_prob_node(t2, c2, obs, act)));
    };
    auto numeric = testutil::finite_diff_grad(f, pol.flat_params());
    CHECK(testutil::max_rel_err(analytic, numeric) <= 1e-5);
}

TEST_CASE("squashed policy: actions respect the limit and log-probs are finite") {
    Rng rng(6);
    SquashedGaussianPolicy pol =
        SquashedGaussianPolicy::make(3, 2, 8, 2, Activation::relu, 1.5, rng);
    std::vector<double> obs{0.2, -0.8, 1.1};
    Rng srng(7);
    for (int i = 0; i < 50; ++i) {
        double logp = 0.0;
        auto a = pol.sample(obs, srng, &logp);
        for (double x : a) CHECK(std::abs(x) <= 1.5);
        CHECK(std::isfinite(logp));
    }
}

TEST_CASE("squashed policy: log-prob matches a change-of-variables evaluation") {
    // Build a head with known mean/log-std by zeroing the network and setting
    // the output bias directly.
    SquashedGaussianPolicy pol;
    pol.net = Mlp({2, 2 * 1}, Activation::tanh);  // linear: zero weights
    pol.act_limit = 2.0;
    pol.net.b[0].data[0] = 0.4;   // mean
    pol.net.b[0].data[1] = -0.5;  // log std
    std::vector<double> obs{0.0, 0.0};
    Rng srng(8);
    double logp = 0.0;
    auto a = pol.sample(obs, srng, &logp);
    // reference: logp = N(u; mu, sigma) - log|da/du|, a = lim*tanh(u)
    const double u = std::atanh(a[0] / 2.0);
    const double sigma = std::exp(-0.5);
    const double z = (u - 0.4) / sigma;
    const double gauss = -0.5 * z * z - (-0.5) - 0.5 * kLog2Pi;
    const double logdet = std::log(2.0 * (1.0 - std::tanh(u) * std::tanh(u)));
    CHECK(logp == doctest::Approx(gauss - logdet).epsilon(1e-9));
}

TEST_CASE("squashed policy: tape sample matches the plain sampler pathwise") {
    Rng rng(9);
    SquashedGaussianPolicy pol =
        SquashedGaussianPolicy::make(2, 2, 6, 1, Activation::relu, 1.0, rng);
    Tensor obs({1, 2}, {0.3, -0.6});
    Tensor noise({1, 2}, {0.7, -1.2});
    Tape tape;
    auto ctx = pol.inject(tape, false);
    auto node = pol.sample_node(tape, ctx, obs, noise);

    // plain recomputation with the same noise
    Tensor head = pol.net.value(Tensor({2}, {0.3, -0.6}));
    for (std::size_t i = 0; i < 2; ++i) {
        const double mu = head.data[i];
        const double ls = std::min(2.0, std::max(-20.0, head.data[2 + i]));
        const double u = mu + std::exp(ls) * noise.data[i];
        CHECK(tape.value(node.action).data[i] ==
              doctest::Approx(std::tanh(u)).epsilon(1e-12));
    }
    CHECK(std::isfinite(tape.value(node.logp).data[0]));
}

TEST_CASE("squashed policy: reparameterized gradient passes finite differences") {
    Rng rng(10);
    SquashedGaussianPolicy pol =
        SquashedGaussianPolicy::make(2, 1, 4, 1, Activation::tanh, 1.0, rng);
    Tensor obs({3, 2}), noise({3, 1});
    for (double& v : obs.data) v = rng.normal();
    for (double& v : noise.data) v = rng.normal();

    auto eval = [&](const Mlp& net) {
        SquashedGaussianPolicy p2 = pol;
        p2.net = net;
        Tape t;
        auto ctx = p2.inject(t, false);
        auto node = p2.sample_node(t, ctx, obs, noise);
        // scalar functional of both outputs
        return t.scalar_value(
            t.add(t.mean(node.logp), t.mean(t.square(node.action))));
    };
    Tape tape;
    auto ctx = pol.inject(tape);
    auto node = pol.sample_node(tape, ctx, obs, noise);
    Var loss = tape.add(tape.mean(node.logp), tape.mean(tape.square(node.action)));
    tape.backward(loss);
    std::vector<double> analytic = collect_grads(tape, ctx.net_vars);

    auto f = [&](std::span<const double> p) {
        Mlp net = pol.net;
        net.set_flat_params(p);
        return eval(net);
    };
    auto numeric = testutil::finite_diff_grad(f, pol.net.flat_params());
    CHECK(testutil::max_rel_err(analytic, numeric) <= 1e-5);
}
