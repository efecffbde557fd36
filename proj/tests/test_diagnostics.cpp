#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "avec/compatible.hpp"
#include "avec/diagnostics.hpp"
#include "avec/tabular.hpp"
#include "test_util.hpp"

using namespace avec;

TEST_CASE("empirical_target_distance: perfect fit, constant offset, recount oracle") {
    Tensor obs({3, 1}, {1.0, 2.0, 3.0});
    std::vector<double> targets{2.0, 4.0, 6.0};
    ValueFn exact = [](std::span<const double> o) { return 2.0 * o[0]; };
    CHECK(empirical_target_distance(exact, obs, targets) == doctest::Approx(0.0));

    ValueFn offset = [](std::span<const double> o) { return 2.0 * o[0] + 0.7; };
    CHECK(empirical_target_distance(offset, obs, targets) ==
          doctest::Approx(0.7).epsilon(1e-12));

    Rng rng(1);
    Tensor robs({32, 2});
    std::vector<double> rt(32);
    for (double& v : robs.data) v = rng.normal();
    for (double& v : rt) v = rng.normal();
    ValueFn f = [](std::span<const double> o) { return o[0] - 0.5 * o[1]; };
    // independent two-pass recomputation
    double sq = 0.0;
    for (std::size_t i = 0; i < 32; ++i) {
        const double d = (robs(i, 0) - 0.5 * robs(i, 1)) - rt[i];
        sq += d * d;
    }
    CHECK(empirical_target_distance(f, robs, rt) ==
          doctest::Approx(std::sqrt(sq / 32.0)).epsilon(1e-12));

    Tensor empty({0, 1});
    std::vector<double> none;
    CHECK_THROWS_AS(empirical_target_distance(f, empty, none), std::invalid_argument);
}

TEST_CASE("true_target_estimate: gamma=0 reduces to immediate rewards") {
    auto env = make_env("lqr1");
    ActionSampler zero_action = [](std::span<const double>, Rng&) {
        return std::vector<double>{0.0};
    };
    Rng rng(2);
    TrueTargetEstimate est = true_target_estimate(*env, zero_action, 50, 0.0, rng);
    // x stays at 1 under u=0, reward is -(x^2 + u^2) = -1 at every visit
    for (double r : est.returns) CHECK(r == doctest::Approx(-1.0));
}

TEST_CASE("true_target_estimate: zero-reward env gives all-zero estimates") {
    auto env = make_env("sparse_mountaincar");
    ActionSampler coast = [](std::span<const double>, Rng&) {
        return std::vector<double>{0.0};
    };
    Rng rng(3);
    TrueTargetEstimate est = true_target_estimate(*env, coast, 300, 0.99, rng);
    for (double r : est.returns) CHECK(r == 0.0);
    CHECK(est.transitions_used >= 300);
    CHECK(est.truncation_bound < 1e-6);
}

TEST_CASE("true_target_estimate: chain values approach the exact oracle") {
    auto env = make_env("chain3");
    auto* chain = dynamic_cast<TabularEnv*>(env.get());
    TabularMdp mdp = chain->mdp();
    mdp.gamma = 0.5;  // short horizon keeps the Monte-Carlo noise inside the band
    // uniform random binned actions = uniform tabular policy
    ActionSampler uniform = [](std::span<const double>, Rng& r) {
        return std::vector<double>{r.uniform(-1.0, 1.0)};
    };
    Rng rng(4);
    TrueTargetEstimate est = true_target_estimate(*env, uniform, 10000, mdp.gamma, rng);
    SoftmaxPolicy pi(3, 2);  // uniform
    std::vector<double> v = exact_values(mdp, pi);
    REQUIRE(est.obs.size() == 3);  // one-hot states aggregate into 3 keys
    for (std::size_t i = 0; i < est.obs.size(); ++i) {
        std::size_t s = chain->state_index(est.obs[i]);
        CHECK(std::abs(est.returns[i] - v[s]) <= 0.05);
    }
}

TEST_CASE("true_target_distance: exact match, offset split, Q-variant collapse") {
    TrueTargetEstimate est;
    est.obs = {{0.0}, {1.0}};
    est.returns = {1.0, 3.0};
    ValueFn match = [](std::span<const double> o) { return 1.0 + 2.0 * o[0]; };
    CHECK(true_target_distance(match, est) == doctest::Approx(0.0));

    // pure offset error: corrected distance 0, raw distance |offset|
    std::vector<double> raw_preds{match(est.obs[0]) + 0.4, match(est.obs[1]) + 0.4};
    ValueFn raw = [&](std::span<const double> o) { return match(o) + 0.4; };
    const double c = bias_correction_constant(raw_preds, est.returns);
    ValueFn corrected = [&](std::span<const double> o) { return match(o) + 0.4 + c; };
    CHECK(true_target_distance(raw, est) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(true_target_distance(corrected, est) == doctest::Approx(0.0).epsilon(1e-12));

    // with a single action the Q pipeline reproduces the V pipeline
    TrueTargetEstimate qest = est;
    qest.with_actions = true;
    qest.act = {{0.0}, {0.0}};
    QFn qfn = [&](std::span<const double> o, std::span<const double>) { return raw(o); };
    CHECK(true_target_distance_q(qfn, qest) ==
          doctest::Approx(true_target_distance(raw, est)).epsilon(1e-12));
}

TEST_CASE("bias_variance_decompose: constants, symmetric case, identity") {
    // residuals all equal to c
    std::vector<double> p{2.0, 3.0, 4.0}, t{1.0, 2.0, 3.0};
    auto [b2, var] = bias_variance_decompose(p, t);
    CHECK(b2 == doctest::Approx(1.0));
    CHECK(var == doctest::Approx(0.0));

    // residuals {-1, +1}
    auto [b2b, varb] = bias_variance_decompose(std::vector<double>{-1.0, 1.0},
                                               std::vector<double>{0.0, 0.0});
    CHECK(b2b == doctest::Approx(0.0));
    CHECK(varb == doctest::Approx(1.0));

    Rng rng(5);
    std::vector<double> rp(40), rt(40);
    for (double& v : rp) v = rng.normal();
    for (double& v : rt) v = rng.normal();
    auto [rb2, rvar] = bias_variance_decompose(rp, rt);
    double mse = 0.0;
    for (std::size_t i = 0; i < rp.size(); ++i)
        mse += (rp[i] - rt[i]) * (rp[i] - rt[i]);
    mse /= static_cast<double>(rp.size());
    CHECK(std::abs(rb2 + rvar - mse) <= 1e-12);
}

TEST_CASE("percent_variation: identities and error on zero baseline") {
    CHECK(percent_variation(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(percent_variation(0.5, 1.0) == doctest::Approx(-50.0));
    CHECK(percent_variation(2.0, 1.0) == doctest::Approx(100.0));
    CHECK_THROWS_AS(percent_variation(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("pairwise_cosine_similarity: identities, orthogonality, hand case") {
    std::vector<std::vector<double>> same{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK(pairwise_cosine_similarity(same) == doctest::Approx(1.0));

    std::vector<std::vector<double>> ortho{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0},
                                           {0.0, 0.0, 1.0}};
    CHECK(pairwise_cosine_similarity(ortho) == doctest::Approx(0.0));

    std::vector<std::vector<double>> pair{{1.0, 0.0}, {1.0, 1.0}};
    CHECK(pairwise_cosine_similarity(pair) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));

    std::vector<std::vector<double>> zero{{0.0, 0.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(pairwise_cosine_similarity(zero), std::invalid_argument);
    std::vector<std::vector<double>> one{{1.0, 0.0}};
    CHECK_THROWS_AS(pairwise_cosine_similarity(one), std::invalid_argument);
}

TEST_CASE("pairwise_cosine_similarity: invariant to positive rescaling") {
    Rng rng(6);
    std::vector<std::vector<double>> grads(4, std::vector<double>(8));
    for (auto& g : grads)
        for (double& v : g) v = rng.normal();
    const double base = pairwise_cosine_similarity(grads);
    grads[1] = grads[1];  // rescale one vector
    for (double& v : grads[1]) v *= 137.0;
    for (double& v : grads[3]) v *= 1e-6;
    CHECK(std::abs(pairwise_cosine_similarity(grads) - base) <= 1e-12);
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
}

TEST_CASE("gradient_batches: two batches form exactly one pair") {
    auto env = make_env("lqr1");
    Rng rng(7);
    GaussianPolicy pol = GaussianPolicy::make(1, 1, 4, 1, Activation::tanh, 0.0, 2.0, rng);
    ValueFn zero = [](std::span<const double>) { return 0.0; };
    Rng grng(8);
    auto grads = gradient_batches(*env, pol, zero, 2, 32, GaeConfig{0.99, 0.95}, true,
                                  grng);
    REQUIRE(grads.size() == 2);
    const double manual =
        dot(grads[0], grads[1]) / (l2_norm(grads[0]) * l2_norm(grads[1]));
    CHECK(pairwise_cosine_similarity(grads) == doctest::Approx(manual).epsilon(1e-12));
    CHECK_THROWS_AS(gradient_batches(*env, pol, zero, 1, 32, GaeConfig{0.99, 0.95},
                                     true, grng),
                    std::invalid_argument);
}

TEST_CASE("diagnostics report: decomposition residual and JSON emission") {
    DiagnosticsReport rep;
    rep.step = 100;
    rep.bias2 = 0.25;
    rep.variance = 0.75;
    rep.true_distance = 1.0;
    CHECK(rep.decomposition_residual() <= 1e-12);
    std::string j = rep.to_json();
    CHECK(j.find("avec-diagnostics-v1") != std::string::npos);
    CHECK(j.find("\"step\": 100") != std::string::npos);
}

TEST_CASE("true_target_estimate: doubling the budget does not hurt (median over seeds)") {
    auto env = make_env("chain3");
    auto* chain = dynamic_cast<TabularEnv*>(env.get());
    TabularMdp mdp = chain->mdp();
    SoftmaxPolicy pi(3, 2);
    std::vector<double> v = exact_values(mdp, pi);
    ActionSampler uniform = [](std::span<const double>, Rng& r) {
        return std::vector<double>{r.uniform(-1.0, 1.0)};
    };
    auto dist_at = [&](std::size_t budget, std::uint64_t seed) {
        Rng rng(seed);
        TrueTargetEstimate est = true_target_estimate(*env, uniform, budget, mdp.gamma, rng);
        double sq = 0.0;
        for (std::size_t i = 0; i < est.obs.size(); ++i) {
            const double d = est.returns[i] - v[chain->state_index(est.obs[i])];
            sq += d * d;
        }
        return std::sqrt(sq / static_cast<double>(est.obs.size()));
    };
    std::vector<double> small, big;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        small.push_back(dist_at(2000, 100 + seed));
        big.push_back(dist_at(4000, 200 + seed));
    }
    std::sort(small.begin(), small.end());
    std::sort(big.begin(), big.end());
    const double med_small = 0.5 * (small[4] + small[5]);
    const double med_big = 0.5 * (big[4] + big[5]);
    CHECK(med_big <= med_small + 1e-9);
}
