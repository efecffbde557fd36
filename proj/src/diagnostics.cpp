#include "avec/diagnostics.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace avec {

namespace {

// exact-byte key for aggregating visits of identical states
std::string byte_key(std::span<const double> a, std::span<const double> b = {}) {
    std::string k(reinterpret_cast<const char*>(a.data()), a.size() * sizeof(double));
    if (!b.empty())
        k.append(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(double));
    return k;
}

}  // namespace

TrueTargetEstimate true_target_estimate(const Env& env, const ActionSampler& policy,
                                        std::size_t budget, double gamma, Rng& rng,
                                        bool with_actions) {
    if (budget == 0)
        throw std::invalid_argument("true_target_estimate: budget must cover >= 1 episode");
    std::size_t max_len = 1;
    if (gamma > 0.0)
        max_len = static_cast<std::size_t>(std::ceil(std::log(1e-6) / std::log(gamma)));
    TrueTargetEstimate est;
    est.with_actions = with_actions;
    est.truncation_bound = std::pow(gamma, static_cast<double>(max_len));

    struct Acc {
        std::vector<double> obs, act;
        double sum = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Acc> table;

    std::uint64_t episode = 0;
    while (est.transitions_used < budget) {
        std::vector<double> state =
            env.initial_state(Rng::splitmix(rng.seed() + 0x545445ull * (++episode)));
        std::vector<std::vector<double>> obs_seq, act_seq;
        std::vector<double> rew_seq;
        bool terminated = false;
        // roll twice the truncation length so kept samples have a full tail
        for (std::size_t t = 0; t < 2 * max_len; ++t) {
            std::vector<double> obs = env.observe(state);
            std::vector<double> action = policy(obs, rng);
            StepOutcome out = env.transition(state, action);
            obs_seq.push_back(std::move(obs));
            act_seq.push_back(std::move(action));
            rew_seq.push_back(out.reward);
            est.transitions_used += 1;
            state = std::move(out.state);
            if (out.terminal) {
                terminated = true;
                break;
            }
        }
        // discounted returns-to-go, zero-bootstrapped at the truncation point
        double g = 0.0;
        std::vector<double> rtg(rew_seq.size());
        for (std::size_t t = rew_seq.size(); t-- > 0;) {
            g = rew_seq[t] + gamma * g;
            rtg[t] = g;
        }
        // keep a sample only when its discount tail is complete: either the
        // episode truly ended or at least max_len steps remain after t
        const std::size_t keep =
            terminated ? obs_seq.size()
                       : (obs_seq.size() > max_len ? obs_seq.size() - max_len : 0);
        for (std::size_t t = 0; t < keep; ++t) {
            std::string key = with_actions ? byte_key(obs_seq[t], act_seq[t])
                                           : byte_key(obs_seq[t]);
            Acc& acc = table[key];
            if (acc.n == 0) {
                acc.obs = obs_seq[t];
                if (with_actions) acc.act = act_seq[t];
            }
            acc.sum += rtg[t];
            acc.n += 1;
        }
    }
    if (table.empty())
        throw std::runtime_error(
            "true_target_estimate: budget too small to keep any full-tail sample");
    for (auto& [key, acc] : table) {
        est.obs.push_back(std::move(acc.obs));
        if (with_actions) est.act.push_back(std::move(acc.act));
        est.returns.push_back(acc.sum / static_cast<double>(acc.n));
        est.visits.push_back(acc.n);
    }
    return est;
}

double empirical_target_distance(const ValueFn& estimator, const Tensor& obs,
                                 std::span<const double> targets) {
    const std::size_t n = targets.size();
    if (n == 0) throw std::invalid_argument("empirical_target_distance: empty buffer");
    if (obs.rank() != 2 || obs.shape[0] != n)
        throw std::invalid_argument("empirical_target_distance: obs/target mismatch");
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d =
            estimator({&obs.data[i * obs.shape[1]], obs.shape[1]}) - targets[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(n));
}

double true_target_distance(const ValueFn& estimator, const TrueTargetEstimate& est) {
    if (est.obs.empty()) throw std::invalid_argument("true_target_distance: empty estimate");
    double sq = 0.0;
    for (std::size_t i = 0; i < est.obs.size(); ++i) {
        const double d = estimator(est.obs[i]) - est.returns[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(est.obs.size()));
}

double true_target_distance_q(const QFn& estimator, const TrueTargetEstimate& est) {
    if (!est.with_actions)
        throw std::invalid_argument("true_target_distance_q: estimate has no actions");
    double sq = 0.0;
    for (std::size_t i = 0; i < est.obs.size(); ++i) {
        const double d = estimator(est.obs[i], est.act[i]) - est.returns[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(est.obs.size()));
}

std::pair<double, double> bias_variance_decompose(std::span<const double> predictions,
                                                  std::span<const double> true_targets) {
    const std::size_t n = predictions.size();
    if (n < 2) throw std::invalid_argument("bias_variance_decompose: need n >= 2");
    if (true_targets.size() != n)
        throw std::invalid_argument("bias_variance_decompose: length mismatch");
    double mean = 0.0, msq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = predictions[i] - true_targets[i];
        mean += d;
        msq += d * d;
    }
    mean /= static_cast<double>(n);
    msq /= static_cast<double>(n);
    return {mean * mean, msq - mean * mean};
}

double percent_variation(double quantity_variant, double quantity_base) {
    if (quantity_base == 0.0)
        throw std::invalid_argument("percent_variation: zero baseline");
    return (quantity_variant - quantity_base) / quantity_base * 100.0;
}

double pairwise_cosine_similarity(const std::vector<std::vector<double>>& gradients) {
    if (gradients.size() < 2)
        throw std::invalid_argument("pairwise_cosine_similarity: need >= 2 vectors");
    const std::size_t dim = gradients[0].size();
    std::vector<double> norms(gradients.size());
    for (std::size_t i = 0; i < gradients.size(); ++i) {
        if (gradients[i].size() != dim)
            throw std::invalid_argument("pairwise_cosine_similarity: length mismatch");
        norms[i] = l2_norm(gradients[i]);
        if (norms[i] == 0.0)
            throw std::invalid_argument("pairwise_cosine_similarity: zero-norm vector");
    }
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < gradients.size(); ++i)
        for (std::size_t j = i + 1; j < gradients.size(); ++j) {
            sum += dot(gradients[i], gradients[j]) / (norms[i] * norms[j]);
            pairs += 1;
        }
    return sum / static_cast<double>(pairs);
}

std::vector<std::vector<double>> gradient_batches(const Env& env,
                                                  const GaussianPolicy& policy,
                                                  const ValueFn& value_fn,
                                                  std::size_t n_batches,
                                                  std::size_t batch_size,
                                                  const GaeConfig& gae, bool norm_adv,
                                                  Rng& rng, const ObsFilter* filter) {
    if (n_batches < 2)
        throw std::invalid_argument("gradient_batches: need >= 2 batches");
    ObsFilter frozen = filter ? *filter : ObsFilter{};
    std::vector<std::vector<double>> grads;
    for (std::size_t b = 0; b < n_batches; ++b) {
        Rng batch_rng = rng.child(0xb0b0 + b);
        EnvCursor cursor(env, batch_rng.seed());
        RolloutBuffer buf =
            collect_rollout(cursor, policy, value_fn, batch_size, batch_rng, nullptr,
                            nullptr, nullptr, frozen.enabled ? &frozen : nullptr,
                            /*adapt_filter=*/false);
        GaeResult res = gae_targets(buf.rew, buf.terminal, buf.episode_end, buf.value,
                                    buf.next_value, gae);
        std::vector<double> adv = res.advantages;
        if (norm_adv) {
            const double mean = vec_mean(adv);
            double sq = 0.0;
            for (double a : adv) sq += (a - mean) * (a - mean);
            const double sd = std::sqrt(sq / std::max<std::size_t>(1, adv.size() - 1));
            for (double& a : adv) a = (a - mean) / (sd + 1e-8);
        }
        // gradient of the surrogate at the frozen point: mean(dlogpi * A)
        Tape tape(256);
        auto ctx = policy.inject(tape);
        Var logp = policy.log_prob_node(tape, ctx, buf.obs, buf.act);
        Var adv_node = tape.constant(Tensor({batch_size, 1}, std::vector<double>(adv)));
        Var objective = tape.mean(tape.mul(logp, adv_node));
        tape.backward(objective);
        grads.push_back(policy.collect_grads_ctx(tape, ctx));
    }
    return grads;
}

std::string DiagnosticsReport::to_json() const {
    nlohmann::json j;
    j["format"] = "avec-diagnostics-v1";
    j["step"] = step;
    j["empirical_distance"] = empirical_distance;
    j["true_distance"] = true_distance;
    j["bias2"] = bias2;
    j["variance"] = variance;
    j["cosine_similarity"] = cosine_similarity;
    j["true_samples"] = true_samples;
    j["true_transitions"] = true_transitions;
    j["empirical_samples"] = empirical_samples;
    j["grad_batches"] = grad_batches;
    j["corrected"] = corrected;
    return j.dump(1);
}

}  // namespace avec
