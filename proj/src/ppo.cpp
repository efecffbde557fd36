#include "avec/ppo.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace avec {

namespace {

std::vector<double> shifted(const std::vector<double>& v, double c) {
    std::vector<double> out = v;
    for (double& x : out) x += c;
    return out;
}

Tensor rows_subset(const Tensor& m, const std::vector<std::size_t>& idx,
                   std::size_t lo, std::size_t hi) {
    const std::size_t cols = m.shape[1];
    Tensor out({hi - lo, cols});
    for (std::size_t r = lo; r < hi; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out.data[(r - lo) * cols + c] = m.data[idx[r] * cols + c];
    return out;
}

std::vector<double> vec_subset(const std::vector<double>& v,
                               const std::vector<std::size_t>& idx, std::size_t lo,
                               std::size_t hi) {
    std::vector<double> out(hi - lo);
    for (std::size_t r = lo; r < hi; ++r) out[r - lo] = v[idx[r]];
    return out;
}

}  // namespace

UpdateMetrics ppo_update(const RolloutBuffer& buf, PpoState& state,
                         const PpoParams& params, Rng& rng) {
    const std::size_t n = buf.size();
    if (params.minibatches == 0 || params.epochs == 0)
        throw std::invalid_argument("ppo_update: epochs and minibatches must be >= 1");
    if (n % params.minibatches != 0)
        throw std::invalid_argument("ppo_update: horizon must be divisible by minibatches");
    const std::size_t mb_size = n / params.minibatches;
    if (params.loss.needs_pairs() && mb_size < 2)
        throw std::invalid_argument("ppo_update: " + params.loss.name() +
                                    " needs minibatches of size >= 2");

    // Targets come from the estimator the last update exposed; for the
    // residual-variance critic that is the bias-corrected snapshot.
    const double c_old = state.critic.correction;
    GaeResult target_pass =
        gae_targets(buf.rew, buf.terminal, buf.episode_end, shifted(buf.value, c_old),
                    shifted(buf.next_value, c_old), params.gae);
    GaeResult actor_pass =
        params.correct_advantages
            ? target_pass
            : gae_targets(buf.rew, buf.terminal, buf.episode_end, buf.value,
                          buf.next_value, params.gae);
    const std::vector<double>& targets = target_pass.targets;

    std::vector<double> adv = actor_pass.advantages;
    if (params.norm_adv) {
        const double mean = vec_mean(adv);
        double sq = 0.0;
        for (double a : adv) sq += (a - mean) * (a - mean);
        const double sd = std::sqrt(sq / std::max<std::size_t>(1, adv.size() - 1));
        for (double& a : adv) a = (a - mean) / (sd + 1e-8);
    }

    UpdateMetrics met;
    met.entropy = state.policy.entropy();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::size_t mb_count = 0;
    double clip_hits = 0.0, kl_sum = 0.0;

    try {
        for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
            rng.shuffle(order);  // one shuffle per epoch from the run stream
            for (std::size_t mb = 0; mb < params.minibatches; ++mb) {
                const std::size_t lo = mb * mb_size, hi = lo + mb_size;
                Tensor obs_mb = rows_subset(buf.obs, order, lo, hi);
                Tensor act_mb = rows_subset(buf.act, order, lo, hi);
                std::vector<double> adv_mb = vec_subset(adv, order, lo, hi);
                std::vector<double> logp_mb = vec_subset(buf.logp, order, lo, hi);
                std::vector<double> tgt_mb = vec_subset(targets, order, lo, hi);

                // ---- actor: clipped surrogate ----
                {
                    Tape tape(256);
                    auto ctx = state.policy.inject(tape);
                    Var logp_new = state.policy.log_prob_node(tape, ctx, obs_mb, act_mb);
                    Var logp_old = tape.constant(
                        Tensor({mb_size, 1}, std::vector<double>(logp_mb)));
                    Var ratio = tape.exp_op(tape.sub(logp_new, logp_old));
                    Var adv_node =
                        tape.constant(Tensor({mb_size, 1}, std::vector<double>(adv_mb)));
                    Var surr1 = tape.mul(ratio, adv_node);
                    Var surr2 = tape.mul(
                        tape.clamp(ratio, 1.0 - params.clip, 1.0 + params.clip), adv_node);
                    Var objective = tape.mean(tape.minimum(surr1, surr2));
                    Var loss = tape.neg(objective);
                    if (params.entropy_coef != 0.0)
                        loss = tape.sub(loss, tape.scale(
                                                  state.policy.entropy_node(tape, ctx),
                                                  params.entropy_coef));
                    met.actor_loss += tape.scalar_value(loss);
                    tape.backward(loss);

                    std::vector<Tensor> gw, gb;
                    std::vector<Tensor*> gptrs;
                    for (std::size_t l = 0; l < ctx.mean_vars.w.size(); ++l) {
                        gw.push_back(tape.grad(ctx.mean_vars.w[l]));
                        gb.push_back(tape.grad(ctx.mean_vars.b[l]));
                    }
                    Tensor gls = tape.grad(ctx.log_std_var);
                    for (std::size_t l = 0; l < gw.size(); ++l) {
                        gptrs.push_back(&gw[l]);
                        gptrs.push_back(&gb[l]);
                    }
                    gptrs.push_back(&gls);
                    met.actor_grad_norm += clip_global_norm(gptrs, params.max_grad_norm);

                    std::vector<Tensor*> pptrs;
                    std::vector<const Tensor*> cgptrs;
                    for (std::size_t l = 0; l < state.policy.mean.layer_count(); ++l) {
                        pptrs.push_back(&state.policy.mean.w[l]);
                        pptrs.push_back(&state.policy.mean.b[l]);
                    }
                    pptrs.push_back(&state.policy.log_std);
                    for (Tensor* g : gptrs) cgptrs.push_back(g);
                    adam_step(pptrs, cgptrs, state.actor_opt);

                    // diagnostics on the ratio values
                    const Tensor& rv = tape.value(ratio);
                    for (double r : rv.data)
                        if (std::abs(r - 1.0) > params.clip) clip_hits += 1.0;
                    const Tensor& lv = tape.value(logp_new);
                    for (std::size_t i = 0; i < mb_size; ++i)
                        kl_sum += logp_mb[i] - lv.data[i];
                }

                // ---- critic: regression per loss spec ----
                {
                    Tape tape(128);
                    MlpVars vars = inject_params(tape, state.critic.net);
                    Var preds = mlp_forward(tape, vars, tape.constant(obs_mb),
                                            state.critic.net.act);
                    Var loss = critic_loss_node(tape, preds, tgt_mb, params.loss);
                    met.critic_loss += tape.scalar_value(loss);
                    tape.backward(loss);

                    std::vector<Tensor> gw, gb;
                    std::vector<Tensor*> gptrs;
                    for (std::size_t l = 0; l < vars.w.size(); ++l) {
                        gw.push_back(tape.grad(vars.w[l]));
                        gb.push_back(tape.grad(vars.b[l]));
                    }
                    for (std::size_t l = 0; l < gw.size(); ++l) {
                        gptrs.push_back(&gw[l]);
                        gptrs.push_back(&gb[l]);
                    }
                    clip_global_norm(gptrs, params.max_grad_norm);
                    std::vector<Tensor*> pptrs;
                    std::vector<const Tensor*> cgptrs;
                    for (std::size_t l = 0; l < state.critic.net.layer_count(); ++l) {
                        pptrs.push_back(&state.critic.net.w[l]);
                        pptrs.push_back(&state.critic.net.b[l]);
                    }
                    for (Tensor* g : gptrs) cgptrs.push_back(g);
                    adam_step(pptrs, cgptrs, state.critic_opt);
                    met.critic_steps += 1;

                    // per-minibatch residual decomposition and the
                    // mean-matching identity of the corrected estimate
                    const Tensor& pv = tape.value(preds);
                    double mr = 0.0, msq = 0.0;
                    for (std::size_t i = 0; i < mb_size; ++i) {
                        const double d = pv.data[i] - tgt_mb[i];
                        mr += d;
                        msq += d * d;
                    }
                    mr /= static_cast<double>(mb_size);
                    msq /= static_cast<double>(mb_size);
                    met.crit_bias2 += mr * mr;
                    met.crit_var += msq - mr * mr;
                    std::vector<double> g =
                        bias_correct(std::span<const double>(pv.data.data(), mb_size), tgt_mb);
                    const double dev = std::abs(vec_mean(g) - vec_mean(tgt_mb));
                    met.bias_ident_dev = std::max(met.bias_ident_dev, dev);
                }
                mb_count += 1;
            }
        }
    } catch (const std::runtime_error& e) {
        std::ostringstream dump;
        dump << "ppo_update aborted: " << e.what() << " [minibatch " << mb_count << ", "
             << "critic_steps " << met.critic_steps << ", loss " << params.loss.name()
             << ", correction " << c_old << "]";
        throw TrainingFault(dump.str());
    }

    // The estimator handed to the next update: f + mean(target - f) over
    // this batch, post-fit, residual-variance objective only.
    if (params.loss.kind == CriticLoss::avec) {
        Tensor preds = state.critic.net.value(buf.obs);
        state.critic.correction = bias_correction_constant(
            std::span<const double>(preds.data.data(), preds.numel()), targets);
    } else {
        state.critic.correction = 0.0;
    }

    const double denom = static_cast<double>(mb_count);
    met.actor_loss /= denom;
    met.critic_loss /= denom;
    met.crit_bias2 /= denom;
    met.crit_var /= denom;
    met.actor_grad_norm /= denom;
    met.clip_frac = clip_hits / static_cast<double>(n * params.epochs);
    met.approx_kl = kl_sum / static_cast<double>(n * params.epochs);
    met.correction = state.critic.correction;
    return met;
}

}  // namespace avec
