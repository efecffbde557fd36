#include "avec/sac.hpp"

#include <cmath>
#include <sstream>

namespace avec {

namespace {

std::vector<double> concat_row(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

struct GradPack {
    std::vector<Tensor> tensors;
    std::vector<Tensor*> ptrs;
    std::vector<const Tensor*> cptrs;
};

GradPack collect_pack(Tape& tape, const MlpVars& vars) {
    GradPack p;
    for (std::size_t l = 0; l < vars.w.size(); ++l) {
        p.tensors.push_back(tape.grad(vars.w[l]));
        p.tensors.push_back(tape.grad(vars.b[l]));
    }
    for (Tensor& t : p.tensors) {
        p.ptrs.push_back(&t);
        p.cptrs.push_back(&t);
    }
    return p;
}

std::vector<Tensor*> param_ptrs(Mlp& net) {
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        out.push_back(&net.w[l]);
        out.push_back(&net.b[l]);
    }
    return out;
}

}  // namespace

double SacNets::q1_value(std::span<const double> obs, std::span<const double> act) const {
    return q1.value1(concat_row(obs, act));
}

double SacNets::q2_value(std::span<const double> obs, std::span<const double> act) const {
    return q2.value1(concat_row(obs, act));
}

SacNets make_sac_nets(std::size_t obs_dim, std::size_t act_dim, std::size_t hidden,
                      std::size_t layers, Activation act, double act_limit,
                      const SacParams& params, Rng& rng) {
    SacNets nets;
    nets.policy = SquashedGaussianPolicy::make(obs_dim, act_dim, hidden, layers, act,
                                               act_limit, rng);
    auto widths = [&](std::size_t in) {
        std::vector<std::size_t> w{in};
        for (std::size_t i = 0; i < layers; ++i) w.push_back(hidden);
        w.push_back(1);
        return w;
    };
    nets.q1 = Mlp::make(widths(obs_dim + act_dim), act, rng, 0.01);
    nets.q2 = Mlp::make(widths(obs_dim + act_dim), act, rng, 0.01);
    nets.value = Mlp::make(widths(obs_dim), act, rng, 0.01);
    nets.value_target = nets.value;
    nets.log_alpha = std::log(params.temperature);

    auto cptrs = [](const std::vector<Tensor*>& v) {
        std::vector<const Tensor*> out;
        for (Tensor* t : v) out.push_back(t);
        return out;
    };
    std::vector<Tensor*> pol;
    for (std::size_t l = 0; l < nets.policy.net.layer_count(); ++l) {
        pol.push_back(&nets.policy.net.w[l]);
        pol.push_back(&nets.policy.net.b[l]);
    }
    nets.policy_opt = AdamState::init(cptrs(pol), params.adam());
    nets.q1_opt = AdamState::init(cptrs(param_ptrs(nets.q1)), params.adam());
    nets.q2_opt = AdamState::init(cptrs(param_ptrs(nets.q2)), params.adam());
    nets.value_opt = AdamState::init(cptrs(param_ptrs(nets.value)), params.adam());
    Tensor la = Tensor::scalar(nets.log_alpha);
    nets.alpha_opt = AdamState::init({&la}, params.adam());
    return nets;
}

void polyak_update(const Mlp& fresh, Mlp& target, double tau) {
    if (fresh.widths != target.widths)
        throw std::invalid_argument("polyak_update: mismatched networks");
    for (std::size_t l = 0; l < fresh.layer_count(); ++l) {
        for (std::size_t i = 0; i < fresh.w[l].numel(); ++i)
            target.w[l].data[i] = tau * fresh.w[l].data[i] + (1.0 - tau) * target.w[l].data[i];
        for (std::size_t i = 0; i < fresh.b[l].numel(); ++i)
            target.b[l].data[i] = tau * fresh.b[l].data[i] + (1.0 - tau) * target.b[l].data[i];
    }
}

UpdateMetrics sac_update(ReplayBuffer& replay, SacNets& nets, const SacParams& params,
                         Rng& rng, std::size_t update_index) {
    const std::size_t m = params.batch_size;
    if (replay.size() < m)
        throw std::logic_error("sac_update: replay below batch size");
    if (params.loss.needs_pairs() && m < 2)
        throw std::invalid_argument("sac_update: " + params.loss.name() +
                                    " needs batches of size >= 2");
    UpdateMetrics met;
    const std::size_t k = nets.policy.act_dim();
    ReplayBuffer::Batch batch = replay.sample(m, rng);

    // fresh reparameterization noise, shared by the value target and the
    // policy objective
    Tensor noise({m, k});
    for (double& x : noise.data) x = rng.normal();

    const double alpha =
        params.learn_temperature ? std::exp(nets.log_alpha) : params.temperature;

    try {
        // ---- fresh actions for this batch (plain evaluation) ----
        std::vector<double> a_fresh(m * k), logp_fresh(m);
        {
            Tape tape(128);
            auto ctx = nets.policy.inject(tape, /*needs_grad=*/false);
            auto node = nets.policy.sample_node(tape, ctx, batch.obs, noise);
            const Tensor& av = tape.value(node.action);
            const Tensor& lv = tape.value(node.logp);
            a_fresh = av.data;
            logp_fresh = lv.data;
        }

        // ---- soft value step: squared residual to min-Q target ----
        std::vector<double> v_target(m);
        for (std::size_t i = 0; i < m; ++i) {
            std::span<const double> obs(&batch.obs.data[i * batch.obs.shape[1]],
                                        batch.obs.shape[1]);
            std::span<const double> act(&a_fresh[i * k], k);
            const double q1 = nets.q1_value(obs, act) + nets.corr1;
            const double q2 = nets.q2_value(obs, act) + nets.corr2;
            v_target[i] = std::min(q1, q2) - alpha * logp_fresh[i];
        }
        {
            Tape tape(128);
            MlpVars vars = inject_params(tape, nets.value);
            Var pred = mlp_forward(tape, vars, tape.constant(batch.obs), nets.value.act);
            Var loss = critic_loss_node(tape, pred, v_target,
                                        CriticLossSpec{CriticLoss::mse, 1.0});
            met.value_loss = tape.scalar_value(loss);
            tape.backward(loss);
            GradPack g = collect_pack(tape, vars);
            adam_step(param_ptrs(nets.value), g.cptrs, nets.value_opt);
        }

        // ---- Q targets and the two Q steps per the critic loss spec ----
        std::vector<double> next_v(m);
        for (std::size_t i = 0; i < m; ++i)
            next_v[i] = nets.value_target.value1(
                std::span<const double>(&batch.next_obs.data[i * batch.next_obs.shape[1]],
                                        batch.next_obs.shape[1]));
        std::vector<double> q_hat = sac_td_targets(batch.rew, batch.done, next_v, params.gamma);
        met.mean_q_target = vec_mean(q_hat);

        Tensor sa({m, batch.obs.shape[1] + k});
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < batch.obs.shape[1]; ++j)
                sa.data[i * sa.shape[1] + j] = batch.obs.data[i * batch.obs.shape[1] + j];
            for (std::size_t j = 0; j < k; ++j)
                sa.data[i * sa.shape[1] + batch.obs.shape[1] + j] =
                    batch.act.data[i * k + j];
        }
        auto q_step = [&](Mlp& qnet, AdamState& opt, double& corr, double& loss_out) {
            Tape tape(128);
            MlpVars vars = inject_params(tape, qnet);
            Var pred = mlp_forward(tape, vars, tape.constant(sa), qnet.act);
            Var loss = critic_loss_node(tape, pred, q_hat, params.loss);
            loss_out = tape.scalar_value(loss);
            tape.backward(loss);
            GradPack g = collect_pack(tape, vars);
            adam_step(param_ptrs(qnet), g.cptrs, opt);
            if (params.loss.kind == CriticLoss::avec) {
                Tensor post = qnet.value(sa);
                corr = bias_correction_constant(
                    std::span<const double>(post.data.data(), post.numel()), q_hat);
            } else {
                corr = 0.0;
            }
        };
        q_step(nets.q1, nets.q1_opt, nets.corr1, met.q1_loss);
        q_step(nets.q2, nets.q2_opt, nets.corr2, met.q2_loss);
        met.correction = nets.corr1;

        // mean-matching identity of the corrected estimates on this batch
        if (params.loss.kind == CriticLoss::avec) {
            Tensor p1 = nets.q1.value(sa);
            for (double& x : p1.data) x += nets.corr1;
            met.bias_ident_dev = std::abs(
                vec_mean(std::span<const double>(p1.data.data(), p1.numel())) -
                vec_mean(q_hat));
        }

        // ---- policy step: reparameterized entropy-regularized objective ----
        {
            Tape tape(256);
            auto pctx = nets.policy.inject(tape);
            auto node = nets.policy.sample_node(tape, pctx, batch.obs, noise);
            MlpVars q1v = inject_params(tape, nets.q1, /*needs_grad=*/false);
            MlpVars q2v = inject_params(tape, nets.q2, /*needs_grad=*/false);
            Var sa_node = tape.concat_cols(tape.constant(batch.obs), node.action);
            Var q1n = tape.add_scalar(mlp_forward(tape, q1v, sa_node, nets.q1.act),
                                      nets.corr1);
            Var q2n = tape.add_scalar(mlp_forward(tape, q2v, sa_node, nets.q2.act),
                                      nets.corr2);
            Var qmin = tape.minimum(q1n, q2n);
            Var loss = tape.mean(tape.sub(tape.scale(node.logp, alpha), qmin));
            met.actor_loss = tape.scalar_value(loss);
            met.entropy = -vec_mean(logp_fresh);
            tape.backward(loss);
            GradPack g = collect_pack(tape, pctx.net_vars);
            met.actor_grad_norm = clip_global_norm(g.ptrs, 0.0);
            adam_step(param_ptrs(nets.policy.net), g.cptrs, nets.policy_opt);
        }

        // ---- optional temperature step ----
        if (params.learn_temperature) {
            const double target_entropy = -static_cast<double>(k);
            double grad = 0.0;  // d/d log_alpha of -mean(log_alpha*(logp + H0))
            for (std::size_t i = 0; i < m; ++i) grad -= logp_fresh[i] + target_entropy;
            grad /= static_cast<double>(m);
            Tensor la = Tensor::scalar(nets.log_alpha);
            Tensor gla = Tensor::scalar(grad);
            std::vector<Tensor*> p{&la};
            std::vector<const Tensor*> gp{&gla};
            adam_step(p, gp, nets.alpha_opt);
            nets.log_alpha = la.data[0];
        }

        // ---- Polyak target mix ----
        if (params.target_interval == 0 || update_index % params.target_interval == 0)
            polyak_update(nets.value, nets.value_target, params.tau);
    } catch (const std::runtime_error& e) {
        std::ostringstream dump;
        dump << "sac_update aborted: " << e.what() << " [update " << update_index
             << ", loss " << params.loss.name() << ", corr1 " << nets.corr1 << ", corr2 "
             << nets.corr2 << "]";
        throw TrainingFault(dump.str());
    }
    met.critic_steps = 2;
    return met;
}

std::vector<std::vector<double>> sac_gradient_batches(const ReplayBuffer& replay,
                                                      const SacNets& nets,
                                                      const SacParams& params,
                                                      std::size_t n_batches,
                                                      std::size_t batch_size, Rng& rng) {
    if (n_batches < 2)
        throw std::invalid_argument("sac_gradient_batches: need >= 2 batches");
    const std::size_t k = nets.policy.act_dim();
    const double alpha =
        params.learn_temperature ? std::exp(nets.log_alpha) : params.temperature;
    std::vector<std::vector<double>> grads;
    for (std::size_t b = 0; b < n_batches; ++b) {
        ReplayBuffer::Batch batch = replay.sample(batch_size, rng);
        Tensor noise({batch_size, k});
        for (double& x : noise.data) x = rng.normal();
        Tape tape(256);
        auto pctx = nets.policy.inject(tape);
        auto node = nets.policy.sample_node(tape, pctx, batch.obs, noise);
        MlpVars q1v = inject_params(tape, nets.q1, false);
        MlpVars q2v = inject_params(tape, nets.q2, false);
        Var sa_node = tape.concat_cols(tape.constant(batch.obs), node.action);
        Var q1n = tape.add_scalar(mlp_forward(tape, q1v, sa_node, nets.q1.act), nets.corr1);
        Var q2n = tape.add_scalar(mlp_forward(tape, q2v, sa_node, nets.q2.act), nets.corr2);
        Var loss = tape.mean(
            tape.sub(tape.scale(node.logp, alpha), tape.minimum(q1n, q2n)));
        tape.backward(loss);
        grads.push_back(collect_grads(tape, pctx.net_vars));
    }
    return grads;
}

}  // namespace avec
