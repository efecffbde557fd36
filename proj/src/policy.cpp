#include "avec/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)
constexpr double kLn2 = 0.6931471805599453094172321214582;

double clamp_log_std(double x) {
    return std::min(kLogStdMax, std::max(kLogStdMin, x));
}

double softplus_stable(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}
}  // namespace

// ---------------------------------------------------------------------------
// GaussianPolicy
// ---------------------------------------------------------------------------

GaussianPolicy GaussianPolicy::make(std::size_t obs_dim, std::size_t act_dim,
                                    std::size_t hidden, std::size_t layers,
                                    Activation act, double init_log_std,
                                    double act_limit, Rng& rng) {
    GaussianPolicy p;
    std::vector<std::size_t> widths{obs_dim};
    for (std::size_t i = 0; i < layers; ++i) widths.push_back(hidden);
    widths.push_back(act_dim);
    p.mean = Mlp::make(widths, act, rng, 0.01);
    p.log_std = Tensor::full({act_dim}, init_log_std);
    p.act_limit = act_limit;
    return p;
}

std::vector<double> GaussianPolicy::sample(std::span<const double> obs, Rng& rng,
                                           double* logp) const {
    Tensor mu = mean.value(Tensor({obs.size()}, std::vector<double>(obs.begin(), obs.end())));
    const std::size_t k = act_dim();
    std::vector<double> a(k);
    double lp = -0.5 * static_cast<double>(k) * kLog2Pi;
    for (std::size_t i = 0; i < k; ++i) {
        const double ls = clamp_log_std(log_std.data[i]);
        const double sigma = std::exp(ls);
        const double z = rng.normal();
        a[i] = mu.data[i] + sigma * z;
        lp += -0.5 * z * z - ls;
    }
    if (logp) *logp = lp;
    return a;
}

double GaussianPolicy::log_prob(std::span<const double> obs,
                                std::span<const double> act) const {
    Tensor mu = mean.value(Tensor({obs.size()}, std::vector<double>(obs.begin(), obs.end())));
    const std::size_t k = act_dim();
    double lp = -0.5 * static_cast<double>(k) * kLog2Pi;
    for (std::size_t i = 0; i < k; ++i) {
        const double ls = clamp_log_std(log_std.data[i]);
        const double z = (act[i] - mu.data[i]) * std::exp(-ls);
        lp += -0.5 * z * z - ls;
    }
    return lp;
}

double GaussianPolicy::entropy() const {
    const std::size_t k = act_dim();
    double h = 0.5 * static_cast<double>(k) * (kLog2Pi + 1.0);
    for (std::size_t i = 0; i < k; ++i) h += clamp_log_std(log_std.data[i]);
    return h;
}

std::vector<double> GaussianPolicy::flat_params() const {
    std::vector<double> p = mean.flat_params();
    p.insert(p.end(), log_std.data.begin(), log_std.data.end());
    return p;
}

void GaussianPolicy::set_flat_params(std::span<const double> p) {
    if (p.size() != param_count())
        throw std::invalid_argument("GaussianPolicy::set_flat_params: length mismatch");
    mean.set_flat_params(p.subspan(0, mean.param_count()));
    for (std::size_t i = 0; i < log_std.numel(); ++i)
        log_std.data[i] = p[mean.param_count() + i];
}

GaussianPolicy::Ctx GaussianPolicy::inject(Tape& tape, bool needs_grad) const {
    Ctx ctx;
    ctx.mean_vars = inject_params(tape, mean, needs_grad);
    ctx.log_std_var = tape.leaf(log_std, needs_grad);
    return ctx;
}

Var GaussianPolicy::log_prob_node(Tape& tape, const Ctx& ctx, const Tensor& obs,
                                  const Tensor& act) const {
    if (obs.rank() != 2 || act.rank() != 2 || obs.shape[0] != act.shape[0])
        throw std::invalid_argument("log_prob_node: obs/act must be matching batches");
    const std::size_t k = act_dim();
    Var mu = mlp_forward(tape, ctx.mean_vars, tape.constant(obs), mean.act);
    Var ls = tape.clamp(ctx.log_std_var, kLogStdMin, kLogStdMax);        // [k]
    Var inv_sigma = tape.exp_op(tape.neg(ls));                           // [k]
    Var z = tape.mul_rowvec(tape.sub(tape.constant(act), mu), inv_sigma);  // [m,k]
    Var quad = tape.scale(tape.row_sum(tape.square(z)), -0.5);           // [m,1]
    Var lp = tape.sub_bcast(quad, tape.sum(ls));                         // - sum log sigma
    return tape.add_scalar(lp, -0.5 * static_cast<double>(k) * kLog2Pi);
}

Var GaussianPolicy::entropy_node(Tape& tape, const Ctx& ctx) const {
    const std::size_t k = act_dim();
    Var ls = tape.clamp(ctx.log_std_var, kLogStdMin, kLogStdMax);
    return tape.add_scalar(tape.sum(ls), 0.5 * static_cast<double>(k) * (kLog2Pi + 1.0));
}

std::vector<double> GaussianPolicy::collect_grads_ctx(Tape& tape, const Ctx& ctx) const {
    std::vector<double> g = collect_grads(tape, ctx.mean_vars);
    const Tensor& gls = tape.grad(ctx.log_std_var);
    g.insert(g.end(), gls.data.begin(), gls.data.end());
    return g;
}

// ---------------------------------------------------------------------------
// SquashedGaussianPolicy
// ---------------------------------------------------------------------------

SquashedGaussianPolicy SquashedGaussianPolicy::make(std::size_t obs_dim,
                                                    std::size_t act_dim,
                                                    std::size_t hidden,
                                                    std::size_t layers, Activation act,
                                                    double act_limit, Rng& rng) {
    SquashedGaussianPolicy p;
    std::vector<std::size_t> widths{obs_dim};
    for (std::size_t i = 0; i < layers; ++i) widths.push_back(hidden);
    widths.push_back(2 * act_dim);
    p.net = Mlp::make(widths, act, rng, 0.01);
    p.act_limit = act_limit;
    return p;
}

std::vector<double> SquashedGaussianPolicy::sample(std::span<const double> obs, Rng& rng,
                                                   double* logp) const {
    Tensor out = net.value(Tensor({obs.size()}, std::vector<double>(obs.begin(), obs.end())));
    const std::size_t k = act_dim();
    std::vector<double> a(k);
    double lp = -0.5 * static_cast<double>(k) * kLog2Pi;
    for (std::size_t i = 0; i < k; ++i) {
        const double mu = out.data[i];
        const double ls = clamp_log_std(out.data[k + i]);
        const double xi = rng.normal();
        const double u = mu + std::exp(ls) * xi;
        a[i] = act_limit * std::tanh(u);
        // log det of a = lim * tanh(u): log lim + log(1 - tanh(u)^2)
        lp += -0.5 * xi * xi - ls;
        lp -= std::log(act_limit) + 2.0 * (kLn2 - u - softplus_stable(-2.0 * u));
    }
    if (logp) *logp = lp;
    return a;
}

SquashedGaussianPolicy::Ctx SquashedGaussianPolicy::inject(Tape& tape,
                                                           bool needs_grad) const {
    return Ctx{inject_params(tape, net, needs_grad)};
}

SquashedGaussianPolicy::SampleNode SquashedGaussianPolicy::sample_node(
    Tape& tape, const Ctx& ctx, const Tensor& obs, const Tensor& noise) const {
    const std::size_t k = act_dim();
    if (obs.rank() != 2 || noise.rank() != 2 || noise.shape[0] != obs.shape[0] ||
        noise.shape[1] != k)
        throw std::invalid_argument("sample_node: obs/noise batch mismatch");
    Var head = mlp_forward(tape, ctx.net_vars, tape.constant(obs), net.act);  // [m,2k]
    Var mu = tape.slice_cols(head, 0, k);
    Var ls = tape.clamp(tape.slice_cols(head, k, 2 * k), kLogStdMin, kLogStdMax);
    Var sigma = tape.exp_op(ls);
    Var xi = tape.constant(noise);
    Var u = tape.add(mu, tape.mul(sigma, xi));
    SampleNode out;
    out.action = tape.scale(tape.tanh_op(u), act_limit);
    // Gaussian part: sum_i (-0.5 xi_i^2 - ls_i) - k/2 log(2 pi)
    Var gauss = tape.sub(tape.scale(tape.square(xi), -0.5), ls);  // [m,k]
    // squash correction per dim: log lim + 2 (ln2 - u - softplus(-2u))
    Var corr = tape.add_scalar(
        tape.scale(tape.add(u, tape.softplus(tape.scale(u, -2.0))), 2.0),
        -2.0 * kLn2 - std::log(act_limit));
    // logp = gauss_sum - k/2 log 2pi + sum(corr)  with corr = -(log-det terms)
    Var per_dim = tape.add(gauss, corr);  // [m,k]
    out.logp = tape.add_scalar(tape.row_sum(per_dim),
                               -0.5 * static_cast<double>(k) * kLog2Pi);
    return out;
}

}  // namespace avec
