#include "avec/critic.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

CriticLossSpec CriticLossSpec::parse(const std::string& name, double alpha) {
    CriticLossSpec s;
    if (name == "mse")
        s.kind = CriticLoss::mse;
    else if (name == "avec")
        s.kind = CriticLoss::avec;
    else if (name == "alpha")
        s.kind = CriticLoss::alpha;
    else
        throw std::invalid_argument("critic.loss must be one of mse|avec|alpha, got " + name);
    if (!std::isfinite(alpha))
        throw std::invalid_argument("critic.alpha must be finite");
    s.alpha = alpha;
    return s;
}

std::string CriticLossSpec::name() const {
    switch (kind) {
        case CriticLoss::mse: return "mse";
        case CriticLoss::avec: return "avec";
        case CriticLoss::alpha: return "alpha";
    }
    return "?";
}

namespace {

void check_batch(std::span<const double> p, std::span<const double> t,
                 std::size_t min_len, const char* who) {
    if (p.size() != t.size())
        throw std::invalid_argument(std::string(who) + ": length mismatch");
    if (p.size() < min_len)
        throw std::invalid_argument(std::string(who) + ": batch too small");
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!std::isfinite(p[i]) || !std::isfinite(t[i]))
            throw std::invalid_argument(std::string(who) + ": non-finite entry");
}

double residual_mean(std::span<const double> p, std::span<const double> t) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] - t[i];
    return s / static_cast<double>(p.size());
}

double centered_square_sum(std::span<const double> p, std::span<const double> t,
                           double mean) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = (p[i] - t[i]) - mean;
        s += d * d;
    }
    return s;
}

}  // namespace

double mse_loss(std::span<const double> p, std::span<const double> t) {
    check_batch(p, t, 1, "mse_loss");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - t[i];
        s += d * d;
    }
    return s / static_cast<double>(p.size());
}

double residual_variance_loss(std::span<const double> p, std::span<const double> t) {
    check_batch(p, t, 2, "residual_variance_loss");
    const double mean = residual_mean(p, t);
    return centered_square_sum(p, t, mean) / static_cast<double>(p.size() - 1);
}

double alpha_loss(std::span<const double> p, std::span<const double> t, double alpha) {
    check_batch(p, t, 2, "alpha_loss");
    if (!std::isfinite(alpha)) throw std::invalid_argument("alpha_loss: non-finite alpha");
    const double mean = residual_mean(p, t);
    const double pop_var = centered_square_sum(p, t, mean) / static_cast<double>(p.size());
    return pop_var + alpha * mean * mean;
}

double bias_correction_constant(std::span<const double> p, std::span<const double> t) {
    check_batch(p, t, 1, "bias_correct");
    return -residual_mean(p, t);
}

std::vector<double> bias_correct(std::span<const double> p, std::span<const double> t) {
    const double c = bias_correction_constant(p, t);
    std::vector<double> g(p.begin(), p.end());
    for (double& x : g) x += c;
    return g;
}

Var critic_loss_node(Tape& tape, Var predictions, std::span<const double> targets,
                     const CriticLossSpec& spec) {
    const Tensor& pv = tape.value(predictions);
    const std::size_t n = pv.numel();
    if (n != targets.size())
        throw std::invalid_argument("critic_loss_node: prediction/target length mismatch");
    if (spec.needs_pairs() && n < 2)
        throw std::invalid_argument("critic_loss_node: " + spec.name() +
                                    " requires at least 2 samples");
    Tensor tt(pv.shape, std::vector<double>(targets.begin(), targets.end()));
    Var resid = tape.sub(predictions, tape.constant(std::move(tt)));
    switch (spec.kind) {
        case CriticLoss::mse:
            return tape.mean(tape.square(resid));
        case CriticLoss::avec: {
            // 1/(T-1) sample variance; the mean stays in the graph.
            Var centered = tape.sub_bcast(resid, tape.mean(resid));
            return tape.scale(tape.mean(tape.square(centered)),
                              static_cast<double>(n) / static_cast<double>(n - 1));
        }
        case CriticLoss::alpha: {
            Var mean_resid = tape.mean(resid);
            Var centered = tape.sub_bcast(resid, mean_resid);
            Var pop_var = tape.mean(tape.square(centered));
            Var bias_sq = tape.square(mean_resid);
            return tape.add(pop_var, tape.scale(bias_sq, spec.alpha));
        }
    }
    throw std::logic_error("critic_loss_node: unreachable");
}

void GaeConfig::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("GaeConfig: gamma must lie in [0,1)");
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("GaeConfig: lambda must lie in [0,1]");
}

GaeResult gae_targets(std::span<const double> rewards, std::span<const uint8_t> terminal,
                      std::span<const uint8_t> episode_end, std::span<const double> values,
                      std::span<const double> next_values, const GaeConfig& cfg) {
    cfg.validate();
    const std::size_t n = rewards.size();
    if (terminal.size() != n || episode_end.size() != n || values.size() != n ||
        next_values.size() != n)
        throw std::invalid_argument("gae_targets: length mismatch");
    GaeResult out;
    out.advantages.resize(n);
    out.targets.resize(n);
    double carry = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        const double not_term = terminal[i] ? 0.0 : 1.0;
        const double chain = episode_end[i] ? 0.0 : 1.0;
        const double delta = rewards[i] + cfg.gamma * next_values[i] * not_term - values[i];
        carry = delta + cfg.gamma * cfg.lambda * chain * carry;
        out.advantages[i] = carry;
        out.targets[i] = values[i] + carry;
    }
    return out;
}

std::vector<double> sac_td_targets(std::span<const double> rewards,
                                   std::span<const uint8_t> done,
                                   std::span<const double> next_values, double gamma) {
    const std::size_t n = rewards.size();
    if (done.size() != n || next_values.size() != n)
        throw std::invalid_argument("sac_td_targets: length mismatch");
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(next_values[i]))
            throw std::invalid_argument("sac_td_targets: non-finite bootstrap value");
        q[i] = rewards[i] + gamma * (done[i] ? 0.0 : 1.0) * next_values[i];
    }
    return q;
}

ContractionResult variance_contraction_check(std::size_t n_vars, std::size_t n_samples,
                                             Rng& rng) {
    if (n_vars < 2)
        throw std::invalid_argument("variance_contraction_check: need T >= 2");
    if (n_samples < 10000)
        throw std::invalid_argument("variance_contraction_check: need M >= 1e4");
    const double t = static_cast<double>(n_vars);
    ContractionResult r;
    r.predicted = 1.0 - 2.0 / t + 1.0 / t;  // per-variable unit variance
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> draw(n_vars);
    for (std::size_t i = 0; i < n_samples; ++i) {
        double mean = 0.0;
        for (double& x : draw) {
            x = rng.normal();
            mean += x;
        }
        mean /= t;
        const double centered_first = draw[0] - mean;
        sum += centered_first;
        sumsq += centered_first * centered_first;
    }
    const double m = static_cast<double>(n_samples);
    const double avg = sum / m;
    r.empirical = sumsq / m - avg * avg;
    return r;
}

}  // namespace avec
