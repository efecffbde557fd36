#include "avec/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

AdamState AdamState::init(const std::vector<const Tensor*>& params, AdamConfig cfg) {
    AdamState s;
    s.cfg = cfg;
    for (const Tensor* p : params) {
        s.m.push_back(Tensor::zeros(p->shape));
        s.v.push_back(Tensor::zeros(p->shape));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
    state.step += 1;
    const AdamConfig& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m[i]))
            throw std::invalid_argument("adam_step: shape mismatch");
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = c.beta1 * m.data[j] + (1.0 - c.beta1) * g.data[j];
            v.data[j] = c.beta2 * v.data[j] + (1.0 - c.beta2) * g.data[j] * g.data[j];
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= c.stepsize * mhat / (std::sqrt(vhat) + c.eps);
        }
    }
}

void adam_step_flat(std::span<double> params, std::span<const double> grads,
                    AdamState& state) {
    if (state.m.size() != 1 || state.m[0].numel() != params.size())
        throw std::invalid_argument("adam_step_flat: state not sized for this vector");
    Tensor p({params.size()}, std::vector<double>(params.begin(), params.end()));
    Tensor g({grads.size()}, std::vector<double>(grads.begin(), grads.end()));
    std::vector<Tensor*> pp{&p};
    std::vector<const Tensor*> gg{&g};
    adam_step(pp, gg, state);
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = p.data[i];
}

double clip_global_norm(const std::vector<Tensor*>& grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor* g : grads)
        for (double x : g->data) sq += x * x;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (Tensor* g : grads)
            for (double& x : g->data) x *= s;
    }
    return norm;
}

}  // namespace avec
