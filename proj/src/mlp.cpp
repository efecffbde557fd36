#include "avec/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace avec {

Activation parse_activation(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string activation_name(Activation a) {
    return a == Activation::tanh ? "tanh" : "relu";
}

Mlp::Mlp(std::vector<std::size_t> widths_, Activation act_)
    : widths(std::move(widths_)), act(act_) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least 2 widths");
    for (std::size_t wdt : widths)
        if (wdt == 0) throw std::invalid_argument("Mlp: zero layer width");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        w.push_back(Tensor({widths[l], widths[l + 1]}));
        b.push_back(Tensor({widths[l + 1]}));
    }
}

Tensor orthogonal_init(std::size_t in, std::size_t out, double gain, Rng& rng) {
    const std::size_t n = std::max(in, out), m = std::min(in, out);
    // Gaussian matrix, then modified Gram-Schmidt on columns.
    std::vector<std::vector<double>> col(m, std::vector<double>(n));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) col[j][i] = rng.normal();
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double d = dot(col[j], col[k]);
            for (std::size_t i = 0; i < n; ++i) col[j][i] -= d * col[k][i];
        }
        double norm = l2_norm(col[j]);
        if (norm < 1e-12) throw std::runtime_error("orthogonal_init: degenerate draw");
        for (std::size_t i = 0; i < n; ++i) col[j][i] /= norm;
    }
    Tensor wmat({in, out});
    if (in >= out) {  // n == in, m == out: orthonormal columns
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t j = 0; j < out; ++j) wmat(i, j) = gain * col[j][i];
    } else {  // orthonormal rows
        for (std::size_t i = 0; i < in; ++i)
            for (std::size_t j = 0; j < out; ++j) wmat(i, j) = gain * col[i][j];
    }
    return wmat;
}

Mlp Mlp::make(std::vector<std::size_t> widths_, Activation act_, Rng& rng,
              double final_gain) {
    Mlp net(std::move(widths_), act_);
    const double hidden_gain = act_ == Activation::relu ? std::sqrt(2.0) : 1.0;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double gain = (l + 1 == net.layer_count()) ? final_gain : hidden_gain;
        net.w[l] = orthogonal_init(net.widths[l], net.widths[l + 1], gain, rng);
        // biases stay zero
    }
    return net;
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < w.size(); ++l) n += w[l].numel() + b[l].numel();
    return n;
}

void Mlp::validate() const {
    if (w.size() != b.size() || w.size() + 1 != widths.size())
        throw std::invalid_argument("Mlp: inconsistent layer bookkeeping");
    for (std::size_t l = 0; l < w.size(); ++l) {
        if (w[l].shape != std::vector<std::size_t>{widths[l], widths[l + 1]} ||
            b[l].shape != std::vector<std::size_t>{widths[l + 1]})
            throw std::invalid_argument("Mlp: weight shape incompatible with widths");
        if (!w[l].all_finite() || !b[l].all_finite())
            throw std::invalid_argument("Mlp: non-finite parameter");
    }
}

Tensor Mlp::value(const Tensor& x) const {
    const bool single = x.rank() == 1;
    if ((single ? x.shape[0] : x.shape[1]) != in_dim())
        throw std::invalid_argument("Mlp::value: input width " + x.shape_str() +
                                    " does not match first layer");
    const std::size_t m = single ? 1 : x.shape[0];
    Tensor h = single ? Tensor({1, x.shape[0]}, x.data) : x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        const std::size_t k = widths[l], n = widths[l + 1];
        Tensor y({m, n});
        for (std::size_t i = 0; i < m; ++i) {
            const double* hrow = &h.data[i * k];
            double* yrow = &y.data[i * n];
            for (std::size_t j = 0; j < n; ++j) yrow[j] = b[l].data[j];
            for (std::size_t p = 0; p < k; ++p) {
                const double hv = hrow[p];
                if (hv == 0.0) continue;
                const double* wrow = &w[l].data[p * n];
                for (std::size_t j = 0; j < n; ++j) yrow[j] += hv * wrow[j];
            }
        }
        if (l + 1 < w.size()) {
            if (act == Activation::tanh)
                for (double& v : y.data) v = std::tanh(v);
            else
                for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        }
        h = std::move(y);
    }
    if (!h.all_finite()) throw std::runtime_error("Mlp::value: non-finite output");
    if (single) return Tensor({h.shape[1]}, std::move(h.data));
    return h;
}

double Mlp::value1(std::span<const double> x) const {
    if (out_dim() != 1) throw std::invalid_argument("Mlp::value1: output is not scalar");
    Tensor in({x.size()}, std::vector<double>(x.begin(), x.end()));
    return value(in).data[0];
}

std::vector<double> Mlp::flat_params() const {
    std::vector<double> p;
    p.reserve(param_count());
    for (std::size_t l = 0; l < w.size(); ++l) {
        p.insert(p.end(), w[l].data.begin(), w[l].data.end());
        p.insert(p.end(), b[l].data.begin(), b[l].data.end());
    }
    return p;
}

void Mlp::set_flat_params(std::span<const double> p) {
    if (p.size() != param_count())
        throw std::invalid_argument("Mlp::set_flat_params: length mismatch");
    std::size_t off = 0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        for (double& v : w[l].data) v = p[off++];
        for (double& v : b[l].data) v = p[off++];
    }
}

MlpVars inject_params(Tape& tape, const Mlp& net, bool needs_grad) {
    MlpVars vars;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        vars.w.push_back(tape.leaf(net.w[l], needs_grad));
        vars.b.push_back(tape.leaf(net.b[l], needs_grad));
    }
    return vars;
}

Var mlp_forward(Tape& tape, const MlpVars& vars, Var x, Activation act) {
    Var h = x;
    for (std::size_t l = 0; l < vars.w.size(); ++l) {
        h = tape.add_rowvec(tape.matmul(h, vars.w[l]), vars.b[l]);
        if (l + 1 < vars.w.size())
            h = act == Activation::tanh ? tape.tanh_op(h) : tape.relu(h);
    }
    return h;
}

std::vector<double> collect_grads(Tape& tape, const MlpVars& vars) {
    std::vector<double> g;
    for (std::size_t l = 0; l < vars.w.size(); ++l) {
        const Tensor& gw = tape.grad(vars.w[l]);
        const Tensor& gb = tape.grad(vars.b[l]);
        g.insert(g.end(), gw.data.begin(), gw.data.end());
        g.insert(g.end(), gb.data.begin(), gb.data.end());
    }
    return g;
}

}  // namespace avec
