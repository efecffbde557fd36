#pragma once

#include <span>
#include <string>
#include <vector>

#include "avec/rng.hpp"
#include "avec/tape.hpp"
#include "avec/tensor.hpp"

namespace avec {

enum class Activation { tanh, relu };

Activation parse_activation(const std::string& s);
std::string activation_name(Activation a);

/// Fully connected net. Weight layout per layer: [in, out], bias [out].
/// Hidden layers use `act`; the output layer is linear.
struct Mlp {
    std::vector<std::size_t> widths;  // e.g. {2, 64, 64, 1}
    Activation act = Activation::tanh;
    std::vector<Tensor> w;
    std::vector<Tensor> b;

    Mlp() = default;
    Mlp(std::vector<std::size_t> widths_, Activation act_);  // zero-initialized

    /// Orthogonal init: hidden gain sqrt(2) for relu and 1 for tanh,
    /// final layer scaled by `final_gain`.
    static Mlp make(std::vector<std::size_t> widths_, Activation act_, Rng& rng,
                    double final_gain = 0.01);

    std::size_t layer_count() const { return w.size(); }
    std::size_t in_dim() const { return widths.front(); }
    std::size_t out_dim() const { return widths.back(); }
    std::size_t param_count() const;

    /// Plain forward with no graph; accepts [m,in] or a single [in] row.
    Tensor value(const Tensor& x) const;
    double value1(std::span<const double> x) const;  // single row, scalar output

    std::vector<double> flat_params() const;
    void set_flat_params(std::span<const double> p);

    void validate() const;
};

/// Orthogonal [in,out] matrix scaled by gain (orthonormal rows or columns,
/// whichever fits).
Tensor orthogonal_init(std::size_t in, std::size_t out, double gain, Rng& rng);

/// Parameter handles for one tape evaluation.
struct MlpVars {
    std::vector<Var> w, b;
};

MlpVars inject_params(Tape& tape, const Mlp& net, bool needs_grad = true);
Var mlp_forward(Tape& tape, const MlpVars& vars, Var x, Activation act);

/// Reads parameter gradients back out of the tape in flat_params() order.
std::vector<double> collect_grads(Tape& tape, const MlpVars& vars);

}  // namespace avec
