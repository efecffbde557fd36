#pragma once

#include <functional>
#include <vector>

#include "avec/tensor.hpp"

namespace avec {

/// Handle into a Tape. Invalid until assigned by a tape operation.
struct Var {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

/// Reverse-mode automatic differentiation over a write-once tape.
///
/// The tape is rebuilt for every loss evaluation; nodes are appended in
/// topological order by construction, so backward() is a single reverse
/// sweep. Every forward op checks its output for NaN/Inf and throws on
/// violation. backward() may be called once per tape.
class Tape {
  public:
    Tape() = default;
    explicit Tape(std::size_t reserve_nodes) { nodes_.reserve(reserve_nodes); }

    // -- graph inputs -------------------------------------------------------
    Var leaf(Tensor value, bool needs_grad);
    Var constant(Tensor value) { return leaf(std::move(value), false); }
    Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

    // -- linear algebra -----------------------------------------------------
    Var matmul(Var a, Var b);              // [m,k] x [k,n] -> [m,n]
    Var add(Var a, Var b);                 // elementwise, same shape
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var add_rowvec(Var a, Var v);          // [m,n] + [n]
    Var mul_rowvec(Var a, Var v);          // [m,n] * [n] (per row)
    Var concat_cols(Var a, Var b);         // [m,p] ++ [m,q] -> [m,p+q]
    Var slice_cols(Var a, std::size_t c0, std::size_t c1);  // columns [c0,c1)

    // -- scalar-coefficient ops ---------------------------------------------
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var neg(Var a) { return scale(a, -1.0); }

    // -- elementwise nonlinearities -----------------------------------------
    Var tanh_op(Var a);
    Var relu(Var a);
    Var exp_op(Var a);
    Var log_op(Var a);
    Var softplus(Var a);                   // log(1 + e^x), overflow-safe
    Var square(Var a);
    Var clamp(Var a, double lo, double hi);
    Var minimum(Var a, Var b);

    // -- reductions and broadcasts ------------------------------------------
    Var sum(Var a);                        // -> [1]
    Var mean(Var a);                       // -> [1]
    Var row_sum(Var a);                    // [m,n] -> [m,1]
    Var sub_bcast(Var a, Var s);           // a - s, s shape [1]
    Var mul_bcast(Var a, Var s);           // a * s, s shape [1]

    // -- access ---------------------------------------------------------------
    const Tensor& value(Var v) const { return node(v).value; }
    double scalar_value(Var v) const;

    /// Runs the reverse sweep from a scalar root. Throws std::logic_error if
    /// called a second time on the same tape and std::runtime_error on a
    /// non-finite gradient.
    void backward(Var root);

    /// Gradient of the last backward() root w.r.t. v. Parameters unreachable
    /// from the root get a zero gradient of the right shape.
    const Tensor& grad(Var v);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;  // empty until touched by backward
        std::function<void(Tape&)> pull;
        bool needs_grad = false;
    };

    std::vector<Node> nodes_;
    bool backward_done_ = false;

    Node& node(Var v) {
        if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
            throw std::logic_error("Tape: invalid Var handle");
        return nodes_[static_cast<std::size_t>(v.idx)];
    }
    const Node& node(Var v) const {
        if (!v.valid() || static_cast<std::size_t>(v.idx) >= nodes_.size())
            throw std::logic_error("Tape: invalid Var handle");
        return nodes_[static_cast<std::size_t>(v.idx)];
    }

    Tensor& grad_buf(int idx);
    Var push(Tensor value, bool needs_grad, std::function<void(Tape&)> pull,
             const char* opname);
};

}  // namespace avec
