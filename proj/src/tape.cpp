#include "avec/tape.hpp"

#include <algorithm>
#include <string>

namespace avec {

namespace {

void check_finite(const Tensor& t, const char* opname) {
    if (!t.all_finite())
        throw std::runtime_error(std::string("tape: non-finite value produced by '") +
                                 opname + "'");
}

[[noreturn]] void shape_error(const char* opname, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string("tape: shape mismatch in '") + opname +
                                "': " + a.shape_str() + " vs " + b.shape_str());
}

}  // namespace

// Nodes are appended in construction order, so a node's index equals
// nodes_.size() at the moment its inputs are read. Closures capture that
// index ("self") to find their own upstream gradient during the sweep.

Var Tape::push(Tensor value, bool needs_grad, std::function<void(Tape&)> pull,
               const char* opname) {
    check_finite(value, opname);
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.pull = std::move(pull);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf(int idx) {
    Node& n = nodes_[static_cast<std::size_t>(idx)];
    if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
    return n.grad;
}

Var Tape::leaf(Tensor value, bool needs_grad) {
    return push(std::move(value), needs_grad, nullptr, "leaf");
}

double Tape::scalar_value(Var v) const {
    const Tensor& t = value(v);
    if (t.numel() != 1) throw std::invalid_argument("scalar_value: tensor is not scalar");
    return t.data[0];
}

void Tape::backward(Var root) {
    if (backward_done_)
        throw std::logic_error("tape: backward called twice without graph reset");
    backward_done_ = true;
    const Node& r = node(root);
    if (r.value.numel() != 1)
        throw std::invalid_argument("tape: backward root must be scalar");
    grad_buf(root.idx).data[0] = 1.0;
    for (int i = root.idx; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.needs_grad || n.grad.data.empty() || !n.pull) continue;
        if (!n.grad.all_finite())
            throw std::runtime_error("tape: non-finite gradient during backward");
        n.pull(*this);
    }
}

const Tensor& Tape::grad(Var v) {
    Node& n = node(v);
    if (n.grad.data.empty()) n.grad = Tensor::zeros(n.value.shape);
    return n.grad;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0])
        shape_error("matmul", A, B);
    const std::size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = &A.data[i * k];
        double* crow = &C.data[i * n];
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = &B.data[p * n];
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    const bool ng = node(a).needs_grad || node(b).needs_grad;
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), ng,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;  // [m,n]
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);  // [m,k]
                        const Tensor& Bv = t.nodes_[bi].value;
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t p = 0; p < k; ++p) {
                                double s = 0.0;
                                const double* grow = &g.data[i * n];
                                const double* brow = &Bv.data[p * n];
                                for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                                ga.data[i * k + p] += s;
                            }
                    }
                    if (ngb) {
                        Tensor& gb = t.grad_buf(bi);  // [k,n]
                        const Tensor& Av = t.nodes_[ai].value;
                        for (std::size_t p = 0; p < k; ++p)
                            for (std::size_t i = 0; i < m; ++i) {
                                const double av = Av.data[i * k + p];
                                if (av == 0.0) continue;
                                const double* grow = &g.data[i * n];
                                double* gbrow = &gb.data[p * n];
                                for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
                            }
                    }
                },
                "matmul");
}

Var Tape::add(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("add", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] += B.data[i];
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngb,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (ngb) {
                        Tensor& gb = t.grad_buf(bi);
                        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] += g.data[i];
                    }
                },
                "add");
}

Var Tape::sub(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("sub", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] -= B.data[i];
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngb,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (ngb) {
                        Tensor& gb = t.grad_buf(bi);
                        for (std::size_t i = 0; i < g.data.size(); ++i) gb.data[i] -= g.data[i];
                    }
                },
                "sub");
}

Var Tape::mul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("mul", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] *= B.data[i];
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngb,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        const Tensor& Bv = t.nodes_[bi].value;
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                            ga.data[i] += g.data[i] * Bv.data[i];
                    }
                    if (ngb) {
                        Tensor& gb = t.grad_buf(bi);
                        const Tensor& Av = t.nodes_[ai].value;
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                            gb.data[i] += g.data[i] * Av.data[i];
                    }
                },
                "mul");
}

Var Tape::add_rowvec(Var a, Var v) {
    const Tensor& A = value(a);
    const Tensor& V = value(v);
    if (A.rank() != 2 || V.rank() != 1 || V.shape[0] != A.shape[1])
        shape_error("add_rowvec", A, V);
    const std::size_t m = A.shape[0], n = A.shape[1];
    Tensor C = A;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) C.data[i * n + j] += V.data[j];
    const bool nga = node(a).needs_grad, ngv = node(v).needs_grad;
    const int ai = a.idx, vi = v.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngv,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (ngv) {
                        Tensor& gv = t.grad_buf(vi);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) gv.data[j] += g.data[i * n + j];
                    }
                },
                "add_rowvec");
}

Var Tape::mul_rowvec(Var a, Var v) {
    const Tensor& A = value(a);
    const Tensor& V = value(v);
    if (A.rank() != 2 || V.rank() != 1 || V.shape[0] != A.shape[1])
        shape_error("mul_rowvec", A, V);
    const std::size_t m = A.shape[0], n = A.shape[1];
    Tensor C = A;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) C.data[i * n + j] *= V.data[j];
    const bool nga = node(a).needs_grad, ngv = node(v).needs_grad;
    const int ai = a.idx, vi = v.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngv,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& Av = t.nodes_[ai].value;
                    const Tensor& Vv = t.nodes_[vi].value;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j)
                                ga.data[i * n + j] += g.data[i * n + j] * Vv.data[j];
                    }
                    if (ngv) {
                        Tensor& gv = t.grad_buf(vi);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j)
                                gv.data[j] += g.data[i * n + j] * Av.data[i * n + j];
                    }
                },
                "mul_rowvec");
}

Var Tape::concat_cols(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.shape[0] != B.shape[0])
        shape_error("concat_cols", A, B);
    const std::size_t m = A.shape[0], p = A.shape[1], q = B.shape[1];
    Tensor C({m, p + q});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) C.data[i * (p + q) + j] = A.data[i * p + j];
        for (std::size_t j = 0; j < q; ++j) C.data[i * (p + q) + p + j] = B.data[i * q + j];
    }
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngb,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < p; ++j)
                                ga.data[i * p + j] += g.data[i * (p + q) + j];
                    }
                    if (ngb) {
                        Tensor& gb = t.grad_buf(bi);
                        for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < q; ++j)
                                gb.data[i * q + j] += g.data[i * (p + q) + p + j];
                    }
                },
                "concat_cols");
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
    const Tensor& A = value(a);
    if (A.rank() != 2 || c0 >= c1 || c1 > A.shape[1])
        throw std::invalid_argument("tape: bad slice_cols range for " + A.shape_str());
    const std::size_t m = A.shape[0], n = A.shape[1], w = c1 - c0;
    Tensor C({m, w});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < w; ++j) C.data[i * w + j] = A.data[i * n + c0 + j];
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < w; ++j)
                            ga.data[i * n + c0 + j] += g.data[i * w + j];
                },
                "slice_cols");
}

// ---------------------------------------------------------------------------
// scalar-coefficient and elementwise unary ops
// ---------------------------------------------------------------------------

Var Tape::scale(Var a, double c) {
    Tensor C = value(a);
    for (double& x : C.data) x *= c;
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += c * g.data[i];
                },
                "scale");
}

Var Tape::add_scalar(Var a, double c) {
    Tensor C = value(a);
    for (double& x : C.data) x += c;
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                },
                "add_scalar");
}

Var Tape::tanh_op(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) x = std::tanh(x);
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& y = t.nodes_[self].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        ga.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
                },
                "tanh");
}

Var Tape::relu(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) x = x > 0.0 ? x : 0.0;
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& x = t.nodes_[ai].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        if (x.data[i] > 0.0) ga.data[i] += g.data[i];
                },
                "relu");
}

Var Tape::exp_op(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) x = std::exp(x);
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& y = t.nodes_[self].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        ga.data[i] += g.data[i] * y.data[i];
                },
                "exp");
}

Var Tape::log_op(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) x = std::log(x);
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& x = t.nodes_[ai].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        ga.data[i] += g.data[i] / x.data[i];
                },
                "log");
}

Var Tape::softplus(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) {
        if (x > 30.0)
            ;  // softplus(x) ~= x
        else if (x < -30.0)
            x = std::exp(x);
        else
            x = std::log1p(std::exp(x));
    }
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& x = t.nodes_[ai].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                        double s = 1.0 / (1.0 + std::exp(-x.data[i]));  // sigmoid
                        ga.data[i] += g.data[i] * s;
                    }
                },
                "softplus");
}

Var Tape::square(Var a) {
    Tensor C = value(a);
    for (double& x : C.data) x = x * x;
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& x = t.nodes_[ai].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        ga.data[i] += 2.0 * g.data[i] * x.data[i];
                },
                "square");
}

Var Tape::clamp(Var a, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("tape: clamp requires lo < hi");
    Tensor C = value(a);
    for (double& x : C.data) x = std::min(hi, std::max(lo, x));
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& x = t.nodes_[ai].value;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < g.data.size(); ++i)
                        if (x.data[i] > lo && x.data[i] < hi) ga.data[i] += g.data[i];
                },
                "clamp");
}

Var Tape::minimum(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) shape_error("minimum", A, B);
    Tensor C = A;
    for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] = std::min(A.data[i], B.data[i]);
    const bool nga = node(a).needs_grad, ngb = node(b).needs_grad;
    const int ai = a.idx, bi = b.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngb,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& Av = t.nodes_[ai].value;
                    const Tensor& Bv = t.nodes_[bi].value;
                    // ties go to the first argument
                    for (std::size_t i = 0; i < g.data.size(); ++i) {
                        if (Av.data[i] <= Bv.data[i]) {
                            if (nga) t.grad_buf(ai).data[i] += g.data[i];
                        } else if (ngb) {
                            t.grad_buf(bi).data[i] += g.data[i];
                        }
                    }
                },
                "minimum");
}

// ---------------------------------------------------------------------------
// reductions / broadcasts
// ---------------------------------------------------------------------------

Var Tape::sum(Var a) {
    const Tensor& A = value(a);
    double s = 0.0;
    for (double x : A.data) s += x;
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(Tensor::scalar(s), nga,
                [=](Tape& t) {
                    const double g = t.nodes_[self].grad.data[0];
                    Tensor& ga = t.grad_buf(ai);
                    for (double& x : ga.data) x += g;
                },
                "sum");
}

Var Tape::mean(Var a) {
    const Tensor& A = value(a);
    if (A.numel() == 0) throw std::invalid_argument("tape: mean of empty tensor");
    double s = 0.0;
    for (double x : A.data) s += x;
    const double inv = 1.0 / static_cast<double>(A.numel());
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(Tensor::scalar(s * inv), nga,
                [=](Tape& t) {
                    const double g = t.nodes_[self].grad.data[0] * inv;
                    Tensor& ga = t.grad_buf(ai);
                    for (double& x : ga.data) x += g;
                },
                "mean");
}

Var Tape::row_sum(Var a) {
    const Tensor& A = value(a);
    if (A.rank() != 2) throw std::invalid_argument("tape: row_sum needs rank-2 input");
    const std::size_t m = A.shape[0], n = A.shape[1];
    Tensor C({m, 1});
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += A.data[i * n + j];
        C.data[i] = s;
    }
    const bool nga = node(a).needs_grad;
    const int ai = a.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& ga = t.grad_buf(ai);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j) ga.data[i * n + j] += g.data[i];
                },
                "row_sum");
}

Var Tape::sub_bcast(Var a, Var s) {
    const Tensor& A = value(a);
    const Tensor& S = value(s);
    if (S.numel() != 1) shape_error("sub_bcast", A, S);
    Tensor C = A;
    for (double& x : C.data) x -= S.data[0];
    const bool nga = node(a).needs_grad, ngs = node(s).needs_grad;
    const int ai = a.idx, si = s.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngs,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
                    }
                    if (ngs) {
                        double acc = 0.0;
                        for (double x : g.data) acc += x;
                        t.grad_buf(si).data[0] -= acc;
                    }
                },
                "sub_bcast");
}

Var Tape::mul_bcast(Var a, Var s) {
    const Tensor& A = value(a);
    const Tensor& S = value(s);
    if (S.numel() != 1) shape_error("mul_bcast", A, S);
    Tensor C = A;
    for (double& x : C.data) x *= S.data[0];
    const bool nga = node(a).needs_grad, ngs = node(s).needs_grad;
    const int ai = a.idx, si = s.idx;
    const int self = static_cast<int>(nodes_.size());
    return push(std::move(C), nga || ngs,
                [=](Tape& t) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& Av = t.nodes_[ai].value;
                    const double sv = t.nodes_[si].value.data[0];
                    if (nga) {
                        Tensor& ga = t.grad_buf(ai);
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                            ga.data[i] += g.data[i] * sv;
                    }
                    if (ngs) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < g.data.size(); ++i)
                            acc += g.data[i] * Av.data[i];
                        t.grad_buf(si).data[0] += acc;
                    }
                },
                "mul_bcast");
}

}  // namespace avec
