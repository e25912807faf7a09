#pragma once

// Recording-tape reverse-mode differentiation over matrix-valued nodes.
// Values are computed eagerly at record time; a reverse sweep from any
// recorded scalar yields parameter gradients. Nodes are appended in
// topological order by construction. One tape belongs to one logical
// execution context; finished tapes may be replayed read-only.

#include "ptpi/common.hpp"

#include <cstring>
#if defined(__GLIBC__) || defined(__linux__)
#include <malloc.h>
#endif

namespace ptpi::ad {

enum class Op : uint8_t {
    Const,
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowInt,
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Tanh,
    Elu,
    EluD1,
    EluD2,
    Silu,
    SiluD1,
    SiluD2,
    AbsSmooth,
    Scale,   // c * a, c immediate
    Shift,   // a + c, c immediate
    MatMul,  // a * b
    MatMulTA,  // a^T * b
    AddCol,    // a + b (b: column vector broadcast over columns of a)
    Sum,       // 1x1 sum of all entries
    Block,     // submatrix (r0, c0, rows, cols)
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Const: return "const";
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::PowInt: return "pow-int";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Sqrt: return "sqrt";
        case Op::Tanh: return "tanh";
        case Op::Elu: return "elu";
        case Op::EluD1: return "elu-d1";
        case Op::EluD2: return "elu-d2";
        case Op::Silu: return "silu";
        case Op::SiluD1: return "silu-d1";
        case Op::SiluD2: return "silu-d2";
        case Op::AbsSmooth: return "abs-smooth";
        case Op::Scale: return "scale";
        case Op::Shift: return "shift";
        case Op::MatMul: return "matmul";
        case Op::MatMulTA: return "matmul-ta";
        case Op::AddCol: return "add-col";
        case Op::Sum: return "sum";
        case Op::Block: return "block";
    }
    return "?";
}

// Smoothed-ELU family. The second derivative has a jump at 0; the value
// there is fixed to the left limit so jet propagation never branches.
inline double elu_val(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline double elu_d1(double x) { return x >= 0.0 ? 1.0 : std::exp(x); }
inline double elu_d2(double x) { return x > 0.0 ? 0.0 : std::exp(x); }
inline double elu_d3(double x) { return x > 0.0 ? 0.0 : std::exp(x); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double silu_val(double x) { return x * sigmoid(x); }
inline double silu_d1(double x) {
    double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}
inline double silu_d2(double x) {
    double s = sigmoid(x);
    return s * (1.0 - s) * (2.0 + x * (1.0 - 2.0 * s));
}
inline double silu_d3(double x) {
    double s = sigmoid(x);
    double s1 = s * (1.0 - s);
    double s2 = s1 * (1.0 - 2.0 * s);
    return s2 * (2.0 + x * (1.0 - 2.0 * s)) + s1 * (1.0 - 2.0 * s) - 2.0 * x * s1 * s1;
}

struct Node {
    Op op;
    int32_t a = -1;
    int32_t b = -1;
    double aux = 0.0;  // immediate: scale/shift constant, abs-smooth epsilon, pow exponent
    int32_t r0 = 0, c0 = 0, nr = 0, nc = 0;  // block geometry
    MatrixXd value;
    bool needs_grad = false;
};

class Tape;

/// Handle to one node of a tape.
struct Var {
    Tape* tape = nullptr;
    int32_t idx = -1;
    bool valid() const { return tape != nullptr && idx >= 0; }
};

class Tape {
public:
    Tape() { tune_allocator(); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Node payloads are a few hundred KB and churn every step; left at the
    // defaults, glibc serves them with mmap and each touch page-faults.
    static void tune_allocator() {
#if defined(__GLIBC__)
        static const bool done = [] {
            mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
            mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
            return true;
        }();
        (void)done;
#endif
    }

    void reserve(size_t n) { nodes_.reserve(n); }
    size_t size() const { return nodes_.size(); }

    const Node& node(int32_t i) const { return nodes_[i]; }
    const MatrixXd& value(Var v) const { return nodes_[v.idx].value; }
    double scalar(Var v) const {
        const MatrixXd& m = nodes_[v.idx].value;
        require(m.size() == 1, "shape", "scalar() on non-scalar node");
        return m(0, 0);
    }

    Var leaf(MatrixXd v) { return push(Op::Leaf, -1, -1, std::move(v), true); }
    Var leaf(double v) { return leaf(scalar_mat(v)); }
    Var constant(MatrixXd v) { return push(Op::Const, -1, -1, std::move(v), false); }
    Var constant(double v) { return constant(scalar_mat(v)); }

    Var add(Var a, Var b) { return binary(Op::Add, a, b); }
    Var sub(Var a, Var b) { return binary(Op::Sub, a, b); }
    Var mul(Var a, Var b) { return binary(Op::Mul, a, b); }
    Var div(Var a, Var b) { return binary(Op::Div, a, b); }

    Var neg(Var a) { return unary(Op::Neg, a); }
    Var exp(Var a) { return unary(Op::Exp, a); }
    Var log(Var a) { return unary(Op::Log, a); }
    Var sin(Var a) { return unary(Op::Sin, a); }
    Var cos(Var a) { return unary(Op::Cos, a); }
    Var sqrt(Var a) { return unary(Op::Sqrt, a); }
    Var tanh(Var a) { return unary(Op::Tanh, a); }
    Var elu(Var a) { return unary(Op::Elu, a); }
    Var elu_deriv1(Var a) { return unary(Op::EluD1, a); }
    Var elu_deriv2(Var a) { return unary(Op::EluD2, a); }
    Var silu(Var a) { return unary(Op::Silu, a); }
    Var silu_deriv1(Var a) { return unary(Op::SiluD1, a); }
    Var silu_deriv2(Var a) { return unary(Op::SiluD2, a); }

    Var pow_int(Var a, int k) { return unary(Op::PowInt, a, double(k)); }
    Var abs_smooth(Var a, double eps) { return unary(Op::AbsSmooth, a, eps); }
    Var scale(Var a, double c) { return unary(Op::Scale, a, c); }
    Var shift(Var a, double c) { return unary(Op::Shift, a, c); }

    Var matmul(Var a, Var b) {
        check_same_tape(a, b);
        require(val(a).cols() == val(b).rows(), "shape", "matmul inner dims");
        MatrixXd v = val(a) * val(b);
        return push(Op::MatMul, a.idx, b.idx, std::move(v), needs(a) || needs(b));
    }
    /// a^T * b without materializing the transpose.
    Var matmul_ta(Var a, Var b) {
        check_same_tape(a, b);
        require(val(a).rows() == val(b).rows(), "shape", "matmul-ta inner dims");
        MatrixXd v = val(a).transpose() * val(b);
        return push(Op::MatMulTA, a.idx, b.idx, std::move(v), needs(a) || needs(b));
    }
    Var add_col(Var a, Var b) {
        check_same_tape(a, b);
        require(val(b).cols() == 1 && val(b).rows() == val(a).rows(), "shape", "add-col bias shape");
        MatrixXd v = val(a).colwise() + Eigen::VectorXd(val(b).col(0));
        return push(Op::AddCol, a.idx, b.idx, std::move(v), needs(a) || needs(b));
    }
    Var sum(Var a) {
        MatrixXd v = scalar_mat(val(a).sum());
        return push(Op::Sum, a.idx, -1, std::move(v), needs(a));
    }
    Var mean(Var a) { return scale(sum(a), 1.0 / double(val(a).size())); }
    Var block(Var a, int r0, int c0, int nr, int nc) {
        require(r0 >= 0 && c0 >= 0 && r0 + nr <= val(a).rows() && c0 + nc <= val(a).cols(),
                "shape", "block out of range");
        MatrixXd v = val(a).block(r0, c0, nr, nc);
        Var out = push(Op::Block, a.idx, -1, std::move(v), needs(a));
        Node& n = nodes_[out.idx];
        n.r0 = r0;
        n.c0 = c0;
        n.nr = nr;
        n.nc = nc;
        return out;
    }

    /// Gradient of a recorded finite scalar with respect to the given leaves.
    /// Leaves not reachable from the loss get zero gradients.
    std::vector<MatrixXd> grad(Var loss, const std::vector<Var>& params) {
        require(loss.tape == this, "tape", "loss recorded on another tape");
        require(nodes_[loss.idx].value.size() == 1, "shape", "grad() needs a scalar loss");
        require(std::isfinite(nodes_[loss.idx].value(0, 0)), "diverged-gradient",
                "loss value is not finite");
        backward(loss);
        std::vector<MatrixXd> out;
        out.reserve(params.size());
        for (Var p : params) {
            require(p.tape == this, "tape", "parameter recorded on another tape");
            require(nodes_[p.idx].op == Op::Leaf, "tape", "grad target is not a leaf");
            if (adj_set_[p.idx])
                out.push_back(adj_[p.idx]);
            else
                out.push_back(MatrixXd::Zero(nodes_[p.idx].value.rows(), nodes_[p.idx].value.cols()));
        }
        return out;
    }

    /// Re-runs the whole forward pass and checks every recorded value is
    /// reproduced bit-for-bit. Leaves and constants are the fixed inputs.
    bool replay_matches() const {
        std::vector<MatrixXd> re(nodes_.size());
        for (size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            if (n.op == Op::Leaf || n.op == Op::Const) {
                re[i] = n.value;
            } else {
                re[i] = recompute(n, re);
            }
            if (re[i].rows() != n.value.rows() || re[i].cols() != n.value.cols()) return false;
            if (std::memcmp(re[i].data(), n.value.data(), sizeof(double) * n.value.size()) != 0)
                return false;
        }
        return true;
    }

private:
    static MatrixXd scalar_mat(double v) {
        MatrixXd m(1, 1);
        m(0, 0) = v;
        return m;
    }

    const MatrixXd& val(Var v) const {
        require(v.tape == this, "tape", "operand recorded on another tape");
        return nodes_[v.idx].value;
    }
    bool needs(Var v) const { return nodes_[v.idx].needs_grad; }

    void check_same_tape(Var a, Var b) const {
        require(a.tape == this && b.tape == this, "tape", "operands from different tapes");
    }

    Var push(Op op, int32_t a, int32_t b, MatrixXd v, bool needs_grad) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(v);
        n.needs_grad = needs_grad;
        nodes_.push_back(std::move(n));
        return Var{this, int32_t(nodes_.size() - 1)};
    }

    Var binary(Op op, Var a, Var b) {
        check_same_tape(a, b);
        const MatrixXd& va = val(a);
        const MatrixXd& vb = val(b);
        require(va.rows() == vb.rows() && va.cols() == vb.cols(), "shape",
                std::string(op_name(op)) + " operand shapes differ");
        MatrixXd v;
        switch (op) {
            case Op::Add: v = va + vb; break;
            case Op::Sub: v = va - vb; break;
            case Op::Mul: v = va.array() * vb.array(); break;
            case Op::Div: v = va.array() / vb.array(); break;
            default: fail("tape", "bad binary op");
        }
        return push(op, a.idx, b.idx, std::move(v), needs(a) || needs(b));
    }

    Var unary(Op op, Var a, double aux = 0.0) {
        const MatrixXd& x = val(a);
        MatrixXd v = apply_unary(op, x, aux);
        Var out = push(op, a.idx, -1, std::move(v), needs(a));
        nodes_[out.idx].aux = aux;
        return out;
    }

    static MatrixXd apply_unary(Op op, const MatrixXd& x, double aux) {
        switch (op) {
            case Op::Neg: return -x;
            case Op::Exp: return x.array().exp();
            case Op::Log: return x.array().log();
            case Op::Sin: return x.array().sin();
            case Op::Cos: return x.array().cos();
            case Op::Sqrt: return x.array().sqrt();
            case Op::Tanh: return x.array().tanh();
            case Op::Elu: return x.unaryExpr([](double t) { return elu_val(t); });
            case Op::EluD1: return x.unaryExpr([](double t) { return elu_d1(t); });
            case Op::EluD2: return x.unaryExpr([](double t) { return elu_d2(t); });
            case Op::Silu: return x.unaryExpr([](double t) { return silu_val(t); });
            case Op::SiluD1: return x.unaryExpr([](double t) { return silu_d1(t); });
            case Op::SiluD2: return x.unaryExpr([](double t) { return silu_d2(t); });
            case Op::PowInt: {
                int k = int(aux);
                return x.unaryExpr([k](double t) { return std::pow(t, k); });
            }
            case Op::AbsSmooth: return (x.array().square() + aux * aux).sqrt();
            case Op::Scale: return aux * x;
            case Op::Shift: return x.array() + aux;
            default: fail("tape", "bad unary op");
        }
    }

    MatrixXd recompute(const Node& n, const std::vector<MatrixXd>& re) const {
        const MatrixXd& va = re[n.a];
        switch (n.op) {
            case Op::Add: return va + re[n.b];
            case Op::Sub: return va - re[n.b];
            case Op::Mul: return va.array() * re[n.b].array();
            case Op::Div: return va.array() / re[n.b].array();
            case Op::MatMul: return va * re[n.b];
            case Op::MatMulTA: return va.transpose() * re[n.b];
            case Op::AddCol: return va.colwise() + Eigen::VectorXd(re[n.b].col(0));
            case Op::Sum: {
                MatrixXd m(1, 1);
                m(0, 0) = va.sum();
                return m;
            }
            case Op::Block: return va.block(n.r0, n.c0, n.nr, n.nc);
            default: return apply_unary(n.op, va, n.aux);
        }
    }

    void ensure_adj(int32_t i) {
        if (!adj_set_[i]) {
            adj_[i] = MatrixXd::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
            adj_set_[i] = true;
        }
    }

    // First contribution assigns straight into the adjoint buffer; later
    // ones accumulate. Avoids a zero-fill pass per node.
    template <typename Expr>
    void accumulate(int32_t i, const Expr& g) {
        if (!nodes_[i].needs_grad) return;
        if (!adj_set_[i]) {
            adj_[i] = g;
            adj_set_[i] = true;
        } else {
            adj_[i] += g;
        }
    }

    void backward(Var loss) {
        const size_t n = nodes_.size();
        adj_.assign(n, MatrixXd());
        adj_set_.assign(n, false);
        adj_[loss.idx] = MatrixXd::Ones(1, 1);
        adj_set_[loss.idx] = true;

        for (int32_t i = loss.idx; i >= 0; --i) {
            if (!adj_set_[i] || !nodes_[i].needs_grad) continue;
            Node& nd = nodes_[i];
            const MatrixXd& g = adj_[i];
            if (!g.allFinite())
                fail("diverged-gradient",
                     "non-finite adjoint at node " + std::to_string(i) + " (op " +
                         op_name(nd.op) + ")");
            const int32_t a = nd.a, b = nd.b;
            switch (nd.op) {
                case Op::Leaf:
                case Op::Const:
                    break;
                case Op::Add:
                    accumulate(a, g);
                    accumulate(b, g);
                    break;
                case Op::Sub:
                    accumulate(a, g);
                    if (nodes_[b].needs_grad) accumulate(b, -g);
                    break;
                case Op::Mul:
                    if (nodes_[a].needs_grad)
                        accumulate(a, (g.array() * nodes_[b].value.array()).matrix());
                    if (nodes_[b].needs_grad)
                        accumulate(b, (g.array() * nodes_[a].value.array()).matrix());
                    break;
                case Op::Div:
                    if (nodes_[a].needs_grad)
                        accumulate(a, (g.array() / nodes_[b].value.array()).matrix());
                    if (nodes_[b].needs_grad)
                        accumulate(b, (-g.array() * nd.value.array() / nodes_[b].value.array())
                                          .matrix());
                    break;
                case Op::Neg:
                    accumulate(a, -g);
                    break;
                case Op::Exp:
                    accumulate(a, (g.array() * nd.value.array()).matrix());
                    break;
                case Op::Log:
                    accumulate(a, (g.array() / nodes_[a].value.array()).matrix());
                    break;
                case Op::Sin:
                    accumulate(a, (g.array() * nodes_[a].value.array().cos()).matrix());
                    break;
                case Op::Cos:
                    accumulate(a, (-g.array() * nodes_[a].value.array().sin()).matrix());
                    break;
                case Op::Sqrt:
                    accumulate(a, (0.5 * g.array() / nd.value.array()).matrix());
                    break;
                case Op::Tanh:
                    accumulate(a, (g.array() * (1.0 - nd.value.array().square())).matrix());
                    break;
                case Op::Elu:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&elu_d1).array()).matrix());
                    break;
                case Op::EluD1:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&elu_d2).array()).matrix());
                    break;
                case Op::EluD2:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&elu_d3).array()).matrix());
                    break;
                case Op::Silu:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&silu_d1).array()).matrix());
                    break;
                case Op::SiluD1:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&silu_d2).array()).matrix());
                    break;
                case Op::SiluD2:
                    accumulate(a, (g.array() * nodes_[a].value.unaryExpr(&silu_d3).array()).matrix());
                    break;
                case Op::PowInt: {
                    int k = int(nd.aux);
                    accumulate(a, (g.array() * nodes_[a].value
                                                   .unaryExpr([k](double t) {
                                                       return double(k) * std::pow(t, k - 1);
                                                   })
                                                   .array())
                                      .matrix());
                    break;
                }
                case Op::AbsSmooth:
                    accumulate(a, (g.array() * nodes_[a].value.array() / nd.value.array()).matrix());
                    break;
                case Op::Scale:
                    accumulate(a, nd.aux * g);
                    break;
                case Op::Shift:
                    accumulate(a, g);
                    break;
                case Op::MatMul:
                    if (nodes_[a].needs_grad) accumulate(a, g * nodes_[b].value.transpose());
                    if (nodes_[b].needs_grad) accumulate(b, nodes_[a].value.transpose() * g);
                    break;
                case Op::MatMulTA:
                    if (nodes_[a].needs_grad) accumulate(a, nodes_[b].value * g.transpose());
                    if (nodes_[b].needs_grad) accumulate(b, nodes_[a].value * g);
                    break;
                case Op::AddCol:
                    accumulate(a, g);
                    if (nodes_[b].needs_grad) accumulate(b, g.rowwise().sum());
                    break;
                case Op::Sum:
                    accumulate(a, MatrixXd::Constant(nodes_[a].value.rows(),
                                                     nodes_[a].value.cols(), g(0, 0)));
                    break;
                case Op::Block: {
                    if (nodes_[a].needs_grad) {
                        ensure_adj(a);
                        adj_[a].block(nd.r0, nd.c0, nd.nr, nd.nc) += g;
                    }
                    break;
                }
            }
            if (i != loss.idx && nd.op != Op::Leaf) adj_[i].resize(0, 0);  // leaves keep their gradients
        }
    }

    std::vector<Node> nodes_;
    std::vector<MatrixXd> adj_;
    std::vector<char> adj_set_;
};

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }
inline Var operator*(double c, Var a) { return a.tape->scale(a, c); }
inline Var operator*(Var a, double c) { return a.tape->scale(a, c); }
inline Var operator+(Var a, double c) { return a.tape->shift(a, c); }
inline Var operator-(Var a, double c) { return a.tape->shift(a, -c); }

}  // namespace ptpi::ad
