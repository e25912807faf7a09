#pragma once

// Dense feedforward networks with ELU / SiLU / sine / identity activations
// and an optional Fourier-feature input embedding. Three evaluation paths:
// plain batched forward, plain batched jets (for caches and prediction),
// and tape-recorded forward/jets (for training).

#include "ptpi/tape.hpp"

namespace ptpi {

enum class Act : uint8_t { Elu, Silu, Sine, Identity };

inline Act act_from_string(const std::string& s) {
    if (s == "elu") return Act::Elu;
    if (s == "silu") return Act::Silu;
    if (s == "sine") return Act::Sine;
    if (s == "identity") return Act::Identity;
    fail("config", "unknown activation '" + s + "'");
}

inline std::string act_to_string(Act a) {
    switch (a) {
        case Act::Elu: return "elu";
        case Act::Silu: return "silu";
        case Act::Sine: return "sine";
        case Act::Identity: return "identity";
    }
    return "?";
}

struct DenseNet {
    std::vector<MatrixXd> W;          // out x in per layer
    std::vector<VectorXd> b;          // out per layer
    std::vector<Act> act;             // per layer; last is Identity
    int input_dim = 0;
    int output_dim = 0;
    bool trainable = true;
    uint64_t version = 0;             // bumped on every parameter mutation

    int layers() const { return int(W.size()); }
    size_t param_count() const {
        size_t n = 0;
        for (int l = 0; l < layers(); ++l) n += W[l].size() + b[l].size();
        return n;
    }
    void bump() { ++version; }
};

inline void freeze(DenseNet& net) { net.trainable = false; }
inline void unfreeze(DenseNet& net) { net.trainable = true; }

/// Glorot-uniform weights, zero biases; deterministic for a fixed seed.
inline DenseNet init_dense(const std::vector<int>& widths, Act hidden, uint64_t seed) {
    require(widths.size() >= 2, "config", "init_dense needs at least two widths");
    for (int w : widths) require(w > 0, "config", "init_dense widths must be positive");
    DenseNet net;
    net.input_dim = widths.front();
    net.output_dim = widths.back();
    Rng rng(seed);
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        int in = widths[l], out = widths[l + 1];
        double bound = std::sqrt(6.0 / double(in + out));
        MatrixXd W(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) W(i, j) = rng.uniform(-bound, bound);
        net.W.push_back(std::move(W));
        net.b.push_back(VectorXd::Zero(out));
        net.act.push_back(l + 2 == widths.size() ? Act::Identity : hidden);
    }
    return net;
}

inline double act_val(Act a, double x) {
    switch (a) {
        case Act::Elu: return ad::elu_val(x);
        case Act::Silu: return ad::silu_val(x);
        case Act::Sine: return std::sin(x);
        case Act::Identity: return x;
    }
    return x;
}
inline double act_d1(Act a, double x) {
    switch (a) {
        case Act::Elu: return ad::elu_d1(x);
        case Act::Silu: return ad::silu_d1(x);
        case Act::Sine: return std::cos(x);
        case Act::Identity: return 1.0;
    }
    return 1.0;
}
inline double act_d2(Act a, double x) {
    switch (a) {
        case Act::Elu: return ad::elu_d2(x);
        case Act::Silu: return ad::silu_d2(x);
        case Act::Sine: return -std::sin(x);
        case Act::Identity: return 0.0;
    }
    return 0.0;
}

/// Plain batched forward; columns are samples.
inline MatrixXd net_forward(const DenseNet& net, const MatrixXd& X) {
    require(X.rows() == net.input_dim, "shape", "net_forward input dim");
    MatrixXd h = X;
    for (int l = 0; l < net.layers(); ++l) {
        MatrixXd z = (net.W[l] * h).colwise() + net.b[l];
        if (net.act[l] == Act::Identity) {
            h = std::move(z);
        } else {
            Act a = net.act[l];
            h = z.unaryExpr([a](double t) { return act_val(a, t); });
        }
    }
    return h;
}

inline VectorXd net_forward(const DenseNet& net, const VectorXd& x) {
    return net_forward(net, MatrixXd(x)).col(0);
}

/// Batched value + first (+ optional second) directional derivatives.
struct JetMats {
    MatrixXd v;
    MatrixXd d1;
    MatrixXd d2;  // empty when only order 1 requested
};

/// Propagates directional jets through the net with truncated order-2
/// Taylor arithmetic. D2 seeds default to zero (affine input maps).
inline JetMats net_forward_jet(const DenseNet& net, const MatrixXd& X, const MatrixXd& D1,
                               bool second, const MatrixXd& D2_seed = MatrixXd()) {
    require(X.rows() == net.input_dim && D1.rows() == net.input_dim &&
                D1.cols() == X.cols(),
            "shape", "net_forward_jet seed shape");
    JetMats j;
    j.v = X;
    j.d1 = D1;
    if (second) j.d2 = D2_seed.size() ? D2_seed : MatrixXd::Zero(X.rows(), X.cols());
    for (int l = 0; l < net.layers(); ++l) {
        MatrixXd z = (net.W[l] * j.v).colwise() + net.b[l];
        MatrixXd dz1 = net.W[l] * j.d1;
        MatrixXd dz2;
        if (second) dz2 = net.W[l] * j.d2;
        Act a = net.act[l];
        if (a == Act::Identity) {
            j.v = std::move(z);
            j.d1 = std::move(dz1);
            if (second) j.d2 = std::move(dz2);
        } else {
            MatrixXd g1 = z.unaryExpr([a](double t) { return act_d1(a, t); });
            j.d1 = g1.array() * dz1.array();
            if (second) {
                MatrixXd g2 = z.unaryExpr([a](double t) { return act_d2(a, t); });
                j.d2 = g1.array() * dz2.array() + g2.array() * dz1.array().square();
            }
            j.v = z.unaryExpr([a](double t) { return act_val(a, t); });
        }
    }
    return j;
}

// ---- tape-recorded evaluation ----

/// Per-tape parameter bindings for one net. Trainable nets bind leaves
/// (their gradients are retrievable); frozen nets enter as constants.
struct BoundNet {
    const DenseNet* net = nullptr;
    std::vector<ad::Var> W, b;
};

inline BoundNet bind(ad::Tape& tape, const DenseNet& net) {
    BoundNet bn;
    bn.net = &net;
    for (int l = 0; l < net.layers(); ++l) {
        if (net.trainable) {
            bn.W.push_back(tape.leaf(net.W[l]));
            bn.b.push_back(tape.leaf(MatrixXd(net.b[l])));
        } else {
            bn.W.push_back(tape.constant(net.W[l]));
            bn.b.push_back(tape.constant(MatrixXd(net.b[l])));
        }
    }
    return bn;
}

inline ad::Var apply_act(ad::Tape& tp, Act a, ad::Var z) {
    switch (a) {
        case Act::Elu: return tp.elu(z);
        case Act::Silu: return tp.silu(z);
        case Act::Sine: return tp.sin(z);
        case Act::Identity: return z;
    }
    fail("autodiff", "unsupported-primitive: activation in taped forward");
}

inline ad::Var taped_forward(ad::Tape& tp, const BoundNet& bn, ad::Var X) {
    ad::Var h = X;
    for (int l = 0; l < bn.net->layers(); ++l) {
        ad::Var z = tp.add_col(tp.matmul(bn.W[l], h), bn.b[l]);
        h = apply_act(tp, bn.net->act[l], z);
    }
    return h;
}

inline ad::Var taped_forward(ad::Tape& tp, const BoundNet& bn, const MatrixXd& X) {
    return taped_forward(tp, bn, tp.constant(X));
}

struct TapedJet {
    ad::Var v, d1, d2;
    bool second = false;
};

/// Order-2 jet propagation recorded on the tape, so the jet coefficients
/// stay differentiable with respect to the net parameters.
inline TapedJet taped_forward_jet(ad::Tape& tp, const BoundNet& bn, ad::Var X, ad::Var D1,
                                  bool second, ad::Var D2 = {}) {
    TapedJet j;
    j.second = second;
    j.v = X;
    j.d1 = D1;
    if (second)
        j.d2 = D2.valid() ? D2
                          : tp.constant(MatrixXd::Zero(tp.value(X).rows(), tp.value(X).cols()));
    for (int l = 0; l < bn.net->layers(); ++l) {
        ad::Var z = tp.add_col(tp.matmul(bn.W[l], j.v), bn.b[l]);
        ad::Var dz1 = tp.matmul(bn.W[l], j.d1);
        ad::Var dz2;
        if (second) dz2 = tp.matmul(bn.W[l], j.d2);
        Act a = bn.net->act[l];
        switch (a) {
            case Act::Identity:
                j.v = z;
                j.d1 = dz1;
                if (second) j.d2 = dz2;
                break;
            case Act::Sine: {
                ad::Var c = tp.cos(z), s = tp.sin(z);
                j.v = s;
                j.d1 = tp.mul(c, dz1);
                if (second) j.d2 = tp.sub(tp.mul(c, dz2), tp.mul(s, tp.mul(dz1, dz1)));
                break;
            }
            case Act::Elu: {
                ad::Var g1 = tp.elu_deriv1(z);
                j.v = tp.elu(z);
                j.d1 = tp.mul(g1, dz1);
                if (second)
                    j.d2 = tp.add(tp.mul(g1, dz2), tp.mul(tp.elu_deriv2(z), tp.mul(dz1, dz1)));
                break;
            }
            case Act::Silu: {
                ad::Var g1 = tp.silu_deriv1(z);
                j.v = tp.silu(z);
                j.d1 = tp.mul(g1, dz1);
                if (second)
                    j.d2 = tp.add(tp.mul(g1, dz2), tp.mul(tp.silu_deriv2(z), tp.mul(dz1, dz1)));
                break;
            }
            default:
                fail("autodiff", "unsupported-primitive: activation under order-2 propagation");
        }
    }
    return j;
}

inline TapedJet taped_forward_jet(ad::Tape& tp, const BoundNet& bn, const MatrixXd& X,
                                  const MatrixXd& D1, bool second,
                                  const MatrixXd& D2 = MatrixXd()) {
    ad::Var d2v{};
    if (second && D2.size()) d2v = tp.constant(D2);
    return taped_forward_jet(tp, bn, tp.constant(X), tp.constant(D1), second, d2v);
}

struct TapedJetMulti {
    ad::Var v;
    std::vector<ad::Var> d1, d2;
};

/// Jets along several directions at once; the value chain is shared.
inline TapedJetMulti taped_forward_jet_multi(ad::Tape& tp, const BoundNet& bn, const MatrixXd& X,
                                             const std::vector<MatrixXd>& D1, bool second,
                                             const std::vector<MatrixXd>& D2 = {}) {
    TapedJetMulti j;
    j.v = tp.constant(X);
    const size_t nd = D1.size();
    for (size_t q = 0; q < nd; ++q) {
        j.d1.push_back(tp.constant(D1[q]));
        if (second)
            j.d2.push_back(q < D2.size() && D2[q].size()
                               ? tp.constant(D2[q])
                               : tp.constant(MatrixXd::Zero(X.rows(), X.cols())));
    }
    for (int l = 0; l < bn.net->layers(); ++l) {
        ad::Var z = tp.add_col(tp.matmul(bn.W[l], j.v), bn.b[l]);
        std::vector<ad::Var> dz1(nd), dz2(second ? nd : 0);
        for (size_t q = 0; q < nd; ++q) {
            dz1[q] = tp.matmul(bn.W[l], j.d1[q]);
            if (second) dz2[q] = tp.matmul(bn.W[l], j.d2[q]);
        }
        Act a = bn.net->act[l];
        switch (a) {
            case Act::Identity:
                j.v = z;
                j.d1 = dz1;
                if (second) j.d2 = dz2;
                break;
            case Act::Sine: {
                ad::Var c = tp.cos(z), s = tp.sin(z);
                j.v = s;
                for (size_t q = 0; q < nd; ++q) {
                    if (second)
                        j.d2[q] =
                            tp.sub(tp.mul(c, dz2[q]), tp.mul(s, tp.mul(dz1[q], dz1[q])));
                    j.d1[q] = tp.mul(c, dz1[q]);
                }
                break;
            }
            case Act::Elu: {
                ad::Var g1 = tp.elu_deriv1(z);
                ad::Var g2{};
                if (second) g2 = tp.elu_deriv2(z);
                j.v = tp.elu(z);
                for (size_t q = 0; q < nd; ++q) {
                    if (second)
                        j.d2[q] =
                            tp.add(tp.mul(g1, dz2[q]), tp.mul(g2, tp.mul(dz1[q], dz1[q])));
                    j.d1[q] = tp.mul(g1, dz1[q]);
                }
                break;
            }
            case Act::Silu: {
                ad::Var g1 = tp.silu_deriv1(z);
                ad::Var g2{};
                if (second) g2 = tp.silu_deriv2(z);
                j.v = tp.silu(z);
                for (size_t q = 0; q < nd; ++q) {
                    if (second)
                        j.d2[q] =
                            tp.add(tp.mul(g1, dz2[q]), tp.mul(g2, tp.mul(dz1[q], dz1[q])));
                    j.d1[q] = tp.mul(g1, dz1[q]);
                }
                break;
            }
            default:
                fail("autodiff", "unsupported-primitive: activation under order-2 propagation");
        }
    }
    return j;
}

/// One order-2 jet per output component at a single input point; value, d1
/// and d2 remain tape values (differentiable with respect to parameters).
struct Jet2 {
    ad::Var value, d1, d2;
};

inline std::vector<Jet2> jet_eval(ad::Tape& tp, const DenseNet& net, const VectorXd& x,
                                  const VectorXd& dir) {
    require(int(x.size()) == net.input_dim, "shape", "jet_eval input dim");
    require(std::abs(dir.norm() - 1.0) <= 1e-9, "autodiff", "jet_eval direction must have unit norm");
    BoundNet bn = bind(tp, net);
    TapedJet j = taped_forward_jet(tp, bn, MatrixXd(x), MatrixXd(dir), true);
    std::vector<Jet2> out;
    for (int k = 0; k < net.output_dim; ++k)
        out.push_back(Jet2{tp.block(j.v, k, 0, 1, 1), tp.block(j.d1, k, 0, 1, 1),
                           tp.block(j.d2, k, 0, 1, 1)});
    return out;
}

// ---- Fourier feature embedding ----

/// output = [sin(2 pi B x); cos(2 pi B x)], B fixed at init, never trained.
struct FourierEmbedding {
    MatrixXd B;  // m x d
    int in_dim() const { return int(B.cols()); }
    int out_dim() const { return 2 * int(B.rows()); }
};

inline FourierEmbedding init_fourier(int m, int d, double sigma, uint64_t seed) {
    require(m > 0 && d > 0, "config", "fourier embedding dims must be positive");
    FourierEmbedding emb;
    emb.B.resize(m, d);
    Rng rng(seed);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < d; ++j) emb.B(i, j) = sigma * rng.normal();
    return emb;
}

inline MatrixXd fourier_embed(const FourierEmbedding& emb, const MatrixXd& X) {
    require(X.rows() == emb.in_dim(), "shape", "fourier_embed input dim");
    MatrixXd phase = 2.0 * M_PI * emb.B * X;
    MatrixXd out(emb.out_dim(), X.cols());
    out.topRows(emb.B.rows()) = phase.array().sin();
    out.bottomRows(emb.B.rows()) = phase.array().cos();
    return out;
}

/// Jets of the embedding along per-column directions; everything here is
/// constant with respect to trainable parameters.
inline JetMats fourier_embed_jet(const FourierEmbedding& emb, const MatrixXd& X,
                                 const MatrixXd& D1, bool second) {
    MatrixXd phase = 2.0 * M_PI * emb.B * X;
    MatrixXd dphase = 2.0 * M_PI * emb.B * D1;
    MatrixXd s = phase.array().sin(), c = phase.array().cos();
    const int m = int(emb.B.rows());
    JetMats j;
    j.v.resize(2 * m, X.cols());
    j.v.topRows(m) = s;
    j.v.bottomRows(m) = c;
    j.d1.resize(2 * m, X.cols());
    j.d1.topRows(m) = c.array() * dphase.array();
    j.d1.bottomRows(m) = -s.array() * dphase.array();
    if (second) {
        j.d2.resize(2 * m, X.cols());
        j.d2.topRows(m) = -s.array() * dphase.array().square();
        j.d2.bottomRows(m) = -c.array() * dphase.array().square();
    }
    return j;
}

}  // namespace ptpi
