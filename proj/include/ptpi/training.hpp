#pragma once

// Loss assembly (data + latent + interior/boundary residuals), the Adam
// optimizer, frozen-trunk caches, and the staged training pipeline:
// trunk pretrain -> frozen-trunk branch pretrain -> joint fine-tune,
// plus the alternative strategies (vanilla data pretrain, from-scratch
// physics training, and the data-only baseline).

#include "ptpi/model.hpp"
#include "ptpi/sampling.hpp"

#include <chrono>
#include <functional>
#include <iostream>

namespace ptpi {

struct LossWeights {
    double w_data = 0.5;    // full-field reconstruction
    double w_latent = 0.5;  // latent consistency
    VectorXd w_interior;    // per channel
    VectorXd w_boundary;    // per boundary condition kind
    double w_ic = 0.0;
    // Terms enter the total as per-element means by default; with sums each
    // term is scaled by its element count, which shifts the relative
    // leverage of data and physics points.
    bool sum_convention = false;

    void validate(int C) const {
        require(w_data >= 0 && w_latent >= 0 && w_ic >= 0, "config",
                "loss weights must be non-negative");
        require(int(w_interior.size()) == C, "config",
                "interior weight needs one entry per channel");
        require(w_interior.minCoeff() >= 0 && w_boundary.minCoeff() >= 0, "config",
                "loss weights must be non-negative");
        require(w_data > 0 || w_interior.maxCoeff() > 0, "config",
                "at least one of the data or interior weights must be positive");
    }
};

inline LossWeights make_weights(double w_data, double w_latent, double w_interior,
                                double w_boundary, int C = 1, double w_ic = 0.0) {
    LossWeights w;
    w.w_data = w_data;
    w.w_latent = w_latent;
    w.w_interior = VectorXd::Constant(C, w_interior);
    w.w_boundary = VectorXd::Constant(1, w_boundary);
    w.w_ic = w_ic;
    return w;
}

// ---- Adam over flat parameter views ----

struct ParamSet {
    struct Entry {
        double* data;
        Eigen::Index size;
        DenseNet* owner;
    };
    std::vector<Entry> entries;
};

/// Flat views of every trainable parameter, in net order, W then b per
/// layer. This order matches the leaf order of an assembled loss.
inline ParamSet trainable_params(const std::vector<DenseNet*>& nets) {
    ParamSet ps;
    for (DenseNet* net : nets) {
        if (!net->trainable) continue;
        for (int l = 0; l < net->layers(); ++l) {
            ps.entries.push_back({net->W[l].data(), net->W[l].size(), net});
            ps.entries.push_back({net->b[l].data(), net->b[l].size(), net});
        }
    }
    return ps;
}

struct AdamState {
    std::vector<VectorXd> m, v;
    long step = 0;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

inline AdamState adam_init(const ParamSet& ps) {
    AdamState st;
    for (const auto& e : ps.entries) {
        st.m.push_back(VectorXd::Zero(e.size));
        st.v.push_back(VectorXd::Zero(e.size));
    }
    return st;
}

/// Bias-corrected Adam update with optional global-norm gradient clipping.
inline void adam_step(AdamState& st, const ParamSet& ps, std::vector<MatrixXd>& grads,
                      double lr, double clip_norm = 0.0) {
    require(grads.size() == ps.entries.size(), "shape", "adam gradient count mismatch");
    double norm_sq = 0.0;
    for (const MatrixXd& g : grads) {
        require(g.allFinite(), "diverged-gradient", "non-finite gradient in adam step");
        norm_sq += g.squaredNorm();
    }
    if (clip_norm > 0.0 && norm_sq > clip_norm * clip_norm) {
        double scale = clip_norm / std::sqrt(norm_sq);
        for (MatrixXd& g : grads) g *= scale;
    }
    ++st.step;
    double c1 = 1.0 - std::pow(st.beta1, double(st.step));
    double c2 = 1.0 - std::pow(st.beta2, double(st.step));
    for (size_t i = 0; i < grads.size(); ++i) {
        const auto& e = ps.entries[i];
        require(grads[i].size() == e.size, "shape", "adam gradient shape mismatch");
        Eigen::Map<VectorXd> theta(e.data, e.size);
        Eigen::Map<const VectorXd> g(grads[i].data(), e.size);
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g.cwiseProduct(g);
        theta -= (lr / c1) * (st.m[i].array() / ((st.v[i].array() / c2).sqrt() + st.eps)).matrix();
    }
    for (const auto& e : ps.entries) e.owner->bump();
}

// ---- batches and worksets ----

struct SupBatch {
    MatrixXd inputs_raw;   // (p[+1]) x B, physical units
    MatrixXd fields_norm;  // (N_h*C) x B
    MatrixXd qpod;         // (N*C) x B, V^T fields_norm
};

struct ResBatch {
    MatrixXd mu_t;                             // (p[+1]) x B, physical units
    std::vector<MatrixXd> boundary;            // per sample, d x n_b (mu-dependent curves)
    std::vector<MatrixXd> boundary_trunk;      // frozen-trunk values at those points
};

/// Fixed spatial data of one training stage.
struct Workset {
    MatrixXd interior;        // d x N_y, strictly inside Omega
    MatrixXd boundary_fixed;  // d x N_b for box problems; empty otherwise
};

inline Workset make_workset(const PDEProblem& problem, Stage stage, const MatrixXd& mesh,
                            int finetune_interior, uint64_t seed) {
    Workset w;
    w.interior = collocation_interior(problem, stage, mesh, finetune_interior, seed);
    if (problem.kind != ProblemKind::Eikonal)
        w.boundary_fixed = boundary_points(problem, VectorXd(), mesh, 0);
    return w;
}

/// Frozen-trunk precomputation over a workset: trunk values and spatial
/// derivatives at the collocation points plus the trunk-at-mesh matrix,
/// reused as constants by every branch-pretrain step.
struct FrozenTrunkCache {
    MatrixXd mesh_value;                // (N*C) x N_h
    MatrixXd interior_value;            // (N*C) x N_y
    std::vector<MatrixXd> interior_d1;  // per dim
    std::vector<MatrixXd> interior_d2;  // per dim (time-dependent problems)
    MatrixXd boundary_fixed_value;      // (N*C) x N_b
    uint64_t trunk_version = ~0ull;
};

inline FrozenTrunkCache precompute_frozen_trunk(const PtpiModel& m, const Workset& ws) {
    require(!m.trunk.trainable, "state", "frozen-trunk cache requires a frozen trunk");
    FrozenTrunkCache cache;
    cache.mesh_value = trunk_values(m, MatrixXd(m.mesh.transpose()));
    bool second = !m.problem.stationary;
    TrunkJets j = trunk_jets(m, ws.interior, second);
    cache.interior_value = std::move(j.value);
    cache.interior_d1 = std::move(j.d1);
    cache.interior_d2 = std::move(j.d2);
    if (ws.boundary_fixed.size())
        cache.boundary_fixed_value = trunk_values(m, ws.boundary_fixed);
    cache.trunk_version = m.trunk.version;
    return cache;
}

/// Mu-dependent boundary collocation for a set of residual samples, plus
/// (optionally) frozen-trunk values at those points.
inline void residual_boundaries(const PtpiModel& m, const MatrixXd& samples, int boundary_count,
                                std::vector<MatrixXd>& points_out,
                                std::vector<MatrixXd>* trunk_values_out) {
    points_out.clear();
    if (trunk_values_out) trunk_values_out->clear();
    if (m.problem.kind != ProblemKind::Eikonal) return;
    for (int j = 0; j < samples.cols(); ++j) {
        MatrixXd b = boundary_points(m.problem, samples.col(j).head(m.problem.p), m.mesh,
                                     boundary_count);
        if (trunk_values_out) trunk_values_out->push_back(trunk_values(m, b));
        points_out.push_back(std::move(b));
    }
}

// ---- loss assembly ----

struct LossBreakdown {
    double data = 0, latent = 0, interior = 0, boundary = 0, ic = 0, total = 0;
};

enum class LossMode : uint8_t {
    Full,        // data + latent + physics
    DataField,   // full-field data loss only (joint data pretraining)
    DataReduced  // reduced-coefficient data loss + latent (data-only baseline)
};

namespace traindetail {

struct TapedTrunkFields {
    ad::Var mesh_value;
    ad::Var interior_value;
    std::vector<ad::Var> interior_d1, interior_d2;
    ad::Var boundary_fixed_value;
    std::vector<ad::Var> boundary_per_sample;
};

// Trunk inputs after normalization and optional Fourier embedding, with
// first/second directional seeds per spatial dimension.
struct TrunkSeeds {
    MatrixXd X;
    std::vector<MatrixXd> D1, D2;
};

inline TrunkSeeds trunk_seeds(const PtpiModel& m, const MatrixXd& points, bool second) {
    TrunkSeeds s;
    MatrixXd Xn = m.norm.map_x(points);
    VectorXd ax = m.norm.x_factors();
    if (!m.fourier) {
        s.X = Xn;
        for (int dim = 0; dim < m.problem.d; ++dim) {
            MatrixXd D = MatrixXd::Zero(Xn.rows(), Xn.cols());
            D.row(dim).setConstant(ax(dim));
            s.D1.push_back(std::move(D));
            if (second) s.D2.push_back(MatrixXd());
        }
        return s;
    }
    for (int dim = 0; dim < m.problem.d; ++dim) {
        MatrixXd D = MatrixXd::Zero(Xn.rows(), Xn.cols());
        D.row(dim).setConstant(ax(dim));
        JetMats je = fourier_embed_jet(*m.fourier, Xn, D, second);
        if (dim == 0) s.X = je.v;
        s.D1.push_back(std::move(je.d1));
        if (second) s.D2.push_back(std::move(je.d2));
    }
    return s;
}

inline ad::Var taped_trunk_values(ad::Tape& tp, const PtpiModel& m, const BoundNet& trunk,
                                  const MatrixXd& points) {
    TrunkSeeds s = trunk_seeds(m, points, false);
    return taped_forward(tp, trunk, s.X);
}

inline TapedTrunkFields live_trunk_fields(ad::Tape& tp, const PtpiModel& m,
                                          const BoundNet& trunk, const Workset& ws,
                                          const ResBatch& res, bool need_physics) {
    TapedTrunkFields f;
    f.mesh_value = taped_trunk_values(tp, m, trunk, MatrixXd(m.mesh.transpose()));
    if (!need_physics) return f;
    bool second = !m.problem.stationary;
    TrunkSeeds is = trunk_seeds(m, ws.interior, second);
    TapedJetMulti j = taped_forward_jet_multi(tp, trunk, is.X, is.D1, second, is.D2);
    f.interior_value = j.v;
    f.interior_d1 = j.d1;
    f.interior_d2 = j.d2;
    if (ws.boundary_fixed.size())
        f.boundary_fixed_value = taped_trunk_values(tp, m, trunk, ws.boundary_fixed);
    if (!res.boundary.empty()) {
        int total = 0;
        for (const MatrixXd& b : res.boundary) total += int(b.cols());
        MatrixXd all(m.problem.d, total);
        int at = 0;
        for (const MatrixXd& b : res.boundary) {
            all.middleCols(at, int(b.cols())) = b;
            at += int(b.cols());
        }
        ad::Var values = taped_trunk_values(tp, m, trunk, all);
        at = 0;
        for (const MatrixXd& b : res.boundary) {
            f.boundary_per_sample.push_back(
                tp.block(values, 0, at, m.N * m.channels(), int(b.cols())));
            at += int(b.cols());
        }
    }
    return f;
}

inline TapedTrunkFields cached_trunk_fields(ad::Tape& tp, const PtpiModel& m,
                                            const FrozenTrunkCache& cache, const ResBatch& res,
                                            bool need_physics) {
    require(cache.trunk_version == m.trunk.version, "state",
            "frozen-trunk cache is stale; recompute after trunk updates");
    TapedTrunkFields f;
    f.mesh_value = tp.constant(cache.mesh_value);
    if (!need_physics) return f;
    f.interior_value = tp.constant(cache.interior_value);
    for (const MatrixXd& g : cache.interior_d1) f.interior_d1.push_back(tp.constant(g));
    for (const MatrixXd& g : cache.interior_d2) f.interior_d2.push_back(tp.constant(g));
    if (cache.boundary_fixed_value.size())
        f.boundary_fixed_value = tp.constant(cache.boundary_fixed_value);
    for (const MatrixXd& b : res.boundary_trunk)
        f.boundary_per_sample.push_back(tp.constant(b));
    return f;
}

struct TapedBranch {
    ad::Var z;   // reduced output, n x B
    ad::Var q;   // decoder output, (N*C) x B
    ad::Var dq;  // time derivative of q (when requested)
    bool has_dq = false;
};

inline TapedBranch taped_branch(ad::Tape& tp, const PtpiModel& m, const BoundNet& reduced,
                                const BoundNet& decoder, const MatrixXd& inputs_raw,
                                bool with_dt) {
    MatrixXd in = branch_inputs(m, inputs_raw);
    TapedBranch out;
    if (!with_dt) {
        out.z = taped_forward(tp, reduced, in);
        out.q = taped_forward(tp, decoder, out.z);
        return out;
    }
    MatrixXd D1 = MatrixXd::Zero(in.rows(), in.cols());
    D1.row(in.rows() - 1).setConstant(m.norm.t_factor());
    TapedJet jr = taped_forward_jet(tp, reduced, in, D1, false);
    out.z = jr.v;
    TapedJet jd = taped_forward_jet(tp, decoder, jr.v, jr.d1, false);
    out.q = jd.v;
    out.dq = jd.d1;
    out.has_dq = true;
    return out;
}

// Per-channel mean squared difference between the reconstructed mesh field
// and the normalized snapshot batch.
inline ad::Var field_data_loss(ad::Tape& tp, const PtpiModel& m, ad::Var mesh_value,
                               ad::Var q, const MatrixXd& fields_norm) {
    const int C = m.channels();
    const int B = int(fields_norm.cols());
    if (C == 1) {
        ad::Var field = tp.matmul_ta(mesh_value, q);
        ad::Var diff = tp.sub(field, tp.constant(fields_norm));
        return tp.mean(tp.mul(diff, diff));
    }
    ad::Var acc;
    for (int c = 0; c < C; ++c) {
        ad::Var Tc = tp.block(mesh_value, c * m.N, 0, m.N, m.N_h);
        ad::Var qc = tp.block(q, c * m.N, 0, m.N, B);
        ad::Var field = tp.matmul_ta(Tc, qc);
        ad::Var diff = tp.sub(field, tp.constant(MatrixXd(fields_norm.middleRows(c * m.N_h, m.N_h))));
        ad::Var sq = tp.sum(tp.mul(diff, diff));
        acc = c == 0 ? sq : tp.add(acc, sq);
    }
    return tp.scale(acc, 1.0 / double(m.N_h * C * B));
}

}  // namespace traindetail

/// Tape handles of one assembled training step. Leaf order follows
/// trainable_params() over [trunk, encoder, reduced, decoder].
struct AssembledLoss {
    ad::Var loss;
    std::vector<ad::Var> leaves;
    LossBreakdown breakdown;
};

inline void append_leaves(std::vector<ad::Var>& leaves, const BoundNet& bn) {
    if (bn.net == nullptr || !bn.net->trainable) return;
    for (size_t l = 0; l < bn.W.size(); ++l) {
        leaves.push_back(bn.W[l]);
        leaves.push_back(bn.b[l]);
    }
}

/// The blended data+physics loss of one step, recorded on the given tape.
/// When a frozen-trunk cache is supplied the residuals are assembled from
/// precomputed constants and no spatial differentiation happens; otherwise
/// live jets are recorded through the trunk.
inline AssembledLoss total_loss(ad::Tape& tp, PtpiModel& m, LossMode mode, const SupBatch& sup,
                                const ResBatch& res, const LossWeights& w, const Workset& ws,
                                const FrozenTrunkCache* cache) {
    const int C = m.channels();
    w.validate(C);
    AssembledLoss out;

    bool need_physics = mode == LossMode::Full && res.mu_t.cols() > 0 &&
                        (w.w_interior.maxCoeff() > 0 || w.w_boundary.maxCoeff() > 0 ||
                         w.w_ic > 0);
    if (need_physics)
        require(C == 1, "config", "residual assembly is defined for scalar problems");
    bool need_trunk = mode != LossMode::DataReduced;

    BoundNet bn_trunk;
    BoundNet bn_enc = bind(tp, m.encoder);
    BoundNet bn_red = bind(tp, m.reduced);
    BoundNet bn_dec = bind(tp, m.decoder);
    traindetail::TapedTrunkFields tf;
    if (need_trunk) {
        if (cache) {
            tf = traindetail::cached_trunk_fields(tp, m, *cache, res, need_physics);
        } else {
            bn_trunk = bind(tp, m.trunk);
            tf = traindetail::live_trunk_fields(tp, m, bn_trunk, ws, res, need_physics);
        }
    }

    auto apply_convention = [&](ad::Var term, double count) {
        return w.sum_convention ? tp.scale(term, count) : term;
    };

    traindetail::TapedBranch br =
        traindetail::taped_branch(tp, m, bn_red, bn_dec, sup.inputs_raw, false);
    ad::Var L_data;
    if (mode == LossMode::DataReduced) {
        ad::Var diff = tp.sub(br.q, tp.constant(sup.qpod));
        L_data = apply_convention(tp.mean(tp.mul(diff, diff)), double(sup.qpod.size()));
    } else {
        L_data = apply_convention(
            traindetail::field_data_loss(tp, m, tf.mesh_value, br.q, sup.fields_norm),
            double(sup.fields_norm.size()));
    }
    out.breakdown.data = tp.scalar(L_data);
    ad::Var total = tp.scale(L_data, w.w_data);

    if (mode != LossMode::DataField) {
        ad::Var enc = taped_forward(tp, bn_enc, sup.qpod);
        ad::Var ldiff = tp.sub(enc, br.z);
        ad::Var L_latent =
            apply_convention(tp.mean(tp.mul(ldiff, ldiff)), double(tp.value(br.z).size()));
        out.breakdown.latent = tp.scalar(L_latent);
        total = tp.add(total, tp.scale(L_latent, w.w_latent));
    }

    if (need_physics) {
        bool with_dt = !m.problem.stationary;
        traindetail::TapedBranch rbr =
            traindetail::taped_branch(tp, m, bn_red, bn_dec, res.mu_t, with_dt);
        const double s = m.norm.out_scale(0);
        const int N_y = int(ws.interior.cols());
        const int B = int(res.mu_t.cols());

        ad::Var R;
        if (m.problem.kind == ProblemKind::Eikonal) {
            ad::Var Ux = tp.scale(tp.matmul_ta(tf.interior_d1[0], rbr.q), s);
            ad::Var Uy = tp.scale(tp.matmul_ta(tf.interior_d1[1], rbr.q), s);
            ad::Var g2 = tp.add(tp.mul(Ux, Ux), tp.mul(Uy, Uy));
            double eps = m.problem.eikonal_eps;
            R = tp.shift(tp.sqrt(tp.shift(g2, eps * eps)), -1.0);
        } else {
            ad::Var D = tp.scale(tp.matmul_ta(tf.interior_value, rbr.dq), s);
            ad::Var U = tp.scale(tp.matmul_ta(tf.interior_value, rbr.q), s);
            ad::Var Ux = tp.scale(tp.matmul_ta(tf.interior_d1[0], rbr.q), s);
            ad::Var lap = tp.add(tp.matmul_ta(tf.interior_d2[0], rbr.q),
                                 tp.matmul_ta(tf.interior_d2[1], rbr.q));
            ad::Var L = tp.scale(lap, s);
            MatrixXd A(N_y, B), F(N_y, B);
            for (int j = 0; j < B; ++j) {
                double t = res.mu_t(m.problem.p, j);
                double a = adr_advection(t);
                VectorXd mu = res.mu_t.col(j).head(m.problem.p);
                for (int i = 0; i < N_y; ++i) {
                    A(i, j) = a;
                    F(i, j) = adr_forcing(ws.interior.col(i), mu, t);
                }
            }
            R = tp.sub(tp.add(tp.add(D, tp.scale(L, -0.05)), tp.scale(U, 0.05)),
                       tp.sub(tp.constant(F), tp.mul(tp.constant(A), Ux)));
        }
        ad::Var L_interior =
            apply_convention(tp.mean(tp.mul(R, R)), double(tp.value(R).size()));
        out.breakdown.interior = tp.scalar(L_interior);
        total = tp.add(total, tp.scale(L_interior, w.w_interior(0)));

        ad::Var L_boundary;
        if (m.problem.kind == ProblemKind::Eikonal) {
            require(int(tf.boundary_per_sample.size()) == B, "state",
                    "per-sample boundary values out of sync with the residual batch");
            ad::Var acc;
            int total_pts = 0;
            for (int j = 0; j < B; ++j) {
                ad::Var qj = tp.block(rbr.q, 0, j, m.N * C, 1);
                ad::Var ub = tp.scale(tp.matmul_ta(tf.boundary_per_sample[j], qj), s);
                ad::Var sq = tp.sum(tp.mul(ub, ub));
                acc = (j == 0) ? sq : tp.add(acc, sq);
                total_pts += int(tp.value(ub).rows());
            }
            L_boundary = apply_convention(tp.scale(acc, 1.0 / double(total_pts)),
                                          double(total_pts));
        } else {
            ad::Var ub = tp.scale(tp.matmul_ta(tf.boundary_fixed_value, rbr.q), s);
            L_boundary = apply_convention(tp.mean(tp.mul(ub, ub)),
                                          double(tp.value(ub).size()));
        }
        out.breakdown.boundary = tp.scalar(L_boundary);
        total = tp.add(total, tp.scale(L_boundary, w.w_boundary(0)));

        if (w.w_ic > 0 && !m.problem.stationary) {
            MatrixXd ic_inputs = res.mu_t;
            ic_inputs.row(m.problem.p).setConstant(m.problem.t_min);
            traindetail::TapedBranch ibr =
                traindetail::taped_branch(tp, m, bn_red, bn_dec, ic_inputs, false);
            // u0 = 0 for the shipped time-dependent problem
            ad::Var uic = tp.scale(tp.matmul_ta(tf.interior_value, ibr.q), s);
            ad::Var L_ic =
                apply_convention(tp.mean(tp.mul(uic, uic)), double(tp.value(uic).size()));
            out.breakdown.ic = tp.scalar(L_ic);
            total = tp.add(total, tp.scale(L_ic, w.w_ic));
        }
    }

    out.loss = total;
    out.breakdown.total = tp.scalar(total);
    require(std::isfinite(out.breakdown.total), "diverged-loss",
            "non-finite total loss (data=" + std::to_string(out.breakdown.data) +
                " latent=" + std::to_string(out.breakdown.latent) +
                " interior=" + std::to_string(out.breakdown.interior) +
                " boundary=" + std::to_string(out.breakdown.boundary) + ")");

    append_leaves(out.leaves, bn_trunk);
    append_leaves(out.leaves, bn_enc);
    append_leaves(out.leaves, bn_red);
    append_leaves(out.leaves, bn_dec);
    return out;
}

/// Trunk-interpolation targets: mode values per mesh vertex, channel-major
/// rows, one column per vertex.
inline MatrixXd trunk_targets(const PtpiModel& m) {
    MatrixXd T(m.N * m.channels(), m.N_h);
    for (int c = 0; c < m.channels(); ++c)
        T.middleRows(c * m.N, m.N) =
            m.pod.V.block(c * m.N_h, c * m.N, m.N_h, m.N).transpose();
    return T;
}

/// Trunk-interpolation loss over a row batch: mean squared mode error.
inline double trunk_pretrain_loss(const PtpiModel& m, const MatrixXd& targets,
                                  const std::vector<int>& rows) {
    require(!rows.empty(), "config", "trunk loss needs a non-empty batch");
    MatrixXd X(m.problem.d, int(rows.size()));
    MatrixXd T(m.N * m.channels(), int(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        X.col(int(i)) = m.mesh.row(rows[i]).transpose();
        T.col(int(i)) = targets.col(rows[i]);
    }
    MatrixXd v = trunk_values(m, X);
    return (v - T).array().square().mean();
}

// ---- model construction ----

struct ModelSpec {
    int N = 2, n = 2;
    std::vector<int> trunk_hidden{50, 50, 50, 50};
    Act trunk_act = Act::Elu;
    std::vector<int> encoder_hidden{50, 50, 50, 50};
    Act encoder_act = Act::Elu;
    std::vector<int> reduced_hidden{50, 50, 50, 50};
    Act reduced_act = Act::Elu;
    std::vector<int> decoder_hidden{50, 50, 50, 50};
    Act decoder_act = Act::Elu;
    int fourier_m = 0;  // 0 disables the embedding
    double fourier_sigma = 1.0;
    PodMethod pod_method = PodMethod::Exact;
    uint64_t seed = 1;
};

inline std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w{in};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

/// POD weight |P_sup x T_sup| / (N_s N_t); degenerate directions count 1.
inline double pod_weight(const SnapshotSet& data, bool stationary) {
    double vol = 1.0;
    for (int q = 0; q < data.params.cols(); ++q) {
        double span = data.params.col(q).maxCoeff() - data.params.col(q).minCoeff();
        if (span > 0) vol *= span;
    }
    if (!stationary && data.n_times() > 1) {
        double span = data.times.maxCoeff() - data.times.minCoeff();
        if (span > 0) vol *= span;
    }
    return vol / double(data.n_cols());
}

/// Builds the composite model from supervised data: normalization statistics,
/// per-channel POD basis (block-diagonal across channels), and fresh nets.
/// Branch inputs are normalized over the residual box when one is supplied,
/// so extrapolation targets stay inside the normalized range.
inline PtpiModel build_model(const PDEProblem& problem, const SnapshotSet& data,
                             const ModelSpec& spec, const VectorXd& res_lo = VectorXd(),
                             const VectorXd& res_hi = VectorXd()) {
    data.validate();
    PtpiModel m;
    m.problem = problem;
    m.N = spec.N;
    m.n = spec.n;
    m.set_mesh(data.coords);
    const int C = problem.C;

    m.norm.x_lo = problem.x_lo;
    m.norm.x_hi = problem.x_hi;
    const int bi = problem.p + (problem.stationary ? 0 : 1);
    if (res_lo.size()) {
        require(int(res_lo.size()) == bi && int(res_hi.size()) == bi, "config",
                "residual bounds must match the branch input dimension");
        m.norm.in_lo = res_lo;
        m.norm.in_hi = res_hi;
    } else {
        m.norm.in_lo.resize(bi);
        m.norm.in_hi.resize(bi);
        for (int q = 0; q < problem.p; ++q) {
            m.norm.in_lo(q) = data.params.col(q).minCoeff();
            m.norm.in_hi(q) = data.params.col(q).maxCoeff();
        }
        if (!problem.stationary) {
            m.norm.in_lo(problem.p) = data.times.minCoeff();
            m.norm.in_hi(problem.p) = data.times.maxCoeff();
        }
    }
    for (int q = 0; q < bi; ++q)
        if (m.norm.in_hi(q) <= m.norm.in_lo(q)) m.norm.in_hi(q) = m.norm.in_lo(q) + 1.0;

    m.norm.out_scale.resize(C);
    for (int c = 0; c < C; ++c) {
        double s = data.fields.middleRows(c * m.N_h, m.N_h).cwiseAbs().maxCoeff();
        m.norm.out_scale(c) = s > 0 ? s : 1.0;
    }

    MatrixXd fields_norm = data.fields;
    for (int c = 0; c < C; ++c)
        fields_norm.middleRows(c * m.N_h, m.N_h) /= m.norm.out_scale(c);
    double w = pod_weight(data, problem.stationary);
    m.pod.V = MatrixXd::Zero(m.N_h * C, spec.N * C);
    m.pod.sigma.resize(spec.N * C);
    m.pod.weight = w;
    m.pod.discarded_energy = 0.0;
    for (int c = 0; c < C; ++c) {
        PODBasis pc = pod_basis(fields_norm.middleRows(c * m.N_h, m.N_h), spec.N, w,
                                spec.pod_method, spec.seed + 90 + c);
        require(pc.rank() == spec.N, "config", "snapshot data cannot support the POD rank");
        m.pod.V.block(c * m.N_h, c * spec.N, m.N_h, spec.N) = pc.V;
        m.pod.sigma.segment(c * spec.N, spec.N) = pc.sigma;
        m.pod.discarded_energy += pc.discarded_energy;
    }

    int trunk_in = problem.d;
    if (spec.fourier_m > 0) {
        m.fourier = init_fourier(spec.fourier_m, problem.d, spec.fourier_sigma, spec.seed + 50);
        trunk_in = m.fourier->out_dim();
    }
    m.trunk = init_dense(with_io(trunk_in, spec.trunk_hidden, spec.N * C), spec.trunk_act,
                         spec.seed + 1);
    m.encoder = init_dense(with_io(spec.N * C, spec.encoder_hidden, spec.n), spec.encoder_act,
                           spec.seed + 2);
    m.reduced = init_dense(with_io(bi, spec.reduced_hidden, spec.n), spec.reduced_act,
                           spec.seed + 3);
    m.decoder = init_dense(with_io(spec.n, spec.decoder_hidden, spec.N * C), spec.decoder_act,
                           spec.seed + 4);
    validate_dims(m);
    return m;
}

// ---- pipeline ----

struct EpochLog {
    int epoch = 0;  // 0 marks the evaluation at stage start
    std::string stage;
    LossBreakdown terms;  // unweighted term means over the epoch's steps
    double total = 0.0;   // weighted sum of the logged term means
    double val_data = std::numeric_limits<double>::quiet_NaN();
    double val_rel = std::numeric_limits<double>::quiet_NaN();
};

struct TrainHistory {
    std::vector<EpochLog> rows;

    const EpochLog* stage_start(const std::string& stage) const {
        for (const auto& r : rows)
            if (r.stage == stage && r.epoch == 0) return &r;
        return nullptr;
    }
};

struct PipelineConfig {
    std::string strategy = "ptpi";  // ptpi | vanilla | none | pod-dl-rom
    int trunk_epochs = 0;
    double trunk_lr = 1e-3;
    int trunk_batch = 10;
    int branch_epochs = 0;
    double branch_lr = 3e-4;
    int finetune_epochs = 0;
    double finetune_lr = 1e-4;
    int sup_batch = 1;
    int res_batch = 10;
    int resample_every = 5;
    int n_res = 1000;
    int finetune_interior = 1000;
    int boundary_count = 100;
    double validation_fraction = 0.1;
    LossWeights weights;
    VectorXd res_lo, res_hi;  // residual sampling box over (mu[,t])
    uint64_t seed = 1;
    bool clip_gradients = true;
    double clip_norm = 10.0;
    // Redraw the uniform interior collocation points together with every
    // residual-set resample during fine-tuning (pretraining always keeps the
    // mesh points). Fresh points spread the residual signal over the domain
    // instead of overfitting one fixed set.
    bool resample_collocation = true;
    bool verbose = false;
    std::function<void(const std::string&, PtpiModel&)> on_stage_end;  // not serialized

    void validate() const {
        require(validation_fraction >= 0.1 && validation_fraction <= 0.2, "config",
                "validation fraction must lie in [0.1, 0.2]");
        require(strategy == "ptpi" || strategy == "vanilla" || strategy == "none" ||
                    strategy == "pod-dl-rom",
                "config", "unknown strategy '" + strategy + "'");
        require(sup_batch >= 1 && res_batch >= 1 && resample_every >= 1, "config",
                "batch sizes and resample period must be positive");
    }
};

struct TrainResult {
    TrainHistory history;
    double selected_val_rel = std::numeric_limits<double>::quiet_NaN();
    double trunk_max_row_error = std::numeric_limits<double>::quiet_NaN();
    double branch_epoch_seconds = 0.0;    // mean wall time per branch-pretrain epoch
    double finetune_epoch_seconds = 0.0;  // mean wall time per fine-tune epoch
};

namespace traindetail {

struct SupData {
    MatrixXd inputs;  // (p[+1]) x n_cols
    MatrixXd fields;  // normalized
    MatrixXd qpod;
    std::vector<int> train_cols, val_cols;
};

inline SupData prepare_supervised(const PtpiModel& m, const SnapshotSet& data,
                                  double val_fraction, uint64_t seed) {
    SupData s;
    const int cols = data.n_cols();
    s.inputs.resize(m.branch_input_dim(), cols);
    for (int j = 0; j < data.n_params(); ++j)
        for (int k = 0; k < data.n_times(); ++k) {
            int col = data.col_index(j, k);
            s.inputs.col(col).head(m.problem.p) = data.params.row(j).transpose();
            if (!m.problem.stationary) s.inputs(m.problem.p, col) = data.times(k);
        }
    s.fields = data.fields;
    for (int c = 0; c < m.channels(); ++c)
        s.fields.middleRows(c * m.N_h, m.N_h) /= m.norm.out_scale(c);
    s.qpod = m.pod.V.transpose() * s.fields;

    std::vector<int> order(cols);
    for (int i = 0; i < cols; ++i) order[i] = i;
    Rng rng(seed);
    for (int i = cols - 1; i > 0; --i) {
        int j = int(rng.uniform() * double(i + 1));
        std::swap(order[i], order[std::min(j, i)]);
    }
    int n_val = std::max(1, int(std::lround(val_fraction * cols)));
    n_val = std::min(n_val, cols - 1);
    s.val_cols.assign(order.begin(), order.begin() + n_val);
    s.train_cols.assign(order.begin() + n_val, order.end());
    return s;
}

inline SupBatch make_sup_batch(const SupData& s, const std::vector<int>& cols) {
    SupBatch b;
    b.inputs_raw.resize(s.inputs.rows(), int(cols.size()));
    b.fields_norm.resize(s.fields.rows(), int(cols.size()));
    b.qpod.resize(s.qpod.rows(), int(cols.size()));
    for (size_t i = 0; i < cols.size(); ++i) {
        b.inputs_raw.col(int(i)) = s.inputs.col(cols[i]);
        b.fields_norm.col(int(i)) = s.fields.col(cols[i]);
        b.qpod.col(int(i)) = s.qpod.col(cols[i]);
    }
    return b;
}

// Normalized mesh predictions for model selection: mean squared error and
// mean per-column relative error over the given columns.
inline std::pair<double, double> validation_metrics(const PtpiModel& m, const SupData& s,
                                                    const std::vector<int>& cols) {
    if (cols.empty()) return {0.0, 0.0};
    double mse = 0.0, rel = 0.0;
    const int C = m.channels();
    for (int col : cols) {
        VectorXd in = s.inputs.col(col);
        VectorXd mu = in.head(m.problem.p);
        double t = m.problem.stationary ? 0.0 : in(m.problem.p);
        auto [q, dq] = branch_coefficients(m, mu, t, false);
        VectorXd pred(m.N_h * C);
        if (m.use_trunk) {
            const MatrixXd& T = mesh_modes(m);
            for (int c = 0; c < C; ++c)
                pred.segment(c * m.N_h, m.N_h) =
                    T.middleRows(c * m.N, m.N).transpose() * q.segment(c * m.N, m.N);
        } else {
            pred = m.pod.V * q;
        }
        VectorXd diff = pred - s.fields.col(col);
        mse += diff.squaredNorm() / double(pred.size());
        double den = s.fields.col(col).norm();
        rel += den > 0 ? diff.norm() / den : 0.0;
    }
    return {mse / double(cols.size()), rel / double(cols.size())};
}

struct NetSnapshot {
    std::vector<MatrixXd> W;
    std::vector<VectorXd> b;
};

inline NetSnapshot snapshot(const DenseNet& n) { return {n.W, n.b}; }
inline void restore(DenseNet& n, const NetSnapshot& s) {
    n.W = s.W;
    n.b = s.b;
    n.bump();
}

struct ModelSnapshot {
    NetSnapshot trunk, encoder, reduced, decoder;
};

inline ModelSnapshot snapshot(const PtpiModel& m) {
    return {snapshot(m.trunk), snapshot(m.encoder), snapshot(m.reduced), snapshot(m.decoder)};
}
inline void restore(PtpiModel& m, const ModelSnapshot& s) {
    restore(m.trunk, s.trunk);
    restore(m.encoder, s.encoder);
    restore(m.reduced, s.reduced);
    restore(m.decoder, s.decoder);
}

}  // namespace traindetail

namespace traindetail {

// The residual set is regenerated at the first epoch and then exactly every
// `period` epochs; between regenerations it is bit-stable.
inline bool resample_due(int epoch, int period) {
    return epoch > 1 && (epoch - 1) % period == 0;
}

struct ResidualPool {
    MatrixXd samples;                    // (p[+1]) x n_res
    std::vector<MatrixXd> boundary;      // per sample (eikonal)
    std::vector<MatrixXd> boundary_trunk;  // frozen-trunk values (cached stages)
    int cursor = 0;

    ResBatch next_batch(int batch) {
        ResBatch b;
        int n = int(samples.cols());
        int take = std::min(batch, n);
        b.mu_t.resize(samples.rows(), take);
        for (int i = 0; i < take; ++i) {
            int idx = (cursor + i) % n;
            b.mu_t.col(i) = samples.col(idx);
            if (!boundary.empty()) b.boundary.push_back(boundary[idx]);
            if (!boundary_trunk.empty()) b.boundary_trunk.push_back(boundary_trunk[idx]);
        }
        cursor = (cursor + take) % n;
        return b;
    }
};

inline ResidualPool make_pool(const PtpiModel& m, BoxSampler& sampler, int n_res,
                              int boundary_count, bool with_trunk_cache) {
    ResidualPool pool;
    pool.samples = sample_residual_set(sampler, n_res);
    residual_boundaries(m, pool.samples, boundary_count, pool.boundary,
                        with_trunk_cache ? &pool.boundary_trunk : nullptr);
    return pool;
}

struct StageSpec {
    std::string name;
    LossMode mode = LossMode::Full;
    bool use_cache = false;
    bool physics = true;
    int epochs = 0;
    double lr = 1e-3;
    Stage colloc = Stage::FineTune;
    bool select_best = true;
};

struct StageRuntime {
    double seconds_per_epoch = 0.0;
};

inline StageRuntime run_stage(PtpiModel& m, const StageSpec& spec, const SupData& sup,
                              const PipelineConfig& cfg, const Workset& ws_in,
                              const FrozenTrunkCache* cache, BoxSampler& res_sampler,
                              TrainHistory& history) {
    Workset ws = ws_in;
    uint64_t colloc_draw = 1;  // stream position for collocation redraws
    LossWeights w = cfg.weights;
    if (!spec.physics) {
        w.w_interior.setZero();
        w.w_boundary.setZero();
        w.w_ic = 0.0;
    }

    // match the leaf order of total_loss: trunk only when live-bound
    std::vector<DenseNet*> nets;
    bool trunk_bound = spec.mode != LossMode::DataReduced && !spec.use_cache;
    if (trunk_bound) nets.push_back(&m.trunk);
    nets.push_back(&m.encoder);
    nets.push_back(&m.reduced);
    nets.push_back(&m.decoder);
    ParamSet params = trainable_params(nets);
    AdamState adam = adam_init(params);

    ResidualPool pool;
    bool needs_pool = spec.physics && spec.mode == LossMode::Full;
    if (needs_pool) pool = make_pool(m, res_sampler, cfg.n_res, cfg.boundary_count,
                                     spec.use_cache);

    // fixed probe for the comparable stage-start evaluation
    {
        SupBatch full = make_sup_batch(sup, sup.train_cols);
        ResBatch probe;
        if (needs_pool) {
            BoxSampler probe_sampler(cfg.res_lo, cfg.res_hi, cfg.seed + 777);
            ResidualPool probe_pool = make_pool(m, probe_sampler,
                                                std::min(cfg.n_res, 100), cfg.boundary_count,
                                                spec.use_cache);
            probe = probe_pool.next_batch(std::min(cfg.n_res, 100));
        }
        ad::Tape tp;
        AssembledLoss al = total_loss(tp, m, spec.mode, full, probe, w, ws, cache);
        EpochLog log;
        log.epoch = 0;
        log.stage = spec.name;
        log.terms = al.breakdown;
        log.total = al.breakdown.total;
        auto [vd, vr] = validation_metrics(m, sup, sup.val_cols);
        log.val_data = vd;
        log.val_rel = vr;
        history.rows.push_back(log);
    }

    Rng shuffle_rng(cfg.seed + 11);
    double best_val = std::numeric_limits<double>::infinity();
    ModelSnapshot best = snapshot(m);
    bool have_best = false;

    auto t_start = std::chrono::steady_clock::now();
    std::vector<int> order = sup.train_cols;
    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        if (needs_pool && resample_due(epoch, cfg.resample_every)) {
            pool = make_pool(m, res_sampler, cfg.n_res, cfg.boundary_count, spec.use_cache);
            if (cfg.resample_collocation && spec.colloc == Stage::FineTune && !spec.use_cache)
                ws.interior = collocation_interior(m.problem, Stage::FineTune, m.mesh,
                                                   cfg.finetune_interior,
                                                   cfg.seed + 3 + 1000 * colloc_draw++);
        }

        for (int i = int(order.size()) - 1; i > 0; --i) {
            int j = int(shuffle_rng.uniform() * double(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }

        LossBreakdown acc;
        int steps = 0;
        for (size_t at = 0; at < order.size(); at += size_t(cfg.sup_batch)) {
            std::vector<int> batch_cols(order.begin() + at,
                                        order.begin() +
                                            std::min(at + size_t(cfg.sup_batch), order.size()));
            SupBatch sb = make_sup_batch(sup, batch_cols);
            ResBatch rb;
            if (needs_pool) rb = pool.next_batch(cfg.res_batch);

            ad::Tape tp;
            AssembledLoss al = total_loss(tp, m, spec.mode, sb, rb, w, ws, cache);
            std::vector<MatrixXd> grads = tp.grad(al.loss, al.leaves);
            adam_step(adam, params, grads, spec.lr,
                      cfg.clip_gradients ? cfg.clip_norm : 0.0);

            acc.data += al.breakdown.data;
            acc.latent += al.breakdown.latent;
            acc.interior += al.breakdown.interior;
            acc.boundary += al.breakdown.boundary;
            acc.ic += al.breakdown.ic;
            ++steps;
        }

        EpochLog log;
        log.epoch = epoch;
        log.stage = spec.name;
        log.terms.data = acc.data / steps;
        log.terms.latent = acc.latent / steps;
        log.terms.interior = acc.interior / steps;
        log.terms.boundary = acc.boundary / steps;
        log.terms.ic = acc.ic / steps;
        log.total = w.w_data * log.terms.data + w.w_latent * log.terms.latent +
                    (w.w_interior.size() ? w.w_interior(0) * log.terms.interior : 0.0) +
                    (w.w_boundary.size() ? w.w_boundary(0) * log.terms.boundary : 0.0) +
                    w.w_ic * log.terms.ic;
        log.terms.total = log.total;
        auto [vd, vr] = validation_metrics(m, sup, sup.val_cols);
        log.val_data = vd;
        log.val_rel = vr;
        history.rows.push_back(log);

        if (spec.select_best && vd < best_val) {
            best_val = vd;
            best = snapshot(m);
            have_best = true;
        }
        if (cfg.verbose && (epoch % 100 == 0 || epoch == spec.epochs))
            std::cerr << "[" << spec.name << "] epoch " << epoch << "/" << spec.epochs
                      << " total " << log.total << " val " << vd << "\n";
    }
    auto t_end = std::chrono::steady_clock::now();

    if (spec.select_best && have_best) restore(m, best);

    StageRuntime rt;
    if (spec.epochs > 0)
        rt.seconds_per_epoch =
            std::chrono::duration<double>(t_end - t_start).count() / double(spec.epochs);
    return rt;
}

inline double run_trunk_stage(PtpiModel& m, const PipelineConfig& cfg, TrainHistory& history) {
    MatrixXd targets = trunk_targets(m);
    std::vector<DenseNet*> nets{&m.trunk};
    ParamSet params = trainable_params(nets);
    AdamState adam = adam_init(params);
    Rng shuffle_rng(cfg.seed + 13);

    std::vector<int> order(m.N_h);
    for (int i = 0; i < m.N_h; ++i) order[i] = i;

    TrunkSeeds mesh_seeds = trunk_seeds(m, MatrixXd(m.mesh.transpose()), false);
    auto full_loss = [&]() {
        MatrixXd v = net_forward(m.trunk, mesh_seeds.X);
        return (v - targets).array().square().mean();
    };

    {
        EpochLog log;
        log.epoch = 0;
        log.stage = "trunk";
        log.terms.data = full_loss();
        log.total = log.terms.data;
        log.terms.total = log.total;
        history.rows.push_back(log);
    }

    // Adam oscillates around the plateau; keep the best full-mesh epoch.
    double best_loss = std::numeric_limits<double>::infinity();
    NetSnapshot best = snapshot(m.trunk);

    for (int epoch = 1; epoch <= cfg.trunk_epochs; ++epoch) {
        for (int i = m.N_h - 1; i > 0; --i) {
            int j = int(shuffle_rng.uniform() * double(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        for (int at = 0; at < m.N_h; at += cfg.trunk_batch) {
            int take = std::min(cfg.trunk_batch, m.N_h - at);
            MatrixXd X(mesh_seeds.X.rows(), take), T(targets.rows(), take);
            for (int i = 0; i < take; ++i) {
                X.col(i) = mesh_seeds.X.col(order[at + i]);
                T.col(i) = targets.col(order[at + i]);
            }
            ad::Tape tp;
            BoundNet bn = bind(tp, m.trunk);
            ad::Var v = taped_forward(tp, bn, X);
            ad::Var diff = tp.sub(v, tp.constant(T));
            ad::Var loss = tp.mean(tp.mul(diff, diff));
            std::vector<ad::Var> leaves;
            append_leaves(leaves, bn);
            std::vector<MatrixXd> grads = tp.grad(loss, leaves);
            adam_step(adam, params, grads, cfg.trunk_lr,
                      cfg.clip_gradients ? cfg.clip_norm : 0.0);
        }
        EpochLog log;
        log.epoch = epoch;
        log.stage = "trunk";
        log.terms.data = full_loss();
        log.total = log.terms.data;
        log.terms.total = log.total;
        history.rows.push_back(log);
        if (log.total < best_loss) {
            best_loss = log.total;
            best = snapshot(m.trunk);
        }
        if (cfg.verbose && (epoch % 500 == 0 || epoch == cfg.trunk_epochs))
            std::cerr << "[trunk] epoch " << epoch << "/" << cfg.trunk_epochs << " loss "
                      << log.total << " best " << best_loss << "\n";
    }
    if (cfg.trunk_epochs > 0) restore(m.trunk, best);

    // worst-vertex interpolation error of the pretrained trunk
    MatrixXd v = trunk_values(m, MatrixXd(m.mesh.transpose()));
    return (v - targets).colwise().norm().maxCoeff();
}

}  // namespace traindetail

/// Runs the configured training strategy end to end. The model must arrive
/// with nets initialized, normalization set and the POD basis in place.
inline TrainResult run_pipeline(PtpiModel& m, const SnapshotSet& data, PipelineConfig cfg) {
    cfg.validate();
    validate_dims(m);
    require(data.n_cols() > 0, "data", "training data is empty");
    using namespace traindetail;

    TrainResult result;
    SupData sup = prepare_supervised(m, data, cfg.validation_fraction, cfg.seed + 4);
    BoxSampler res_sampler(cfg.res_lo.size() ? cfg.res_lo : VectorXd::Zero(1),
                           cfg.res_hi.size() ? cfg.res_hi : VectorXd::Ones(1), cfg.seed + 2);

    Workset ws_pre = make_workset(m.problem, Stage::BranchPretrain, m.mesh,
                                  cfg.finetune_interior, cfg.seed + 3);
    Workset ws_fine = make_workset(m.problem, Stage::FineTune, m.mesh, cfg.finetune_interior,
                                   cfg.seed + 3);

    auto stage_done = [&](const std::string& name) {
        if (cfg.on_stage_end) cfg.on_stage_end(name, m);
    };

    if (cfg.strategy == "ptpi") {
        result.trunk_max_row_error = run_trunk_stage(m, cfg, result.history);
        stage_done("trunk");
        freeze(m.trunk);
        FrozenTrunkCache cache = precompute_frozen_trunk(m, ws_pre);
        StageSpec branch{"branch", LossMode::Full, true, true, cfg.branch_epochs,
                         cfg.branch_lr, Stage::BranchPretrain, true};
        StageRuntime rt_b =
            run_stage(m, branch, sup, cfg, ws_pre, &cache, res_sampler, result.history);
        result.branch_epoch_seconds = rt_b.seconds_per_epoch;
        unfreeze(m.trunk);
        stage_done("branch");
        StageSpec fine{"finetune", LossMode::Full, false, true, cfg.finetune_epochs,
                       cfg.finetune_lr, Stage::FineTune, true};
        StageRuntime rt_f =
            run_stage(m, fine, sup, cfg, ws_fine, nullptr, res_sampler, result.history);
        result.finetune_epoch_seconds = rt_f.seconds_per_epoch;
        stage_done("finetune");
    } else if (cfg.strategy == "vanilla") {
        StageSpec datastage{"data", LossMode::DataField, false, false,
                            cfg.trunk_epochs + cfg.branch_epochs, cfg.branch_lr,
                            Stage::BranchPretrain, true};
        run_stage(m, datastage, sup, cfg, ws_pre, nullptr, res_sampler, result.history);
        StageSpec fine{"finetune", LossMode::Full, false, true, cfg.finetune_epochs,
                       cfg.finetune_lr, Stage::FineTune, true};
        run_stage(m, fine, sup, cfg, ws_fine, nullptr, res_sampler, result.history);
    } else if (cfg.strategy == "none") {
        StageSpec scratch{"scratch", LossMode::Full, false, true,
                          cfg.trunk_epochs + cfg.branch_epochs + cfg.finetune_epochs,
                          cfg.finetune_lr, Stage::FineTune, true};
        run_stage(m, scratch, sup, cfg, ws_fine, nullptr, res_sampler, result.history);
    } else {  // pod-dl-rom
        m.use_trunk = false;
        StageSpec baseline{"pod-dl-rom", LossMode::DataReduced, false, false,
                           cfg.branch_epochs, cfg.branch_lr, Stage::BranchPretrain, true};
        run_stage(m, baseline, sup, cfg, ws_pre, nullptr, res_sampler, result.history);
    }

    // validation error recorded at selection
    auto [vd, vr] = validation_metrics(m, sup, sup.val_cols);
    result.selected_val_rel = vr;
    return result;
}

}  // namespace ptpi
