#pragma once

// The composite reduced-order model: trunk net producing continuous spatial
// modes, branch = decoder(reduced(mu,t)) with an auxiliary encoder used only
// by the latent loss, and a POD basis. Fields are trained in normalized
// units; every public evaluation returns physical units.

#include "ptpi/net.hpp"
#include "ptpi/physics.hpp"

#include <optional>

namespace ptpi {

struct Normalization {
    VectorXd x_lo, x_hi;    // spatial box, size d
    VectorXd in_lo, in_hi;  // branch inputs (mu, then t unless stationary)
    VectorXd out_scale;     // per-channel max-abs of the supervised fields

    VectorXd x_factors() const {
        VectorXd a(x_lo.size());
        for (int i = 0; i < a.size(); ++i) a(i) = 2.0 / (x_hi(i) - x_lo(i));
        return a;
    }
    MatrixXd map_x(const MatrixXd& X) const {
        MatrixXd out(X.rows(), X.cols());
        for (int i = 0; i < X.rows(); ++i)
            out.row(i) =
                (2.0 * (X.row(i).array() - x_lo(i)) / (x_hi(i) - x_lo(i)) - 1.0).matrix();
        return out;
    }
    MatrixXd map_in(const MatrixXd& In) const {
        MatrixXd out(In.rows(), In.cols());
        for (int i = 0; i < In.rows(); ++i)
            out.row(i) =
                (2.0 * (In.row(i).array() - in_lo(i)) / (in_hi(i) - in_lo(i)) - 1.0).matrix();
        return out;
    }
    double t_factor() const {
        int i = int(in_lo.size()) - 1;
        return 2.0 / (in_hi(i) - in_lo(i));
    }
};

struct FieldRequest {
    bool grad = false;
    bool laplacian = false;
    bool dt = false;
};

struct PtpiModel {
    PDEProblem problem;
    DenseNet trunk, encoder, reduced, decoder;
    std::optional<FourierEmbedding> fourier;
    PODBasis pod;  // block-diagonal across channels when C > 1
    int N_h = 0, N = 0, n = 0;
    Normalization norm;
    bool use_trunk = true;  // the data-only baseline predicts through the POD matrix
    MatrixXd mesh;          // N_h x d

    mutable MatrixXd vhat_cache;  // trunk at mesh, (N*C) x N_h
    mutable uint64_t vhat_version = ~0ull;

    int channels() const { return problem.C; }
    int branch_input_dim() const { return problem.p + (problem.stationary ? 0 : 1); }

    void set_mesh(MatrixXd coords) {
        mesh = std::move(coords);
        N_h = int(mesh.rows());
        vhat_version = ~0ull;
    }
};

inline void validate_dims(const PtpiModel& m) {
    require(m.n >= m.problem.p + 1, "config", "latent dimension must satisfy n >= p+1");
    require(m.n <= m.N, "config", "latent dimension must not exceed the POD rank");
    require(m.trunk.output_dim == m.N * m.channels(), "config",
            "trunk output width must be N*C");
    require(m.decoder.output_dim == m.N * m.channels(), "config",
            "decoder output width must be N*C");
    require(m.encoder.input_dim == m.N * m.channels() && m.encoder.output_dim == m.n, "config",
            "encoder must map N*C -> n");
    require(m.reduced.input_dim == m.branch_input_dim() && m.reduced.output_dim == m.n,
            "config", "reduced net must map branch inputs -> n");
}

// ---- branch ----

inline MatrixXd branch_inputs(const PtpiModel& m, const MatrixXd& mu_t) {
    require(mu_t.rows() == m.branch_input_dim(), "shape", "branch input dimension");
    return m.norm.map_in(mu_t);
}

inline MatrixXd branch_input_column(const PtpiModel& m, const VectorXd& mu, double t) {
    MatrixXd in(m.branch_input_dim(), 1);
    in.topRows(m.problem.p) = mu;
    if (!m.problem.stationary) in(m.problem.p, 0) = t;
    return in;
}

/// q_hat = decoder(reduced(mu, t)); optionally also its physical-time
/// derivative via an order-1 jet in the time direction.
inline std::pair<VectorXd, VectorXd> branch_coefficients(const PtpiModel& m, const VectorXd& mu,
                                                         double t, bool with_dt) {
    require(int(mu.size()) == m.problem.p, "shape", "parameter vector length");
    if (with_dt)
        require(!m.problem.stationary, "unsupported-time-derivative",
                "stationary problems have no time derivative");
    MatrixXd in = branch_inputs(m, branch_input_column(m, mu, t));
    if (!with_dt) {
        VectorXd q = net_forward(m.decoder, net_forward(m.reduced, MatrixXd(in))).col(0);
        return {q, VectorXd()};
    }
    MatrixXd D1 = MatrixXd::Zero(in.rows(), 1);
    D1(in.rows() - 1, 0) = m.norm.t_factor();
    JetMats jr = net_forward_jet(m.reduced, in, D1, false);
    JetMats jd = net_forward_jet(m.decoder, jr.v, jr.d1, false);
    return {jd.v.col(0), jd.d1.col(0)};
}

/// Encoder view of a physical field: Psi'(V^T u) after normalization.
/// Participates only in the latent loss; predictions never call it.
inline VectorXd latent_encode(const PtpiModel& m, const VectorXd& u_h) {
    require(int(u_h.size()) == m.N_h * m.channels(), "shape", "field vector length");
    VectorXd u = u_h;
    for (int c = 0; c < m.channels(); ++c)
        u.segment(c * m.N_h, m.N_h) /= m.norm.out_scale(c);
    return net_forward(m.encoder, VectorXd(m.pod.V.transpose() * u));
}

// ---- trunk ----

/// Trunk evaluation at physical points (one per column): values and, on
/// request, per-direction jets with respect to physical coordinates.
/// Output rows are channel-major: row c*N + k is mode k of channel c.
inline MatrixXd trunk_values(const PtpiModel& m, const MatrixXd& X) {
    MatrixXd Xn = m.norm.map_x(X);
    if (m.fourier) return net_forward(m.trunk, fourier_embed(*m.fourier, Xn));
    return net_forward(m.trunk, Xn);
}

struct TrunkJets {
    MatrixXd value;               // (N*C) x B
    std::vector<MatrixXd> d1;     // per spatial direction, physical units
    std::vector<MatrixXd> d2;     // per spatial direction (empty if not requested)
};

inline TrunkJets trunk_jets(const PtpiModel& m, const MatrixXd& X, bool second) {
    TrunkJets out;
    MatrixXd Xn = m.norm.map_x(X);
    VectorXd ax = m.norm.x_factors();
    for (int dim = 0; dim < m.problem.d; ++dim) {
        MatrixXd D1 = MatrixXd::Zero(Xn.rows(), Xn.cols());
        D1.row(dim).setConstant(ax(dim));
        JetMats j;
        if (m.fourier) {
            JetMats je = fourier_embed_jet(*m.fourier, Xn, D1, second);
            j = net_forward_jet(m.trunk, je.v, je.d1, second, je.d2);
        } else {
            j = net_forward_jet(m.trunk, Xn, D1, second);
        }
        if (dim == 0) out.value = j.v;
        out.d1.push_back(std::move(j.d1));
        if (second) out.d2.push_back(std::move(j.d2));
    }
    return out;
}

/// Single-point trunk modes: value, gradient and jet-assembled Laplacian.
inline void trunk_modes(const PtpiModel& m, const VectorXd& x, MatrixXd* value, MatrixXd* grad,
                        MatrixXd* laplacian) {
    bool second = laplacian != nullptr;
    TrunkJets j = trunk_jets(m, MatrixXd(x), second);
    if (value) *value = j.value;
    if (grad) {
        grad->resize(j.value.rows(), m.problem.d);
        for (int dim = 0; dim < m.problem.d; ++dim) grad->col(dim) = j.d1[dim];
    }
    if (laplacian) {
        laplacian->setZero(j.value.rows(), 1);
        for (int dim = 0; dim < m.problem.d; ++dim) *laplacian += j.d2[dim];
    }
}

// ---- composite field ----

/// u(x, mu, t) = sum_k v_k(x) q_k(mu, t) per channel, denormalized, with
/// spatial/temporal derivatives assembled from trunk jets and the branch
/// time jet as requested.
inline FieldBundle field_eval(const PtpiModel& m, const VectorXd& x, const VectorXd& mu,
                              double t, const FieldRequest& req = {}) {
    bool with_dt = req.dt && !m.problem.stationary;
    auto [q, dq] = branch_coefficients(m, mu, t, with_dt);
    TrunkJets j;
    if (req.grad || req.laplacian) {
        j = trunk_jets(m, MatrixXd(x), req.laplacian);
    } else {
        j.value = trunk_values(m, MatrixXd(x));
    }
    const int C = m.channels();
    FieldBundle b;
    b.value.resize(C);
    if (req.grad) {
        b.grad.setZero(C, m.problem.d);
        b.has_grad = true;
    }
    if (req.laplacian) {
        b.laplacian.setZero(C);
        b.has_laplacian = true;
    }
    if (with_dt) {
        b.dt.setZero(C);
        b.has_dt = true;
    }
    for (int c = 0; c < C; ++c) {
        double s = m.norm.out_scale(c);
        auto vc = j.value.block(c * m.N, 0, m.N, 1);
        auto qc = q.segment(c * m.N, m.N);
        b.value(c) = s * vc.col(0).dot(qc);
        if (req.grad)
            for (int dim = 0; dim < m.problem.d; ++dim)
                b.grad(c, dim) = s * j.d1[dim].block(c * m.N, 0, m.N, 1).col(0).dot(qc);
        if (req.laplacian) {
            double lap = 0.0;
            for (int dim = 0; dim < m.problem.d; ++dim)
                lap += j.d2[dim].block(c * m.N, 0, m.N, 1).col(0).dot(qc);
            b.laplacian(c) = s * lap;
        }
        if (with_dt) b.dt(c) = s * vc.col(0).dot(dq.segment(c * m.N, m.N));
    }
    return b;
}

/// Trunk-at-mesh matrix, recomputed whenever the trunk parameters change.
inline const MatrixXd& mesh_modes(const PtpiModel& m) {
    require(m.mesh.rows() == m.N_h && m.N_h > 0, "state", "model has no mesh");
    if (m.vhat_version != m.trunk.version) {
        m.vhat_cache = trunk_values(m, MatrixXd(m.mesh.transpose()));
        m.vhat_version = m.trunk.version;
    }
    return m.vhat_cache;
}

/// Full mesh field for one (mu, t), in physical units. Uses the cached
/// trunk-at-mesh matrix, or the exact POD matrix for the data-only baseline.
inline VectorXd evaluate_on_mesh(const PtpiModel& m, const VectorXd& mu, double t) {
    auto [q, dq] = branch_coefficients(m, mu, t, false);
    const int C = m.channels();
    VectorXd u(m.N_h * C);
    if (!m.use_trunk) {
        u = m.pod.V * q;
        for (int c = 0; c < C; ++c) u.segment(c * m.N_h, m.N_h) *= m.norm.out_scale(c);
        return u;
    }
    const MatrixXd& T = mesh_modes(m);
    for (int c = 0; c < C; ++c)
        u.segment(c * m.N_h, m.N_h) =
            m.norm.out_scale(c) * (T.middleRows(c * m.N, m.N).transpose() * q.segment(c * m.N, m.N));
    return u;
}

/// Mesh predictions for a whole test set, one column per (mu_j, t_k).
inline MatrixXd predict_snapshots(const PtpiModel& m, const SnapshotSet& test) {
    require(test.n_vertices() == m.N_h, "shape", "test mesh size differs from the model mesh");
    MatrixXd out(test.fields.rows(), test.fields.cols());
    for (int j = 0; j < test.n_params(); ++j)
        for (int k = 0; k < test.n_times(); ++k)
            out.col(test.col_index(j, k)) =
                evaluate_on_mesh(m, test.params.row(j).transpose(), test.times(k));
    return out;
}

}  // namespace ptpi
