#pragma once

// Snapshot handling and weighted POD: method of snapshots (eigendecomposition
// of the small Gram matrix) or randomized SVD, projection/reconstruction,
// the empirical relative projection error, and a Monte-Carlo estimator of
// the generalization gap of bases built from finitely many samples.

#include "ptpi/common.hpp"

#include <functional>
#include <iostream>

namespace ptpi {

/// Supervised dataset: mesh coordinates, sample grids and field snapshots.
/// Field column (k + j*N_t) holds the solution at parameter j, time k
/// (time fastest within each parameter block).
struct SnapshotSet {
    MatrixXd coords;  // N_h x d
    MatrixXd params;  // N_s x p
    VectorXd times;   // N_t
    MatrixXd fields;  // (N_h*C) x (N_s*N_t)
    int channels = 1;

    int n_vertices() const { return int(coords.rows()); }
    int dim() const { return int(coords.cols()); }
    int n_params() const { return int(params.rows()); }
    int n_times() const { return int(times.size()); }
    int n_cols() const { return int(fields.cols()); }
    int col_index(int j, int k) const { return k + j * n_times(); }

    void validate() const {
        require(fields.cols() == n_params() * n_times(), "data",
                "field column count must equal N_s*N_t");
        require(fields.rows() == n_vertices() * channels, "data",
                "field row count must equal N_h*C");
        require(fields.allFinite() && coords.allFinite(), "data",
                "snapshot set contains non-finite entries");
    }
};

struct PODBasis {
    MatrixXd V;               // N_h x N, semi-orthogonal
    VectorXd sigma;           // descending singular values of sqrt(weight)*U
    double weight = 1.0;      // |P_sup x T_sup| / (N_s*N_t)
    double discarded_energy = 0.0;  // sum of squared discarded singular values

    int rank() const { return int(V.cols()); }
};

enum class PodMethod { Exact, Randomized };

namespace detail {

// Largest-magnitude entry of each column made positive, for reproducible
// bases across methods and runs.
inline void fix_signs(MatrixXd& V) {
    for (int k = 0; k < V.cols(); ++k) {
        int imax = 0;
        double amax = 0.0;
        for (int i = 0; i < V.rows(); ++i) {
            if (std::abs(V(i, k)) > amax) {
                amax = std::abs(V(i, k));
                imax = i;
            }
        }
        if (V(imax, k) < 0.0) V.col(k) = -V.col(k);
    }
}

inline MatrixXd gaussian(int rows, int cols, Rng& rng) {
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
    return m;
}

}  // namespace detail

/// Top-N left singular subspace of sqrt(weight)*U. The exact method goes
/// through the Gram matrix U^T U; the randomized one uses oversampling 10
/// and 2 power iterations.
inline PODBasis pod_basis(const MatrixXd& U, int N, double weight, PodMethod method,
                          uint64_t seed = 0) {
    const int cols = int(U.cols());
    require(N >= 1 && N <= std::min<int>(int(U.rows()), cols), "config",
            "pod rank out of range");
    require(weight > 0.0, "config", "pod weight must be positive");

    PODBasis basis;
    basis.weight = weight;

    // All singular values come from the Gram spectrum either way; the
    // discarded energy needs the full tail.
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(U.transpose() * U);
    VectorXd lambda = eig.eigenvalues().reverse();  // descending
    for (int i = 0; i < lambda.size(); ++i) lambda(i) = std::max(lambda(i), 0.0);

    int rank_eff = N;
    double lead = lambda(0);
    for (int k = 0; k < N; ++k) {
        if (lambda(k) <= lead * 1e-28) {
            rank_eff = k;
            break;
        }
    }
    if (rank_eff < N)
        std::cerr << "warning: pod snapshot matrix is numerically rank-deficient; "
                  << "truncating basis to " << rank_eff << " of " << N << " modes\n";

    if (method == PodMethod::Exact) {
        MatrixXd Wcols(cols, rank_eff);
        for (int k = 0; k < rank_eff; ++k) Wcols.col(k) = eig.eigenvectors().col(cols - 1 - k);
        basis.V.resize(U.rows(), rank_eff);
        for (int k = 0; k < rank_eff; ++k)
            basis.V.col(k) = U * Wcols.col(k) / std::sqrt(lambda(k));
    } else {
        const int sketch = std::min<int>(cols, rank_eff + 10);
        Rng rng(seed);
        MatrixXd Omega = detail::gaussian(cols, sketch, rng);
        MatrixXd Y = U * Omega;
        for (int it = 0; it < 2; ++it) {
            Eigen::HouseholderQR<MatrixXd> qr(Y);
            MatrixXd Q = qr.householderQ() * MatrixXd::Identity(Y.rows(), sketch);
            Y = U * (U.transpose() * Q);
        }
        Eigen::HouseholderQR<MatrixXd> qr(Y);
        MatrixXd Q = qr.householderQ() * MatrixXd::Identity(Y.rows(), sketch);
        MatrixXd B = Q.transpose() * U;
        Eigen::JacobiSVD<MatrixXd> svd(B, Eigen::ComputeThinU);
        basis.V = Q * svd.matrixU().leftCols(rank_eff);
    }
    detail::fix_signs(basis.V);

    basis.sigma = (weight * lambda.head(rank_eff)).cwiseSqrt();
    basis.discarded_energy = 0.0;
    for (int k = rank_eff; k < lambda.size(); ++k) basis.discarded_energy += weight * lambda(k);
    return basis;
}

inline VectorXd pod_project(const PODBasis& basis, const VectorXd& u) {
    require(u.size() == basis.V.rows(), "shape", "pod_project field length");
    return basis.V.transpose() * u;
}

inline VectorXd pod_reconstruct(const PODBasis& basis, const VectorXd& q) {
    require(q.size() == basis.V.cols(), "shape", "pod_reconstruct coefficient length");
    return basis.V * q;
}

/// Empirical relative projection error over the columns of a test set.
inline double e_pod(const PODBasis& basis, const MatrixXd& test_fields) {
    require(test_fields.cols() > 0, "data", "e_pod needs a non-empty test set");
    require(test_fields.rows() == basis.V.rows(), "shape", "e_pod field length");
    double num = 0.0, den = 0.0;
    MatrixXd proj = basis.V * (basis.V.transpose() * test_fields);
    num = (test_fields - proj).squaredNorm();
    den = test_fields.squaredNorm();
    require(den > 0.0, "undefined-denominator", "e_pod on all-zero test fields");
    return std::sqrt(num / den);
}

inline double e_pod(const PODBasis& basis, const SnapshotSet& test) {
    return e_pod(basis, test.fields);
}

/// Produces one field column for a given (mu, t). Time grids are the
/// equispaced {t_lo + k (t_hi-t_lo)/N_t, k=1..N_t} used by training data.
struct ManifoldSampler {
    std::function<VectorXd(const VectorXd& mu, double t)> field;
    VectorXd mu_lo, mu_hi;
    double t_lo = 0.0, t_hi = 0.0;
    int n_times = 1;  // 1 for stationary manifolds
};

namespace detail {

inline MatrixXd sample_manifold(const ManifoldSampler& sampler, int n_mu, Rng& rng) {
    const int p = int(sampler.mu_lo.size());
    std::vector<VectorXd> cols;
    for (int j = 0; j < n_mu; ++j) {
        VectorXd mu(p);
        for (int q = 0; q < p; ++q) mu(q) = rng.uniform(sampler.mu_lo(q), sampler.mu_hi(q));
        for (int k = 1; k <= sampler.n_times; ++k) {
            double t = sampler.n_times == 1
                           ? sampler.t_lo
                           : sampler.t_lo + double(k) * (sampler.t_hi - sampler.t_lo) /
                                                double(sampler.n_times);
            cols.push_back(sampler.field(mu, t));
        }
    }
    MatrixXd out(cols[0].size(), int(cols.size()));
    for (size_t j = 0; j < cols.size(); ++j) out.col(int(j)) = cols[j];
    return out;
}

inline double mean_sq_proj_err(const MatrixXd& V, const MatrixXd& samples) {
    MatrixXd proj = V * (V.transpose() * samples);
    return (samples - proj).squaredNorm() / double(samples.cols());
}

}  // namespace detail

/// Monte-Carlo estimate of how much worse N_s-sample POD bases project
/// fresh manifold samples than a reference basis built from 4*max(Ns_list)
/// samples. The expectation over the random sample sets is itself
/// approximated by averaging `basis_draws` independent pools per N_s.
/// Returns the non-negative gap per requested N_s.
inline VectorXd pod_gap_estimate(const ManifoldSampler& sampler, int N,
                                 const std::vector<int>& Ns_list, int N_mc, uint64_t seed,
                                 int basis_draws = 8) {
    require(!Ns_list.empty(), "config", "pod_gap_estimate needs sample counts");
    for (size_t i = 0; i + 1 < Ns_list.size(); ++i)
        require(Ns_list[i] < Ns_list[i + 1], "config", "Ns_list must be increasing");
    require(N <= Ns_list.front() * sampler.n_times, "config",
            "pod rank exceeds snapshot count for the smallest N_s");
    require(basis_draws >= 1, "config", "basis_draws must be positive");

    Rng rng(seed);
    MatrixXd ref_snaps = detail::sample_manifold(sampler, 4 * Ns_list.back(), rng);
    PODBasis ref = pod_basis(ref_snaps, N, 1.0, PodMethod::Exact);
    MatrixXd mc = detail::sample_manifold(sampler, N_mc, rng);
    double err_ref = detail::mean_sq_proj_err(ref.V, mc);

    VectorXd gaps = VectorXd::Zero(int(Ns_list.size()));
    for (int b = 0; b < basis_draws; ++b) {
        MatrixXd pool = detail::sample_manifold(sampler, Ns_list.back(), rng);
        for (size_t i = 0; i < Ns_list.size(); ++i) {
            PODBasis basis =
                pod_basis(pool.leftCols(Ns_list[i] * sampler.n_times), N, 1.0, PodMethod::Exact);
            gaps(int(i)) += detail::mean_sq_proj_err(basis.V, mc) - err_ref;
        }
    }
    gaps /= double(basis_draws);
    return gaps.cwiseMax(0.0);
}

}  // namespace ptpi
