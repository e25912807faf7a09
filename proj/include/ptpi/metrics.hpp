#pragma once

// Relative-error indicators over a test set: time-wise E(t), per-parameter
// e(mu), and the global mean of per-snapshot relative errors.

#include "ptpi/pod.hpp"

#include <fstream>
#include <iomanip>

namespace ptpi {

struct ErrorReport {
    VectorXd E_of_t;   // one entry per test time instant
    VectorXd e_of_mu;  // one entry per test parameter
    double global_E = 0.0;
    int n_params = 0, n_times = 0;
    int n_excluded = 0;  // zero-norm truth snapshots skipped
};

/// Indicators per the usual conventions: E(t) averages per-time relative
/// field norms over parameters, e(mu) aggregates over time before dividing,
/// and the global indicator averages per-snapshot relative errors over the
/// whole (mu, t) grid. Zero-norm truth snapshots are excluded and counted.
inline ErrorReport error_metrics(const MatrixXd& pred, const SnapshotSet& truth) {
    require(pred.rows() == truth.fields.rows() && pred.cols() == truth.fields.cols(), "shape",
            "prediction and truth shapes differ");
    const int Ns = truth.n_params(), Nt = truth.n_times();
    ErrorReport rep;
    rep.n_params = Ns;
    rep.n_times = Nt;
    rep.E_of_t = VectorXd::Zero(Nt);
    rep.e_of_mu = VectorXd::Zero(Ns);

    MatrixXd rel = MatrixXd::Zero(Ns, Nt);
    Eigen::MatrixXi ok = Eigen::MatrixXi::Zero(Ns, Nt);
    for (int j = 0; j < Ns; ++j)
        for (int k = 0; k < Nt; ++k) {
            int col = truth.col_index(j, k);
            double den = truth.fields.col(col).norm();
            if (den == 0.0) {
                ++rep.n_excluded;
                continue;
            }
            rel(j, k) = (pred.col(col) - truth.fields.col(col)).norm() / den;
            ok(j, k) = 1;
        }
    if (rep.n_excluded > 0)
        std::cerr << "warning: error_metrics skipped " << rep.n_excluded
                  << " zero-norm truth snapshots\n";

    for (int k = 0; k < Nt; ++k) {
        int cnt = 0;
        for (int j = 0; j < Ns; ++j)
            if (ok(j, k)) {
                rep.E_of_t(k) += rel(j, k);
                ++cnt;
            }
        rep.E_of_t(k) = cnt ? rep.E_of_t(k) / cnt : 0.0;
    }
    for (int j = 0; j < Ns; ++j) {
        double num = 0.0, den = 0.0;
        for (int k = 0; k < Nt; ++k) {
            int col = truth.col_index(j, k);
            num += (pred.col(col) - truth.fields.col(col)).squaredNorm();
            den += truth.fields.col(col).squaredNorm();
        }
        rep.e_of_mu(j) = den > 0 ? std::sqrt(num / den) : 0.0;
    }
    int cnt = 0;
    double acc = 0.0;
    for (int j = 0; j < Ns; ++j)
        for (int k = 0; k < Nt; ++k)
            if (ok(j, k)) {
                acc += rel(j, k);
                ++cnt;
            }
    rep.global_E = cnt ? acc / cnt : 0.0;
    return rep;
}

// ---- CSV emission: one file per indicator, 8 significant digits ----

inline void write_csv_row(std::ofstream& out, const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i)
        out << cells[i] << (i + 1 < cells.size() ? "," : "\n");
}

inline std::string sci(double v) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(7) << v;
    return os.str();
}

inline void write_error_report(const ErrorReport& rep, const SnapshotSet& truth,
                               const std::string& dir) {
    {
        std::ofstream out(dir + "/E_of_t.csv");
        require(bool(out), "io", "cannot write " + dir + "/E_of_t.csv");
        out << "t,E\n";
        for (int k = 0; k < rep.n_times; ++k)
            out << sci(truth.times(k)) << "," << sci(rep.E_of_t(k)) << "\n";
    }
    {
        std::ofstream out(dir + "/e_of_mu.csv");
        require(bool(out), "io", "cannot write " + dir + "/e_of_mu.csv");
        out << "mu";
        for (int q = 1; q < truth.params.cols(); ++q) out << ",mu" << q + 1;
        out << ",e\n";
        for (int j = 0; j < rep.n_params; ++j) {
            for (int q = 0; q < truth.params.cols(); ++q)
                out << sci(truth.params(j, q)) << ",";
            out << sci(rep.e_of_mu(j)) << "\n";
        }
    }
    {
        std::ofstream out(dir + "/global_error.csv");
        require(bool(out), "io", "cannot write " + dir + "/global_error.csv");
        out << "N_data,global_E,n_excluded\n";
        out << rep.n_params * rep.n_times << "," << sci(rep.global_E) << ","
            << rep.n_excluded << "\n";
    }
}

}  // namespace ptpi
