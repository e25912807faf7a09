#pragma once

// Wall-time measurement of first- and second-derivative jet evaluation
// through dense nets of varying depth and width, tape recording included
// (that is the cost paid during physics-informed training).

#include "ptpi/net.hpp"

#include <chrono>

namespace ptpi {

struct BenchRow {
    std::string scenario;  // "depth" or "width"
    int depth = 0, width = 0, batch = 0, repeats = 0;
    double d1_min = 0, d1_mean = 0, d1_max = 0;
    double d2_min = 0, d2_mean = 0, d2_max = 0;
};

namespace benchdetail {

inline double time_jets(const DenseNet& net, const MatrixXd& X,
                        const std::vector<MatrixXd>& dirs, bool second, int inner) {
    auto t0 = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (int k = 0; k < inner; ++k) {
        ad::Tape tp;
        tp.reserve(256);
        BoundNet bn = bind(tp, net);
        TapedJetMulti j = taped_forward_jet_multi(tp, bn, X, dirs, second);
        sink += tp.value(second ? j.d2[0] : j.d1[0])(0, 0);
    }
    auto t1 = std::chrono::steady_clock::now();
    volatile double keep = sink;
    (void)keep;
    return std::chrono::duration<double>(t1 - t0).count() / double(inner);
}

inline BenchRow bench_one(const std::string& scenario, int depth, int width, int in_dim,
                          int out_dim, int batch, int repeats, uint64_t seed) {
    std::vector<int> widths{in_dim};
    for (int l = 0; l < depth - 1; ++l) widths.push_back(width);
    widths.push_back(out_dim);
    DenseNet net = init_dense(widths, Act::Elu, seed);

    Rng rng(seed + 1);
    MatrixXd X(in_dim, batch);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1.0, 1.0);
    std::vector<MatrixXd> dirs;
    for (int dim = 0; dim < in_dim; ++dim) {
        MatrixXd D = MatrixXd::Zero(in_dim, batch);
        D.row(dim).setOnes();
        dirs.push_back(std::move(D));
    }

    BenchRow row{scenario, depth, width, batch, repeats};
    row.d1_min = row.d2_min = std::numeric_limits<double>::infinity();
    // size each measurement to a few milliseconds so scheduler jitter
    // stays small relative to the measured quantity
    double probe = time_jets(net, X, dirs, true, 10);
    int inner = std::max(25, int(4e-3 / std::max(probe, 1e-7)));
    time_jets(net, X, dirs, true, inner);  // warm-up
    for (int r = 0; r < repeats; ++r) {
        double t1 = time_jets(net, X, dirs, false, inner);
        double t2 = time_jets(net, X, dirs, true, inner);
        row.d1_min = std::min(row.d1_min, t1);
        row.d1_max = std::max(row.d1_max, t1);
        row.d1_mean += t1;
        row.d2_min = std::min(row.d2_min, t2);
        row.d2_max = std::max(row.d2_max, t2);
        row.d2_mean += t2;
    }
    row.d1_mean /= repeats;
    row.d2_mean /= repeats;
    return row;
}

}  // namespace benchdetail

/// Depth sweep at fixed width and width sweep at fixed depth, `repeats`
/// timed runs per configuration. Depth l means l-1 hidden layers.
inline std::vector<BenchRow> bench_ad(const std::vector<int>& depths,
                                      const std::vector<int>& widths, int batch, int repeats,
                                      int in_dim = 3, int out_dim = 10, int fixed_width = 10,
                                      int fixed_depth = 10, uint64_t seed = 1234) {
    std::vector<BenchRow> rows;
    for (int l : depths)
        rows.push_back(benchdetail::bench_one("depth", l, fixed_width, in_dim, out_dim, batch,
                                              repeats, seed));
    for (int w : widths)
        rows.push_back(benchdetail::bench_one("width", fixed_depth, w, in_dim, out_dim, batch,
                                              repeats, seed));
    return rows;
}

inline std::vector<int> default_bench_depths() { return {3, 4, 5, 6, 7, 8, 9, 10}; }
inline std::vector<int> default_bench_widths() {
    std::vector<int> w;
    for (int k = 0; k <= 8; ++k) w.push_back(5 + 3 * k);
    return w;
}

}  // namespace ptpi
