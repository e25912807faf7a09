#pragma once

// File formats: the "PTPI" snapshot dataset, the "PTPC" model checkpoint,
// and the sectioned key=value run configuration. All binary payloads are
// little-endian 64-bit floats in column-major order.

#include "ptpi/metrics.hpp"
#include "ptpi/training.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace ptpi {

namespace io {

inline void check_little_endian() {
    uint32_t x = 1;
    char c;
    std::memcpy(&c, &x, 1);
    require(c == 1, "io", "file formats require a little-endian host");
}

inline void write_u32(std::ostream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}
inline uint32_t read_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    require(bool(in), "io", "unexpected end of file");
    return v;
}
inline void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
}
inline double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    require(bool(in), "io", "unexpected end of file");
    return v;
}
inline void write_mat(std::ostream& out, const MatrixXd& m) {
    out.write(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
}
inline void read_mat(std::istream& in, MatrixXd& m) {
    in.read(reinterpret_cast<char*>(m.data()), sizeof(double) * m.size());
    require(bool(in), "io", "unexpected end of file");
}
inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
}
inline std::string read_string(std::istream& in) {
    uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    require(bool(in), "io", "unexpected end of file");
    return s;
}

}  // namespace io

// ---- dataset format ----
// magic "PTPI", version, N_h, d, C, N_s, N_t, p (u32 each), then f64 arrays
// coords (N_h x d), params (N_s x p), times (N_t), fields (N_h*C x N_s*N_t),
// all column-major.

inline constexpr uint32_t kDatasetVersion = 1;

inline void save_dataset(const SnapshotSet& s, const std::string& path) {
    io::check_little_endian();
    s.validate();
    std::ofstream out(path, std::ios::binary);
    require(bool(out), "io", "cannot open " + path + " for writing");
    out.write("PTPI", 4);
    io::write_u32(out, kDatasetVersion);
    io::write_u32(out, uint32_t(s.n_vertices()));
    io::write_u32(out, uint32_t(s.dim()));
    io::write_u32(out, uint32_t(s.channels));
    io::write_u32(out, uint32_t(s.n_params()));
    io::write_u32(out, uint32_t(s.n_times()));
    io::write_u32(out, uint32_t(s.params.cols()));
    io::write_mat(out, s.coords);
    io::write_mat(out, s.params);
    io::write_mat(out, MatrixXd(s.times));
    io::write_mat(out, s.fields);
    require(bool(out), "io", "write failed for " + path);
}

inline SnapshotSet load_dataset(const std::string& path) {
    io::check_little_endian();
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "io", "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    require(bool(in) && std::memcmp(magic, "PTPI", 4) == 0, "io",
            path + " is not a snapshot dataset");
    uint32_t version = io::read_u32(in);
    require(version == kDatasetVersion, "io", "unsupported dataset version");
    uint32_t N_h = io::read_u32(in), d = io::read_u32(in), C = io::read_u32(in);
    uint32_t N_s = io::read_u32(in), N_t = io::read_u32(in), p = io::read_u32(in);
    SnapshotSet s;
    s.channels = int(C);
    s.coords.resize(N_h, d);
    s.params.resize(N_s, p);
    MatrixXd times(N_t, 1);
    s.fields.resize(N_h * C, N_s * N_t);
    io::read_mat(in, s.coords);
    io::read_mat(in, s.params);
    io::read_mat(in, times);
    io::read_mat(in, s.fields);
    s.times = times.col(0);
    s.validate();
    return s;
}

// ---- run configuration ----

struct RunConfig {
    std::string problem = "eikonal";
    int grid_x = 30, grid_y = 30;
    ModelSpec model;
    PipelineConfig train;
    VectorXd p_sup_lo, p_sup_hi;
    std::vector<int> n_sup;
    VectorXd p_test_lo, p_test_hi;
    std::vector<int> n_test;
    int n_t = 1, n_t_test = 1;
};

namespace io {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline std::vector<double> parse_doubles(const std::string& v, const std::string& key) {
    std::istringstream in(v);
    std::vector<double> out;
    double x;
    while (in >> x) out.push_back(x);
    require(!out.empty(), "config", "key '" + key + "' needs numeric values");
    return out;
}

inline std::vector<int> parse_ints(const std::string& v, const std::string& key) {
    std::vector<int> out;
    for (double x : parse_doubles(v, key)) {
        require(x == std::floor(x), "config", "key '" + key + "' needs integers");
        out.push_back(int(x));
    }
    return out;
}

inline VectorXd to_vec(const std::vector<double>& v) {
    VectorXd out(int(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out(int(i)) = v[i];
    return out;
}

inline std::string fmt_vec(const VectorXd& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
    return os.str();
}

inline std::string fmt_ints(const std::vector<int>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
    return os.str();
}

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace io

/// Parses the sectioned key=value run configuration. '#' starts a comment;
/// unknown keys are errors rather than silent typos.
inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line, section;
    auto num = [](const std::string& v, const std::string& key) {
        auto d = io::parse_doubles(v, key);
        require(d.size() == 1, "config", "key '" + key + "' needs one value");
        return d[0];
    };
    bool have_res_lo = false, have_res_hi = false;
    VectorXd p_res_lo, p_res_hi;
    double t_res_lo = 0, t_res_hi = 0;
    bool have_t_res = false;

    while (std::getline(in, line)) {
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = io::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            require(line.back() == ']', "config", "bad section header: " + line);
            section = line.substr(1, line.size() - 2);
            continue;
        }
        size_t eq = line.find('=');
        require(eq != std::string::npos, "config", "expected key = value: " + line);
        std::string key = io::trim(line.substr(0, eq));
        std::string val = io::trim(line.substr(eq + 1));
        std::string full = section + "." + key;

        auto net_key = [&](const std::string& sec, std::vector<int>& hidden, Act& act) {
            if (full == sec + ".hidden") {
                hidden = io::parse_ints(val, full);
                return true;
            }
            if (full == sec + ".activation") {
                act = act_from_string(val);
                return true;
            }
            return false;
        };

        if (full == "problem.name") c.problem = val;
        else if (full == "problem.grid") {
            auto g = io::parse_ints(val, full);
            require(g.size() == 2, "config", "problem.grid needs two values");
            c.grid_x = g[0];
            c.grid_y = g[1];
        } else if (full == "dims.pod_rank") c.model.N = int(num(val, full));
        else if (full == "dims.latent") c.model.n = int(num(val, full));
        else if (net_key("trunk", c.model.trunk_hidden, c.model.trunk_act)) {}
        else if (full == "trunk.fourier_m") c.model.fourier_m = int(num(val, full));
        else if (full == "trunk.fourier_sigma") c.model.fourier_sigma = num(val, full);
        else if (net_key("encoder", c.model.encoder_hidden, c.model.encoder_act)) {}
        else if (net_key("reduced", c.model.reduced_hidden, c.model.reduced_act)) {}
        else if (net_key("decoder", c.model.decoder_hidden, c.model.decoder_act)) {}
        else if (full == "data.P_sup_lo") c.p_sup_lo = io::to_vec(io::parse_doubles(val, full));
        else if (full == "data.P_sup_hi") c.p_sup_hi = io::to_vec(io::parse_doubles(val, full));
        else if (full == "data.n_sup") c.n_sup = io::parse_ints(val, full);
        else if (full == "data.P_test_lo") c.p_test_lo = io::to_vec(io::parse_doubles(val, full));
        else if (full == "data.P_test_hi") c.p_test_hi = io::to_vec(io::parse_doubles(val, full));
        else if (full == "data.n_test") c.n_test = io::parse_ints(val, full);
        else if (full == "data.n_t") c.n_t = int(num(val, full));
        else if (full == "data.n_t_test") c.n_t_test = int(num(val, full));
        else if (full == "train.strategy") c.train.strategy = val;
        else if (full == "train.trunk_epochs") c.train.trunk_epochs = int(num(val, full));
        else if (full == "train.trunk_lr") c.train.trunk_lr = num(val, full);
        else if (full == "train.trunk_batch") c.train.trunk_batch = int(num(val, full));
        else if (full == "train.branch_epochs") c.train.branch_epochs = int(num(val, full));
        else if (full == "train.branch_lr") c.train.branch_lr = num(val, full);
        else if (full == "train.finetune_epochs") c.train.finetune_epochs = int(num(val, full));
        else if (full == "train.finetune_lr") c.train.finetune_lr = num(val, full);
        else if (full == "train.sup_batch") c.train.sup_batch = int(num(val, full));
        else if (full == "train.res_batch") c.train.res_batch = int(num(val, full));
        else if (full == "train.resample_every") c.train.resample_every = int(num(val, full));
        else if (full == "train.n_res") c.train.n_res = int(num(val, full));
        else if (full == "train.finetune_interior")
            c.train.finetune_interior = int(num(val, full));
        else if (full == "train.boundary_count") c.train.boundary_count = int(num(val, full));
        else if (full == "train.w_data") c.train.weights.w_data = num(val, full);
        else if (full == "train.w_latent") c.train.weights.w_latent = num(val, full);
        else if (full == "train.w_interior")
            c.train.weights.w_interior = io::to_vec(io::parse_doubles(val, full));
        else if (full == "train.w_boundary")
            c.train.weights.w_boundary = io::to_vec(io::parse_doubles(val, full));
        else if (full == "train.w_ic") c.train.weights.w_ic = num(val, full);
        else if (full == "train.loss_convention") {
            require(val == "mean" || val == "sum", "config",
                    "train.loss_convention must be mean or sum");
            c.train.weights.sum_convention = val == "sum";
        }
        else if (full == "train.validation_fraction")
            c.train.validation_fraction = num(val, full);
        else if (full == "train.clip_gradients") c.train.clip_gradients = num(val, full) != 0;
        else if (full == "train.clip_norm") c.train.clip_norm = num(val, full);
        else if (full == "train.resample_collocation")
            c.train.resample_collocation = num(val, full) != 0;
        else if (full == "train.seed") c.train.seed = uint64_t(num(val, full));
        else if (full == "train.P_res_lo") {
            p_res_lo = io::to_vec(io::parse_doubles(val, full));
            have_res_lo = true;
        } else if (full == "train.P_res_hi") {
            p_res_hi = io::to_vec(io::parse_doubles(val, full));
            have_res_hi = true;
        } else if (full == "train.T_res") {
            auto d = io::parse_doubles(val, full);
            require(d.size() == 2, "config", "train.T_res needs lo hi");
            t_res_lo = d[0];
            t_res_hi = d[1];
            have_t_res = true;
        } else if (full == "train.pod_method") {
            require(val == "exact" || val == "randomized", "config",
                    "train.pod_method must be exact or randomized");
            c.model.pod_method = val == "exact" ? PodMethod::Exact : PodMethod::Randomized;
        } else {
            fail("config", "unknown key '" + full + "'");
        }
    }

    require(have_res_lo == have_res_hi, "config", "P_res_lo and P_res_hi come together");
    if (have_res_lo) {
        PDEProblem prob = make_problem(c.problem);
        int bi = prob.p + (prob.stationary ? 0 : 1);
        c.train.res_lo.resize(bi);
        c.train.res_hi.resize(bi);
        require(int(p_res_lo.size()) == prob.p && int(p_res_hi.size()) == prob.p, "config",
                "P_res bounds must have one entry per parameter");
        c.train.res_lo.head(prob.p) = p_res_lo;
        c.train.res_hi.head(prob.p) = p_res_hi;
        if (!prob.stationary) {
            require(have_t_res, "config", "time-dependent problems need train.T_res");
            c.train.res_lo(prob.p) = t_res_lo;
            c.train.res_hi(prob.p) = t_res_hi;
        }
    }
    c.model.seed = c.train.seed;
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(bool(in), "io", "cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// Canonical text form; parse(serialize(c)) is semantically identical to c.
inline std::string serialize_config(const RunConfig& c) {
    PDEProblem prob = make_problem(c.problem);
    std::ostringstream os;
    os << "[problem]\n";
    os << "name = " << c.problem << "\n";
    os << "grid = " << c.grid_x << " " << c.grid_y << "\n\n";
    os << "[dims]\n";
    os << "pod_rank = " << c.model.N << "\n";
    os << "latent = " << c.model.n << "\n\n";
    auto net = [&](const std::string& sec, const std::vector<int>& hidden, Act act) {
        os << "[" << sec << "]\n";
        os << "hidden = " << io::fmt_ints(hidden) << "\n";
        os << "activation = " << act_to_string(act) << "\n";
    };
    net("trunk", c.model.trunk_hidden, c.model.trunk_act);
    os << "fourier_m = " << c.model.fourier_m << "\n";
    os << "fourier_sigma = " << io::fmt_num(c.model.fourier_sigma) << "\n\n";
    net("encoder", c.model.encoder_hidden, c.model.encoder_act);
    os << "\n";
    net("reduced", c.model.reduced_hidden, c.model.reduced_act);
    os << "\n";
    net("decoder", c.model.decoder_hidden, c.model.decoder_act);
    os << "\n[data]\n";
    os << "P_sup_lo = " << io::fmt_vec(c.p_sup_lo) << "\n";
    os << "P_sup_hi = " << io::fmt_vec(c.p_sup_hi) << "\n";
    os << "n_sup = " << io::fmt_ints(c.n_sup) << "\n";
    os << "P_test_lo = " << io::fmt_vec(c.p_test_lo) << "\n";
    os << "P_test_hi = " << io::fmt_vec(c.p_test_hi) << "\n";
    os << "n_test = " << io::fmt_ints(c.n_test) << "\n";
    os << "n_t = " << c.n_t << "\n";
    os << "n_t_test = " << c.n_t_test << "\n\n";
    os << "[train]\n";
    os << "strategy = " << c.train.strategy << "\n";
    os << "trunk_epochs = " << c.train.trunk_epochs << "\n";
    os << "trunk_lr = " << io::fmt_num(c.train.trunk_lr) << "\n";
    os << "trunk_batch = " << c.train.trunk_batch << "\n";
    os << "branch_epochs = " << c.train.branch_epochs << "\n";
    os << "branch_lr = " << io::fmt_num(c.train.branch_lr) << "\n";
    os << "finetune_epochs = " << c.train.finetune_epochs << "\n";
    os << "finetune_lr = " << io::fmt_num(c.train.finetune_lr) << "\n";
    os << "sup_batch = " << c.train.sup_batch << "\n";
    os << "res_batch = " << c.train.res_batch << "\n";
    os << "resample_every = " << c.train.resample_every << "\n";
    os << "n_res = " << c.train.n_res << "\n";
    os << "finetune_interior = " << c.train.finetune_interior << "\n";
    os << "boundary_count = " << c.train.boundary_count << "\n";
    os << "w_data = " << io::fmt_num(c.train.weights.w_data) << "\n";
    os << "w_latent = " << io::fmt_num(c.train.weights.w_latent) << "\n";
    if (c.train.weights.w_interior.size())
        os << "w_interior = " << io::fmt_vec(c.train.weights.w_interior) << "\n";
    if (c.train.weights.w_boundary.size())
        os << "w_boundary = " << io::fmt_vec(c.train.weights.w_boundary) << "\n";
    os << "w_ic = " << io::fmt_num(c.train.weights.w_ic) << "\n";
    os << "loss_convention = " << (c.train.weights.sum_convention ? "sum" : "mean") << "\n";
    os << "validation_fraction = " << io::fmt_num(c.train.validation_fraction) << "\n";
    os << "clip_gradients = " << (c.train.clip_gradients ? 1 : 0) << "\n";
    os << "clip_norm = " << io::fmt_num(c.train.clip_norm) << "\n";
    os << "resample_collocation = " << (c.train.resample_collocation ? 1 : 0) << "\n";
    os << "seed = " << c.train.seed << "\n";
    os << "pod_method = "
       << (c.model.pod_method == PodMethod::Exact ? "exact" : "randomized") << "\n";
    if (c.train.res_lo.size()) {
        os << "P_res_lo = " << io::fmt_vec(c.train.res_lo.head(prob.p)) << "\n";
        os << "P_res_hi = " << io::fmt_vec(c.train.res_hi.head(prob.p)) << "\n";
        if (!prob.stationary)
            os << "T_res = " << io::fmt_num(c.train.res_lo(prob.p)) << " "
               << io::fmt_num(c.train.res_hi(prob.p)) << "\n";
    }
    return os.str();
}

// ---- checkpoint format ----
// magic "PTPC", version, then the four nets, the POD basis, normalization
// statistics, Fourier matrices, and the resolved run-config text.

inline constexpr uint32_t kCheckpointVersion = 1;

namespace io {

inline void write_net(std::ostream& out, const DenseNet& n) {
    write_u32(out, uint32_t(n.layers()));
    write_u32(out, uint32_t(n.trainable ? 1 : 0));
    for (int l = 0; l < n.layers(); ++l) {
        write_u32(out, uint32_t(n.act[l]));
        write_u32(out, uint32_t(n.W[l].rows()));
        write_u32(out, uint32_t(n.W[l].cols()));
        write_mat(out, n.W[l]);
        write_mat(out, MatrixXd(n.b[l]));
    }
}

inline DenseNet read_net(std::istream& in) {
    DenseNet n;
    uint32_t layers = read_u32(in);
    n.trainable = read_u32(in) != 0;
    for (uint32_t l = 0; l < layers; ++l) {
        uint32_t act = read_u32(in);
        uint32_t rows = read_u32(in), cols = read_u32(in);
        MatrixXd W(rows, cols), b(rows, 1);
        read_mat(in, W);
        read_mat(in, b);
        n.W.push_back(std::move(W));
        n.b.push_back(b.col(0));
        n.act.push_back(Act(act));
    }
    n.input_dim = int(n.W.front().cols());
    n.output_dim = int(n.W.back().rows());
    return n;
}

}  // namespace io

inline void save_checkpoint(const PtpiModel& m, const RunConfig& cfg, const std::string& path) {
    io::check_little_endian();
    std::ofstream out(path, std::ios::binary);
    require(bool(out), "io", "cannot open " + path + " for writing");
    out.write("PTPC", 4);
    io::write_u32(out, kCheckpointVersion);
    io::write_string(out, serialize_config(cfg));
    io::write_u32(out, uint32_t(m.use_trunk ? 1 : 0));
    io::write_net(out, m.trunk);
    io::write_net(out, m.encoder);
    io::write_net(out, m.reduced);
    io::write_net(out, m.decoder);
    io::write_u32(out, uint32_t(m.fourier ? m.fourier->B.rows() : 0));
    if (m.fourier) {
        io::write_u32(out, uint32_t(m.fourier->B.cols()));
        io::write_mat(out, m.fourier->B);
    }
    io::write_u32(out, uint32_t(m.pod.V.rows()));
    io::write_u32(out, uint32_t(m.pod.V.cols()));
    io::write_mat(out, m.pod.V);
    io::write_mat(out, MatrixXd(m.pod.sigma));
    io::write_f64(out, m.pod.weight);
    io::write_f64(out, m.pod.discarded_energy);
    io::write_mat(out, MatrixXd(m.norm.x_lo));
    io::write_mat(out, MatrixXd(m.norm.x_hi));
    io::write_u32(out, uint32_t(m.norm.in_lo.size()));
    io::write_mat(out, MatrixXd(m.norm.in_lo));
    io::write_mat(out, MatrixXd(m.norm.in_hi));
    io::write_mat(out, MatrixXd(m.norm.out_scale));
    require(bool(out), "io", "write failed for " + path);
}

inline std::pair<PtpiModel, RunConfig> load_checkpoint(const std::string& path) {
    io::check_little_endian();
    std::ifstream in(path, std::ios::binary);
    require(bool(in), "io", "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    require(bool(in) && std::memcmp(magic, "PTPC", 4) == 0, "io",
            path + " is not a checkpoint");
    require(io::read_u32(in) == kCheckpointVersion, "io", "unsupported checkpoint version");
    RunConfig cfg = parse_config(io::read_string(in));

    PtpiModel m;
    m.problem = make_problem(cfg.problem);
    m.N = cfg.model.N;
    m.n = cfg.model.n;
    m.use_trunk = io::read_u32(in) != 0;
    m.trunk = io::read_net(in);
    m.encoder = io::read_net(in);
    m.reduced = io::read_net(in);
    m.decoder = io::read_net(in);
    uint32_t fm = io::read_u32(in);
    if (fm > 0) {
        uint32_t fd = io::read_u32(in);
        FourierEmbedding emb;
        emb.B.resize(fm, fd);
        io::read_mat(in, emb.B);
        m.fourier = emb;
    }
    uint32_t vr = io::read_u32(in), vc = io::read_u32(in);
    m.pod.V.resize(vr, vc);
    io::read_mat(in, m.pod.V);
    MatrixXd sigma(vc, 1);
    io::read_mat(in, sigma);
    m.pod.sigma = sigma.col(0);
    m.pod.weight = io::read_f64(in);
    m.pod.discarded_energy = io::read_f64(in);
    MatrixXd xl(m.problem.d, 1), xh(m.problem.d, 1);
    io::read_mat(in, xl);
    io::read_mat(in, xh);
    m.norm.x_lo = xl.col(0);
    m.norm.x_hi = xh.col(0);
    uint32_t bi = io::read_u32(in);
    MatrixXd il(bi, 1), ih(bi, 1), osc(m.problem.C, 1);
    io::read_mat(in, il);
    io::read_mat(in, ih);
    io::read_mat(in, osc);
    m.norm.in_lo = il.col(0);
    m.norm.in_hi = ih.col(0);
    m.norm.out_scale = osc.col(0);
    m.set_mesh(make_grid(m.problem, cfg.grid_x, cfg.grid_y));
    validate_dims(m);
    return {std::move(m), std::move(cfg)};
}

// ---- history CSV ----

inline void write_history(const TrainHistory& h, const std::string& path) {
    std::ofstream out(path);
    require(bool(out), "io", "cannot write " + path);
    out << "epoch,stage,L_N,L_n,L_Omega,L_bOmega,L_IC,total,validation_L_N\n";
    for (const auto& r : h.rows) {
        out << r.epoch << "," << r.stage << "," << sci(r.terms.data) << ","
            << sci(r.terms.latent) << "," << sci(r.terms.interior) << ","
            << sci(r.terms.boundary) << "," << sci(r.terms.ic) << "," << sci(r.total) << ",";
        if (std::isnan(r.val_data))
            out << "";
        else
            out << sci(r.val_data);
        out << "\n";
    }
}

// ---- parameter grids ----

/// Cartesian grid over the parameter box, first dimension fastest.
inline MatrixXd parameter_grid(const VectorXd& lo, const VectorXd& hi,
                               const std::vector<int>& counts) {
    const int p = int(lo.size());
    require(int(counts.size()) == p, "config", "per-dimension counts must match p");
    int total = 1;
    for (int c : counts) {
        require(c >= 1, "config", "grid counts must be positive");
        total *= c;
    }
    MatrixXd grid(total, p);
    std::vector<VectorXd> axes;
    for (int q = 0; q < p; ++q) axes.push_back(linspace(lo(q), hi(q), counts[q]));
    for (int idx = 0; idx < total; ++idx) {
        int rem = idx;
        for (int q = 0; q < p; ++q) {
            grid(idx, q) = axes[q](rem % counts[q]);
            rem /= counts[q];
        }
    }
    return grid;
}

}  // namespace ptpi
