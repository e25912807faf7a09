// Command-line front end: dataset generation, training, evaluation, the
// supervised-data ablation study, and the derivative-cost benchmark.

#include "ptpi/bench.hpp"
#include "ptpi/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ptpi;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    int64_t seed_override = -1;
};

RunConfig load_run_config(const CommonArgs& args) {
    require(!args.config_path.empty(), "config", "--config is required");
    RunConfig cfg = load_config(args.config_path);
    if (args.seed_override >= 0) {
        cfg.train.seed = uint64_t(args.seed_override);
        cfg.model.seed = cfg.train.seed;
    }
    return cfg;
}

SnapshotSet build_dataset(const RunConfig& cfg, const PDEProblem& problem, bool test_split) {
    MatrixXd coords = make_grid(problem, cfg.grid_x, cfg.grid_y);
    const VectorXd& lo = test_split ? cfg.p_test_lo : cfg.p_sup_lo;
    const VectorXd& hi = test_split ? cfg.p_test_hi : cfg.p_sup_hi;
    const std::vector<int>& counts = test_split ? cfg.n_test : cfg.n_sup;
    require(!counts.empty(), "config", "parameter grid counts are empty");
    MatrixXd params = parameter_grid(lo, hi, counts);
    VectorXd times = time_grid(problem, test_split ? cfg.n_t_test : cfg.n_t);
    return generate_snapshots(problem, params, times, coords);
}

void write_run_summary(const std::string& dir, const TrainResult& result) {
    std::ofstream out(dir + "/summary.csv");
    require(bool(out), "io", "cannot write " + dir + "/summary.csv");
    out << "selected_val_rel,trunk_max_row_error,branch_epoch_seconds,finetune_epoch_seconds\n";
    out << sci(result.selected_val_rel) << "," << sci(result.trunk_max_row_error) << ","
        << sci(result.branch_epoch_seconds) << "," << sci(result.finetune_epoch_seconds)
        << "\n";
}

int cmd_make_data(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    PDEProblem problem = make_problem(cfg.problem);
    fs::create_directories(args.out_dir);
    SnapshotSet train = build_dataset(cfg, problem, false);
    SnapshotSet test = build_dataset(cfg, problem, true);
    save_dataset(train, args.out_dir + "/train.ptpi");
    save_dataset(test, args.out_dir + "/test.ptpi");
    std::cout << "wrote " << args.out_dir << "/train.ptpi (" << train.n_cols()
              << " columns) and test.ptpi (" << test.n_cols() << " columns)\n";
    return 0;
}

void warn_uncovered_test_range(const RunConfig& cfg, const PDEProblem& problem) {
    if (!cfg.train.res_lo.size() || !cfg.p_test_lo.size()) return;
    bool covered = true;
    for (int q = 0; q < problem.p; ++q)
        if (cfg.train.res_lo(q) > cfg.p_test_lo(q) || cfg.train.res_hi(q) < cfg.p_test_hi(q))
            covered = false;
    if (!covered)
        std::cerr << "warning: residual sampling bounds do not cover the test parameter "
                     "range\n";
}

int cmd_train(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    PDEProblem problem = make_problem(cfg.problem);
    warn_uncovered_test_range(cfg, problem);
    SnapshotSet train = load_dataset(args.out_dir + "/train.ptpi");

    PtpiModel model = build_model(problem, train, cfg.model, cfg.train.res_lo,
                                  cfg.train.res_hi);
    PipelineConfig pc = cfg.train;
    pc.verbose = true;
    TrainResult result = run_pipeline(model, train, pc);

    fs::create_directories(args.out_dir);
    std::ofstream snap(args.out_dir + "/config.resolved.cfg");
    snap << serialize_config(cfg);
    snap.close();
    write_history(result.history, args.out_dir + "/history.csv");
    save_checkpoint(model, cfg, args.out_dir + "/checkpoint.ptpic");
    write_run_summary(args.out_dir, result);

    std::string test_path = args.out_dir + "/test.ptpi";
    if (fs::exists(test_path)) {
        SnapshotSet test = load_dataset(test_path);
        model.set_mesh(test.coords);
        ErrorReport rep = error_metrics(predict_snapshots(model, test), test);
        write_error_report(rep, test, args.out_dir);
        std::cout << "global_E = " << sci(rep.global_E) << "\n";
    }
    std::cout << "checkpoint written to " << args.out_dir << "/checkpoint.ptpic\n";
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                 const std::string& out_dir) {
    auto [model, cfg] = load_checkpoint(checkpoint_path);
    SnapshotSet data = load_dataset(data_path);
    if (!model.use_trunk)
        require(data.n_vertices() * model.channels() == model.pod.V.rows(), "shape",
                "the data-only baseline needs the training mesh for evaluation");
    model.set_mesh(data.coords);
    fs::create_directories(out_dir);
    ErrorReport rep = error_metrics(predict_snapshots(model, data), data);
    write_error_report(rep, data, out_dir);
    std::cout << "global_E = " << sci(rep.global_E) << "\n";
    return 0;
}

int cmd_ablate(const CommonArgs& args) {
    RunConfig cfg = load_run_config(args);
    PDEProblem problem = make_problem(cfg.problem);
    require(problem.p == 1, "config", "the ablation study needs a one-dimensional parameter");
    fs::create_directories(args.out_dir);

    SnapshotSet full = build_dataset(cfg, problem, false);
    SnapshotSet test = build_dataset(cfg, problem, true);
    auto subsets = ablation_subsets(full.params.col(0), cfg.train.seed + 909);

    std::ofstream summary(args.out_dir + "/ablate_summary.csv");
    summary << "n_data,strategy,global_E\n";

    for (const auto& subset : subsets) {
        SnapshotSet part;
        part.coords = full.coords;
        part.times = full.times;
        part.channels = full.channels;
        part.params.resize(int(subset.size()), 1);
        part.fields.resize(full.fields.rows(), int(subset.size()) * full.n_times());
        for (size_t j = 0; j < subset.size(); ++j) {
            part.params(int(j), 0) = full.params(subset[j], 0);
            for (int k = 0; k < full.n_times(); ++k)
                part.fields.col(part.col_index(int(j), k)) =
                    full.fields.col(full.col_index(subset[j], k));
        }

        for (const std::string& strategy : {std::string("ptpi"), std::string("pod-dl-rom")}) {
            RunConfig run_cfg = cfg;
            run_cfg.train.strategy = strategy;
            PtpiModel model = build_model(problem, part, run_cfg.model, run_cfg.train.res_lo,
                                          run_cfg.train.res_hi);
            PipelineConfig pc = run_cfg.train;
            pc.verbose = false;
            run_pipeline(model, part, pc);

            model.set_mesh(test.coords);
            ErrorReport rep = error_metrics(predict_snapshots(model, test), test);
            std::string dir = args.out_dir + "/n" + std::to_string(subset.size()) + "_" +
                              strategy;
            fs::create_directories(dir);
            write_error_report(rep, test, dir);
            summary << subset.size() << "," << strategy << "," << sci(rep.global_E) << "\n";
            std::cout << "n_data=" << subset.size() << " strategy=" << strategy
                      << " global_E=" << sci(rep.global_E) << "\n";
        }
    }
    return 0;
}

int cmd_bench_ad(const std::string& out_dir, int batch, int repeats) {
    fs::create_directories(out_dir);
    auto rows = bench_ad(default_bench_depths(), default_bench_widths(), batch, repeats);
    std::ofstream out(out_dir + "/bench_ad.csv");
    require(bool(out), "io", "cannot write " + out_dir + "/bench_ad.csv");
    out << "scenario,depth,width,batch,repeats,d1_min,d1_mean,d1_max,d2_min,d2_mean,d2_max\n";
    for (const auto& r : rows) {
        out << r.scenario << "," << r.depth << "," << r.width << "," << r.batch << ","
            << r.repeats << "," << sci(r.d1_min) << "," << sci(r.d1_mean) << ","
            << sci(r.d1_max) << "," << sci(r.d2_min) << "," << sci(r.d2_mean) << ","
            << sci(r.d2_max) << "\n";
        std::cout << r.scenario << " depth=" << r.depth << " width=" << r.width
                  << " d1_mean=" << sci(r.d1_mean) << " d2_mean=" << sci(r.d2_mean) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physics-informed reduced-order model trainer"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string checkpoint_path, data_path;
    int batch = 100, repeats = 10;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config) sub->add_option("--config", common.config_path, "run configuration");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--seed", common.seed_override, "seed override");
    };

    CLI::App* mk = app.add_subcommand("make-data", "generate train/test snapshot datasets");
    add_common(mk, true);
    CLI::App* tr = app.add_subcommand("train", "train a model from <out>/train.ptpi");
    add_common(tr, true);
    CLI::App* ev = app.add_subcommand("evaluate", "error metrics of a checkpoint on a dataset");
    ev->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    ev->add_option("--data", data_path, "snapshot dataset")->required();
    ev->add_option("--out", common.out_dir, "output directory");
    CLI::App* ab = app.add_subcommand("ablate",
                                      "nested supervised subsets, both training strategies");
    add_common(ab, true);
    CLI::App* be = app.add_subcommand("bench-ad", "derivative evaluation cost sweep");
    be->add_option("--out", common.out_dir, "output directory");
    be->add_option("--batch", batch, "evaluation batch size");
    be->add_option("--repeats", repeats, "timed runs per configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (mk->parsed()) return cmd_make_data(common);
        if (tr->parsed()) return cmd_train(common);
        if (ev->parsed()) return cmd_evaluate(checkpoint_path, data_path, common.out_dir);
        if (ab->parsed()) return cmd_ablate(common);
        if (be->parsed()) return cmd_bench_ad(common.out_dir, batch, repeats);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
