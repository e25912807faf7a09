// End-to-end exercise of the command-line tool on a miniature configuration:
// make-data determinism, train artifacts, checkpoint evaluation, ablation
// layout, and failure exit codes.

#include "ptpi/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

#define REQUIRE(cond, msg)                                                        \
    do {                                                                          \
        if (!(cond)) {                                                            \
            std::cerr << "[FAIL] " << __FILE__ << ":" << __LINE__ << " " << msg   \
                      << "\n";                                                    \
            std::exit(1);                                                         \
        }                                                                         \
    } while (0)

namespace {

std::string g_cli;

int run(const std::string& args) {
    std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in), "missing file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* kTinyConfig = R"cfg(
[problem]
name = eikonal
grid = 8 8

[dims]
pod_rank = 2
latent = 2

[trunk]
hidden = 12 12
activation = elu

[encoder]
hidden = 10
activation = elu

[reduced]
hidden = 10
activation = elu

[decoder]
hidden = 10
activation = elu

[data]
P_sup_lo = 0.1
P_sup_hi = 0.5
n_sup = 9
P_test_lo = 0.13
P_test_hi = 0.98
n_test = 6
n_t = 1
n_t_test = 1

[train]
strategy = ptpi
trunk_epochs = 30
trunk_lr = 1e-3
trunk_batch = 16
branch_epochs = 10
branch_lr = 1e-3
finetune_epochs = 5
finetune_lr = 3e-4
sup_batch = 2
res_batch = 4
resample_every = 3
n_res = 20
finetune_interior = 24
boundary_count = 12
w_data = 0.5
w_latent = 0.5
w_interior = 0.5
w_boundary = 100
w_ic = 0
validation_fraction = 0.12
clip_gradients = 1
clip_norm = 10
seed = 3
pod_method = exact
P_res_lo = 0.1
P_res_hi = 1.1
)cfg";

}  // namespace

int main(int argc, char** argv) {
    REQUIRE(argc >= 2, "usage: test_cli <path-to-cli>");
    g_cli = argv[1];
    std::string dir = "/tmp/ptpi_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir + "/run.cfg") << kTinyConfig;

    // make-data: deterministic regeneration, expected column counts
    REQUIRE(run("make-data --config " + dir + "/run.cfg --out " + dir + "/a") == 0,
            "make-data failed");
    REQUIRE(run("make-data --config " + dir + "/run.cfg --out " + dir + "/b") == 0,
            "make-data rerun failed");
    REQUIRE(slurp(dir + "/a/train.ptpi") == slurp(dir + "/b/train.ptpi"),
            "regenerated train dataset differs");
    REQUIRE(slurp(dir + "/a/test.ptpi") == slurp(dir + "/b/test.ptpi"),
            "regenerated test dataset differs");
    {
        ptpi::SnapshotSet train = ptpi::load_dataset(dir + "/a/train.ptpi");
        ptpi::SnapshotSet test = ptpi::load_dataset(dir + "/a/test.ptpi");
        REQUIRE(train.n_cols() == 9, "train column count");
        REQUIRE(test.n_cols() == 6, "test column count");
        REQUIRE(train.n_vertices() == 64, "mesh size");
    }

    // train: run directory artifacts
    REQUIRE(run("train --config " + dir + "/run.cfg --out " + dir + "/a") == 0,
            "train failed");
    for (const char* f : {"checkpoint.ptpic", "history.csv", "config.resolved.cfg",
                          "summary.csv", "e_of_mu.csv", "E_of_t.csv", "global_error.csv"})
        REQUIRE(fs::exists(dir + "/a/" + std::string(f)), std::string("missing artifact ") + f);

    // history has the pinned header and stage-start rows
    {
        std::ifstream h(dir + "/a/history.csv");
        std::string header;
        std::getline(h, header);
        REQUIRE(header == "epoch,stage,L_N,L_n,L_Omega,L_bOmega,L_IC,total,validation_L_N",
                "history header mismatch");
        std::string all = header;
        std::string line;
        bool trunk0 = false, branch0 = false, fine0 = false;
        while (std::getline(h, line)) {
            if (line.rfind("0,trunk", 0) == 0) trunk0 = true;
            if (line.rfind("0,branch", 0) == 0) branch0 = true;
            if (line.rfind("0,finetune", 0) == 0) fine0 = true;
        }
        REQUIRE(trunk0 && branch0 && fine0, "missing stage-start history rows");
    }

    // evaluate a saved checkpoint on the test set
    REQUIRE(run("evaluate --checkpoint " + dir + "/a/checkpoint.ptpic --data " + dir +
                "/a/test.ptpi --out " + dir + "/eval") == 0,
            "evaluate failed");
    REQUIRE(fs::exists(dir + "/eval/e_of_mu.csv"), "evaluate wrote no metrics");

    // checkpoint loads back to an equivalent model
    {
        auto [model, cfg] = ptpi::load_checkpoint(dir + "/a/checkpoint.ptpic");
        REQUIRE(cfg.problem == "eikonal", "checkpoint config problem");
        REQUIRE(model.N == 2 && model.n == 2, "checkpoint dims");
    }

    // deterministic rerun: same config, same seed, same global error
    REQUIRE(run("make-data --config " + dir + "/run.cfg --out " + dir + "/c") == 0,
            "make-data c failed");
    REQUIRE(run("train --config " + dir + "/run.cfg --out " + dir + "/c") == 0,
            "train c failed");
    REQUIRE(slurp(dir + "/a/global_error.csv") == slurp(dir + "/c/global_error.csv"),
            "training is not reproducible from its config");

    // ablation on a 9-point supervised set: subsets 5 and 9... sizes double
    // until depletion, so expect n5 and (no n10) -> just n5 with both
    // strategies, 2 report directories plus the summary
    REQUIRE(run("ablate --config " + dir + "/run.cfg --out " + dir + "/abl") == 0,
            "ablate failed");
    REQUIRE(fs::exists(dir + "/abl/n5_ptpi/e_of_mu.csv"), "missing ablate ptpi report");
    REQUIRE(fs::exists(dir + "/abl/n5_pod-dl-rom/e_of_mu.csv"),
            "missing ablate baseline report");
    REQUIRE(fs::exists(dir + "/abl/ablate_summary.csv"), "missing ablate summary");

    // bench-ad smoke run (tiny repeats)
    REQUIRE(run("bench-ad --out " + dir + "/bench --repeats 2 --batch 20") == 0,
            "bench-ad failed");
    {
        std::ifstream b(dir + "/bench/bench_ad.csv");
        std::string header;
        std::getline(b, header);
        REQUIRE(header ==
                    "scenario,depth,width,batch,repeats,d1_min,d1_mean,d1_max,d2_min,d2_mean,"
                    "d2_max",
                "bench header mismatch");
        int rows = 0;
        std::string line;
        while (std::getline(b, line))
            if (!line.empty()) ++rows;
        REQUIRE(rows == 8 + 9, "bench sweep row count");
    }

    // failure paths exit nonzero
    REQUIRE(run("train --config /nonexistent.cfg --out " + dir) != 0,
            "missing config must fail");
    std::ofstream(dir + "/bad.cfg") << "[problem]\nname = eikonal\nbogus_key = 1\n";
    REQUIRE(run("make-data --config " + dir + "/bad.cfg --out " + dir) != 0,
            "unknown config key must fail");

    std::cout << "test_cli: all checks passed\n";
    return 0;
}
