#include "sals/cli.hpp"

#include "doctest.h"
#include "sals/analysis.hpp"
#include "sals/data_io.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sals;
using namespace sals::cli;

namespace {

const std::filesystem::path kFixtures = SALS_FIXTURE_DIR;

/// Parses a CSV body (header skipped) into string cells.
std::vector<std::vector<std::string>> parse_csv(const std::filesystem::path& path) {
    const std::string text = testing::read_file(path);
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t cell_pos = 0;
        while (cell_pos <= line.size()) {
            const std::size_t comma = std::min(line.find(',', cell_pos), line.size());
            cells.push_back(line.substr(cell_pos, comma - cell_pos));
            cell_pos = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

/// Writes a small two-community dataset for command tests and returns its paths.
DatasetPaths synth_small(const testing::TempDir& dir, std::uint64_t seed = 3) {
    const auto config = testing::write_file(
        dir.file("config.json"),
        R"({"nodes_per_class": 12, "num_classes": 2, "p_in": 0.5, "p_out": 0.05,
            "feature_dim": 4, "feature_noise": 0.8, "seed": )" +
            std::to_string(seed) + "}");
    SynthArgs args;
    args.config = config;
    args.out_dir = dir.path();
    REQUIRE(run_synth(args) == 0);
    return {dir.file("edges.tsv"), dir.file("features.csv"), dir.file("labels.csv")};
}

TrainConfig quick_train() {
    TrainConfig cfg;
    cfg.epochs = 25;
    cfg.hidden_dim = 8;
    cfg.num_layers = 2;
    return cfg;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("seed lists parse singletons, commas, and ranges") {
    CHECK(parse_seed_list("3") == std::vector<std::uint64_t>{3});
    CHECK(parse_seed_list("1,4,9") == std::vector<std::uint64_t>{1, 4, 9});
    CHECK(parse_seed_list("0..4") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
    CHECK(parse_seed_list("7..7") == std::vector<std::uint64_t>{7});
    CHECK(parse_seed_list("0..19").size() == 20);

    CHECK_THROWS_AS(parse_seed_list("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list("5..2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list("1,towel"), std::invalid_argument);
}

TEST_CASE("synth writes a loadable dataset and repeats byte-identically") {
    testing::TempDir dir("cli_synth");
    const auto config = testing::write_file(
        dir.file("config.json"),
        R"({"nodes_per_class": 50, "num_classes": 4, "p_in": 0.1, "p_out": 0.01,
            "feature_dim": 8, "feature_noise": 1.0, "seed": 7})");

    SynthArgs args;
    args.config = config;
    args.out_dir = dir.file("first");
    REQUIRE(run_synth(args) == 0);
    const Dataset ds = load_dataset(dir.file("first") / "edges.tsv",
                                    dir.file("first") / "features.csv",
                                    dir.file("first") / "labels.csv");
    CHECK(ds.graph.num_nodes == 200);
    CHECK(ds.labels.num_classes == 4);
    CHECK(ds.features.dim() == 8);

    args.out_dir = dir.file("second");
    REQUIRE(run_synth(args) == 0);
    for (const char* name : {"edges.tsv", "features.csv", "labels.csv"}) {
        CHECK(testing::read_file(dir.file("first") / name) ==
              testing::read_file(dir.file("second") / name));
    }

    const auto bad = testing::write_file(
        dir.file("bad.json"),
        R"({"nodes_per_class": 10, "num_classes": 2, "p_in": 0.01, "p_out": 0.1,
            "feature_dim": 4, "feature_noise": 1.0, "seed": 7})");
    SynthArgs bad_args;
    bad_args.config = bad;
    bad_args.out_dir = dir.file("bad_out");
    CHECK_THROWS_AS(run_synth(bad_args), std::invalid_argument);
}

TEST_CASE("hard targets export as one-hot rows") {
    testing::TempDir dir("cli_targets_hard");
    const DatasetPaths data = synth_small(dir);

    TargetsArgs args;
    args.data = data;
    args.split_seed = 0;
    args.kind = TargetKind::Hard;
    args.out_dir = dir.file("targets");
    REQUIRE(run_targets(args) == 0);

    const auto rows = parse_csv(dir.file("targets") / "targets.csv");
    REQUIRE(rows.size() == 24);
    const Dataset ds = load_dataset(data.edges, data.features, data.labels);
    const SplitMask mask = make_splits(24, {}, 0);
    for (const auto& row : rows) {
        REQUIRE(row.size() == 3);  // node_id + 2 classes
        const NodeId id = static_cast<NodeId>(std::stoul(row[0]));
        if (!mask.is_train(id)) continue;
        const int label = ds.labels.label(id);
        CHECK(std::stod(row[1 + static_cast<std::size_t>(label)]) == 1.0);
        CHECK(std::stod(row[1 + static_cast<std::size_t>(1 - label)]) == 0.0);
    }
}

TEST_CASE("structure weight zero reproduces plain smoothing byte for byte") {
    testing::TempDir dir("cli_targets_ls");
    const DatasetPaths data = synth_small(dir);

    TargetsArgs args;
    args.data = data;
    args.split_seed = 2;
    args.epsilon = 0.3;
    args.kind = TargetKind::Sals;
    args.gamma = 0.0;
    args.out_dir = dir.file("sals");
    REQUIRE(run_targets(args) == 0);

    args.kind = TargetKind::Ls;
    args.out_dir = dir.file("ls");
    REQUIRE(run_targets(args) == 0);

    CHECK(testing::read_file(dir.file("sals") / "targets.csv") ==
          testing::read_file(dir.file("ls") / "targets.csv"));
}

TEST_CASE("default smoothing on the checked-in graph matches hand arithmetic") {
    // toy10: edges 0-1, 0-9, 1-2, 2-3, 2-5, 3-4, 5-6, 6-7, 7-9 plus isolated
    // node 8; nodes 0-4 carry class 0 and nodes 5-9 class 1.
    TargetsArgs args;
    args.data = {kFixtures / "toy10_edges.tsv", kFixtures / "toy10_features.csv",
                 kFixtures / "toy10_labels.csv"};
    args.split_seed = 0;

    // The expectations below are frozen against this exact split.
    const SplitMask mask = make_splits(10, {}, 0);
    REQUIRE(mask.indices(Role::Train) == std::vector<NodeId>{2, 3, 5, 6, 7, 9});
    REQUIRE(mask.indices(Role::Val) == std::vector<NodeId>{0, 4});
    REQUIRE(mask.indices(Role::Test) == std::vector<NodeId>{1, 8});

    testing::TempDir dir("cli_targets_toy10");
    args.out_dir = dir.path();
    REQUIRE(run_targets(args) == 0);
    const auto rows = parse_csv(dir.file("targets.csv"));
    REQUIRE(rows.size() == 10);

    // Worked by hand with epsilon 0.4, gamma 0.8, C = 2:
    //   node 2: labeled neighbors {3:0, 5:1} -> eta (1/2,1/2) -> (0.80, 0.20)
    //   node 3: labeled neighbors {2:0}      -> eta (1,0)     -> (0.96, 0.04)
    //   node 5: labeled neighbors {2:0, 6:1} -> eta (1/2,1/2) -> (0.20, 0.80)
    //   node 6: labeled neighbors {5:1, 7:1} -> eta (0,1)     -> (0.04, 0.96)
    //   node 7: labeled neighbors {6:1, 9:1} -> eta (0,1)     -> (0.04, 0.96)
    //   node 9: labeled neighbors {7:1}      -> eta (0,1)     -> (0.04, 0.96)
    // Non-train rows echo the hard label.
    const std::vector<std::pair<double, double>> expected = {
        {1.0, 0.0},    // 0: val, label 0
        {1.0, 0.0},    // 1: test, label 0
        {0.80, 0.20},  // 2
        {0.96, 0.04},  // 3
        {1.0, 0.0},    // 4: val, label 0
        {0.20, 0.80},  // 5
        {0.04, 0.96},  // 6
        {0.04, 0.96},  // 7
        {0.0, 1.0},    // 8: test, label 1
        {0.04, 0.96},  // 9
    };
    for (std::size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(rows[i].size() == 3);
        CHECK(rows[i][0] == std::to_string(i));
        CHECK(std::stod(rows[i][1]) ==
              doctest::Approx(expected[i].first).epsilon(1e-12));
        CHECK(std::stod(rows[i][2]) ==
              doctest::Approx(expected[i].second).epsilon(1e-12));
    }

    TargetsArgs bad = args;
    bad.epsilon = 1.5;
    CHECK_THROWS_AS(run_targets(bad), std::invalid_argument);
}

TEST_CASE("training writes a reproducible report, history, and checkpoint") {
    testing::TempDir dir("cli_train");
    const DatasetPaths data = synth_small(dir);

    TrainArgs args;
    args.data = data;
    args.split_seed = 0;
    args.train = quick_train();
    args.seeds = {0, 1};
    args.out_dir = dir.file("first");
    REQUIRE(run_train(args) == 0);

    for (const char* name :
         {"report.json", "history_seed0.csv", "history_seed1.csv", "model_seed0.bin",
          "model_seed1.bin"}) {
        CHECK_MESSAGE(std::filesystem::exists(dir.file("first") / name),
                      "missing artifact " << name);
    }

    const auto report =
        nlohmann::json::parse(testing::read_file(dir.file("first") / "report.json"));
    CHECK(report.at("command") == "train");
    CHECK(report.at("aggregate").at("runs_requested") == 2);
    CHECK(report.at("aggregate").at("runs_succeeded") == 2);
    CHECK(report.at("runs").size() == 2);
    for (const auto& run : report.at("runs")) {
        CHECK(run.at("test_accuracy").get<double>() >= 0.0);
        CHECK(run.at("test_accuracy").get<double>() <= 1.0);
        CHECK(run.at("test_ece").get<double>() >= 0.0);
        CHECK(run.contains("best_epoch"));
    }
    const double mean = report.at("aggregate").at("mean_test_accuracy").get<double>();

    const auto history = parse_csv(dir.file("first") / "history_seed0.csv");
    REQUIRE(!history.empty());
    CHECK(history[0].size() == 3);  // epoch, train_loss, val_accuracy
    CHECK(history[0][0] == "0");

    args.out_dir = dir.file("second");
    REQUIRE(run_train(args) == 0);
    for (const char* name :
         {"report.json", "history_seed0.csv", "history_seed1.csv", "model_seed0.bin",
          "model_seed1.bin"}) {
        CHECK_MESSAGE(testing::read_file(dir.file("first") / name) ==
                          testing::read_file(dir.file("second") / name),
                      "artifact differs between identical runs: " << name);
    }

    // The sweep command aggregates the very same runs.
    SweepArgs sweep_args;
    sweep_args.data = data;
    sweep_args.split_seed = 0;
    sweep_args.epsilon_values = {0.4};
    sweep_args.gamma_values = {0.8};
    sweep_args.num_seeds = 2;
    sweep_args.train = quick_train();
    sweep_args.out_dir = dir.file("sweep");
    REQUIRE(run_sweep(sweep_args) == 0);
    const auto sweep_rows = parse_csv(dir.file("sweep") / "sweep.csv");
    REQUIRE(sweep_rows.size() == 1);
    REQUIRE(sweep_rows[0].size() == 6);
    CHECK(std::stod(sweep_rows[0][0]) == 0.4);
    CHECK(std::stod(sweep_rows[0][1]) == 0.8);
    CHECK(std::stod(sweep_rows[0][2]) == mean);  // bitwise: same seeds, same data
    CHECK(sweep_rows[0][4] == "2");
    CHECK(sweep_rows[0][5].empty());

    TrainArgs no_seeds = args;
    no_seeds.seeds = {};
    CHECK_THROWS_AS(run_train(no_seeds), std::invalid_argument);
}

TEST_CASE("analysis emits the residual, calibration, and profile artifacts") {
    testing::TempDir dir("cli_analyze");
    const DatasetPaths data = synth_small(dir, 5);

    TrainArgs train_args;
    train_args.data = data;
    train_args.split_seed = 0;
    train_args.train = quick_train();
    train_args.seeds = {0};
    train_args.out_dir = dir.file("run");
    REQUIRE(run_train(train_args) == 0);

    AnalyzeArgs args;
    args.data = data;
    args.split_seed = 0;
    args.model = dir.file("run") / "model_seed0.bin";
    args.ratio_threshold = 0.0;
    args.out_dir = dir.file("analysis");
    REQUIRE(run_analyze(args) == 0);

    const auto report =
        nlohmann::json::parse(testing::read_file(dir.file("analysis") / "analysis.json"));
    CHECK(report.at("command") == "analyze");
    CHECK(report.at("max_decomposition_residual").get<double>() < 1e-10);
    CHECK(report.at("test_ece").get<double>() >= 0.0);
    CHECK(report.at("test_ece").get<double>() <= 1.0);

    const auto bins = parse_csv(dir.file("analysis") / "reliability.csv");
    REQUIRE(bins.size() == 10);
    std::size_t bin_total = 0;
    for (const auto& row : bins) {
        REQUIRE(row.size() == 6);
        bin_total += std::stoul(row[5]);
    }
    const SplitMask mask = make_splits(24, {}, 0);
    CHECK(bin_total == mask.count(Role::Test));

    const auto buckets = parse_csv(dir.file("analysis") / "ratio_profile.csv");
    REQUIRE(buckets.size() == 6);
    std::size_t bucket_total = 0;
    for (const auto& row : buckets) {
        REQUIRE(row.size() == 5);
        bucket_total += std::stoul(row[1]);
    }
    CHECK(bucket_total == mask.count(Role::Train));
    CHECK(std::stod(buckets.back()[4]) == doctest::Approx(1.0).epsilon(1e-9));

    const auto embeddings = parse_csv(dir.file("analysis") / "embeddings.csv");
    CHECK(embeddings.size() == mask.count(Role::Train));  // threshold 0 keeps all

    AnalyzeArgs missing = args;
    missing.model = dir.file("run") / "no_such_model.bin";
    CHECK_THROWS_AS(run_analyze(missing), std::runtime_error);
}

TEST_CASE("sweep validates its grid upfront") {
    testing::TempDir dir("cli_sweep");
    const DatasetPaths data = synth_small(dir);

    SweepArgs args;
    args.data = data;
    args.split_seed = 0;
    args.epsilon_values = {0.2, 0.6};
    args.gamma_values = {0.0, 1.0};
    args.num_seeds = 3;
    args.train = quick_train();
    args.out_dir = dir.file("grid");
    REQUIRE(run_sweep(args) == 0);

    const auto rows = parse_csv(dir.file("grid") / "sweep.csv");
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) {
        REQUIRE(row.size() == 6);
        const double acc = std::stod(row[2]);
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        CHECK(row[4] == "3");
        CHECK(row[5].empty());
    }

    SweepArgs bad = args;
    bad.epsilon_values = {0.4, 2.0};
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = args;
    bad.num_seeds = 0;
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
}

}  // TEST_SUITE
