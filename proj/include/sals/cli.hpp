#pragma once

#include "sals/gnn.hpp"
#include "sals/targets.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sals::cli {

/// Paths of the three dataset files shared by every data-consuming command.
struct DatasetPaths {
    std::filesystem::path edges;
    std::filesystem::path features;
    std::filesystem::path labels;
};

struct SynthArgs {
    std::filesystem::path config;
    std::filesystem::path out_dir = ".";
};

struct TargetsArgs {
    DatasetPaths data;
    std::uint64_t split_seed = 0;
    TargetKind kind = TargetKind::Sals;
    double epsilon = 0.4;
    double gamma = 0.8;
    std::filesystem::path out_dir = ".";
};

struct TrainArgs {
    DatasetPaths data;
    std::uint64_t split_seed = 0;
    TargetKind kind = TargetKind::Sals;
    double epsilon = 0.4;
    double gamma = 0.8;
    TrainConfig train;  // train.seed is overridden per run
    std::vector<std::uint64_t> seeds = {0};
    std::filesystem::path out_dir = ".";
};

struct AnalyzeArgs {
    DatasetPaths data;
    std::uint64_t split_seed = 0;
    std::filesystem::path model;  // checkpoint written by the train command
    TargetKind kind = TargetKind::Sals;
    double epsilon = 0.4;
    double gamma = 0.8;
    double ratio_threshold = 0.5;  // embedding export keeps r_{y_i} >= threshold
    std::filesystem::path out_dir = ".";
};

struct SweepArgs {
    DatasetPaths data;
    std::uint64_t split_seed = 0;
    std::vector<double> epsilon_values;
    std::vector<double> gamma_values;
    int num_seeds = 1;  // runs seeds 0..num_seeds-1 per grid cell
    TrainConfig train;
    std::filesystem::path out_dir = ".";
};

/// Command bodies: each validates its arguments, writes its artifacts under
/// out_dir, prints a short human summary (plus wall-clock time, which is
/// deliberately kept out of the machine-readable files so repeated runs stay
/// byte-identical), and returns a process exit code. Per-seed training
/// failures are recorded in the report; the exit code is 0 iff every
/// requested run succeeded. Argument/file errors throw.
int run_synth(const SynthArgs& args);
int run_targets(const TargetsArgs& args);
int run_train(const TrainArgs& args);
int run_analyze(const AnalyzeArgs& args);
int run_sweep(const SweepArgs& args);

/// "3", "1,4,9", and "0..19" (inclusive range) forms for --seeds lists.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace sals::cli
