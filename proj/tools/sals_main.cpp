#include "sals/cli.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <string>

namespace {

void add_dataset_flags(CLI::App& cmd, sals::cli::DatasetPaths& paths,
                       std::uint64_t& split_seed) {
    cmd.add_option("--edges", paths.edges, "edge list file (\"i\\tj\" per line)")
        ->required();
    cmd.add_option("--features", paths.features, "node feature CSV")->required();
    cmd.add_option("--labels", paths.labels, "node label CSV (node_id,label)")->required();
    cmd.add_option("--split-seed", split_seed, "seed of the 60/20/20 node split")
        ->capture_default_str();
}

void add_smoothing_flags(CLI::App& cmd, std::string& kind, double& epsilon, double& gamma) {
    cmd.add_option("--kind", kind, "target kind: hard, ls, or sals")
        ->capture_default_str();
    cmd.add_option("--epsilon", epsilon, "smoothing strength")->capture_default_str();
    cmd.add_option("--gamma", gamma, "neighborhood share of the smoothing mass")
        ->capture_default_str();
}

void add_train_flags(CLI::App& cmd, sals::TrainConfig& cfg) {
    cmd.add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
    cmd.add_option("--weight-decay", cfg.weight_decay, "L2 penalty on the first-layer weights")
        ->capture_default_str();
    cmd.add_option("--dropout", cfg.dropout, "dropout rate on hidden activations")
        ->capture_default_str();
    cmd.add_option("--epochs", cfg.epochs, "maximum training epochs")
        ->capture_default_str();
    cmd.add_option("--hidden", cfg.hidden_dim, "hidden layer width")
        ->capture_default_str();
    cmd.add_option("--layers", cfg.num_layers, "number of graph convolution layers")
        ->capture_default_str();
    cmd.add_option("--patience", cfg.early_stop_patience,
                   "epochs without a validation improvement before stopping")
        ->capture_default_str();
    cmd.add_flag("--residual", cfg.residual,
                 "add skip connections on equal-width hidden layers");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Structure-aware label smoothing for node classification: synthesize "
        "datasets, build soft targets, train graph convolutional networks, and "
        "export calibration/loss-distribution reports."};
    app.require_subcommand(1);

    sals::cli::SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a block-model dataset");
    synth_cmd->add_option("--config", synth.config, "block-model JSON config")->required();
    synth_cmd->add_option("--out-dir", synth.out_dir, "output directory")
        ->capture_default_str();

    sals::cli::TargetsArgs targets;
    std::string targets_kind = "sals";
    auto* targets_cmd = app.add_subcommand("targets", "emit the soft target matrix");
    add_dataset_flags(*targets_cmd, targets.data, targets.split_seed);
    add_smoothing_flags(*targets_cmd, targets_kind, targets.epsilon, targets.gamma);
    targets_cmd->add_option("--out-dir", targets.out_dir, "output directory")
        ->capture_default_str();

    sals::cli::TrainArgs train;
    std::string train_kind = "sals";
    std::string train_seeds = "0";
    auto* train_cmd = app.add_subcommand("train", "train one model per seed");
    add_dataset_flags(*train_cmd, train.data, train.split_seed);
    add_smoothing_flags(*train_cmd, train_kind, train.epsilon, train.gamma);
    add_train_flags(*train_cmd, train.train);
    train_cmd
        ->add_option("--seeds", train_seeds, "model seeds: \"3\", \"0,4,9\", or \"0..19\"")
        ->capture_default_str();
    train_cmd->add_option("--out-dir", train.out_dir, "output directory")
        ->capture_default_str();

    sals::cli::AnalyzeArgs analyze;
    std::string analyze_kind = "sals";
    auto* analyze_cmd =
        app.add_subcommand("analyze", "calibration, loss profile, and embedding reports");
    add_dataset_flags(*analyze_cmd, analyze.data, analyze.split_seed);
    analyze_cmd->add_option("--model", analyze.model, "model checkpoint from train")
        ->required();
    add_smoothing_flags(*analyze_cmd, analyze_kind, analyze.epsilon, analyze.gamma);
    analyze_cmd
        ->add_option("--ratio-threshold", analyze.ratio_threshold,
                     "export embeddings of train nodes with own-class ratio >= threshold")
        ->capture_default_str();
    analyze_cmd->add_option("--out-dir", analyze.out_dir, "output directory")
        ->capture_default_str();

    sals::cli::SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid of (epsilon, gamma) training runs");
    add_dataset_flags(*sweep_cmd, sweep.data, sweep.split_seed);
    sweep_cmd->add_option("--epsilon", sweep.epsilon_values, "epsilon grid values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--gamma", sweep.gamma_values, "gamma grid values")
        ->required()
        ->delimiter(',');
    sweep_cmd->add_option("--seeds", sweep.num_seeds, "number of seeds per cell (0-based)")
        ->capture_default_str();
    add_train_flags(*sweep_cmd, sweep.train);
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "output directory")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return sals::cli::run_synth(synth);
        if (targets_cmd->parsed()) {
            targets.kind = sals::parse_target_kind(targets_kind);
            return sals::cli::run_targets(targets);
        }
        if (train_cmd->parsed()) {
            train.kind = sals::parse_target_kind(train_kind);
            train.seeds = sals::cli::parse_seed_list(train_seeds);
            return sals::cli::run_train(train);
        }
        if (analyze_cmd->parsed()) {
            analyze.kind = sals::parse_target_kind(analyze_kind);
            return sals::cli::run_analyze(analyze);
        }
        if (sweep_cmd->parsed()) return sals::cli::run_sweep(sweep);
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
