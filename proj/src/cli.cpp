#include "sals/cli.hpp"

#include "sals/analysis.hpp"
#include "sals/data_io.hpp"

#include "json.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace sals::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

class Stopwatch {
  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Wall-clock goes to stdout only: the report files must not change between
/// identical runs.
void print_elapsed(const Stopwatch& watch) {
    std::printf("elapsed seconds: %.3f\n", watch.seconds());
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical on every platform
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const ordered_json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::filesystem::path prepare_out_dir(const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    return out_dir;
}

Dataset load(const DatasetPaths& paths) {
    return load_dataset(paths.edges, paths.features, paths.labels);
}

void check_smoothing_flags(TargetKind kind, double epsilon, double gamma) {
    if (kind == TargetKind::Hard) return;
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("--epsilon must lie in (0, 1], got " +
                                    format_double(epsilon));
    }
    if (kind == TargetKind::Sals && !(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("--gamma must lie in [0, 1], got " +
                                    format_double(gamma));
    }
}

TargetDistribution build_targets(const Dataset& dataset, const SplitMask& mask,
                                 TargetKind kind, double epsilon, double gamma) {
    check_smoothing_flags(kind, epsilon, gamma);
    switch (kind) {
        case TargetKind::Hard:
            return hard_targets(dataset.labels, mask);
        case TargetKind::Ls:
            return ls_targets(dataset.labels, mask, epsilon);
        case TargetKind::Sals: {
            const NeighborhoodStats stats =
                compute_ratios(dataset.graph, dataset.labels, mask);
            SmoothingConfig cfg;
            cfg.epsilon = epsilon;
            cfg.gamma = gamma;
            return sals_targets(dataset.labels, mask, stats, cfg);
        }
    }
    throw std::logic_error("unreachable target kind");
}

ordered_json dataset_config_echo(const DatasetPaths& paths, std::uint64_t split_seed) {
    ordered_json echo;
    echo["edges"] = paths.edges.string();
    echo["features"] = paths.features.string();
    echo["labels"] = paths.labels.string();
    echo["split_seed"] = split_seed;
    return echo;
}

ordered_json train_config_echo(const TrainConfig& cfg) {
    ordered_json echo;
    echo["hidden_dim"] = cfg.hidden_dim;
    echo["num_layers"] = cfg.num_layers;
    echo["residual"] = cfg.residual;
    echo["learning_rate"] = cfg.learning_rate;
    echo["weight_decay"] = cfg.weight_decay;
    echo["dropout"] = cfg.dropout;
    echo["epochs"] = cfg.epochs;
    echo["early_stop_patience"] = cfg.early_stop_patience;
    return echo;
}

struct MeanStddev {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

MeanStddev mean_stddev(const std::vector<double>& values) {
    MeanStddev out;
    if (values.empty()) return out;
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
               static_cast<double>(values.size());
    double variance = 0.0;
    for (double v : values) variance += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(variance / static_cast<double>(values.size()));
    return out;
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    auto parse_one = [&](const std::string& token) {
        std::uint64_t value = 0;
        const char* begin = token.data();
        const char* end = begin + token.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw std::invalid_argument("invalid seed '" + token + "' in '" + text + "'");
        }
        return value;
    };

    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::uint64_t lo = parse_one(text.substr(0, dots));
        const std::uint64_t hi = parse_one(text.substr(dots + 2));
        if (hi < lo) {
            throw std::invalid_argument("seed range '" + text + "' is descending");
        }
        std::vector<std::uint64_t> seeds;
        for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
        return seeds;
    }

    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        seeds.push_back(parse_one(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return seeds;
}

int run_synth(const SynthArgs& args) {
    Stopwatch watch;
    const SbmConfig cfg = load_sbm_config(args.config);
    const Dataset dataset = generate_sbm(cfg);
    const auto out = prepare_out_dir(args.out_dir);
    write_dataset(dataset, out / "edges.tsv", out / "features.csv", out / "labels.csv");
    std::printf("wrote %s: %zu nodes, %zu edges, %d classes\n",
                (out / "{edges.tsv,features.csv,labels.csv}").c_str(),
                dataset.graph.num_nodes, dataset.graph.num_edges,
                dataset.labels.num_classes);
    print_elapsed(watch);
    return 0;
}

int run_targets(const TargetsArgs& args) {
    Stopwatch watch;
    const Dataset dataset = load(args.data);
    const SplitMask mask = make_splits(dataset.graph.num_nodes, {}, args.split_seed);
    const TargetDistribution targets =
        build_targets(dataset, mask, args.kind, args.epsilon, args.gamma);

    std::string csv = "node_id";
    for (int c = 0; c < dataset.labels.num_classes; ++c) {
        csv += ",class_" + std::to_string(c);
    }
    csv += '\n';
    for (Eigen::Index i = 0; i < targets.matrix.rows(); ++i) {
        csv += std::to_string(i);
        for (Eigen::Index c = 0; c < targets.matrix.cols(); ++c) {
            csv += ',';
            csv += format_double(targets.matrix(i, c));
        }
        csv += '\n';
    }
    const auto out = prepare_out_dir(args.out_dir);
    write_text_file(out / "targets.csv", csv);
    std::printf("wrote %s: %zu x %d %s targets\n", (out / "targets.csv").c_str(),
                dataset.graph.num_nodes, dataset.labels.num_classes,
                target_kind_name(args.kind));
    print_elapsed(watch);
    return 0;
}

int run_train(const TrainArgs& args) {
    Stopwatch watch;
    if (args.seeds.empty()) throw std::invalid_argument("--seeds must name at least one seed");
    const Dataset dataset = load(args.data);
    const SplitMask mask = make_splits(dataset.graph.num_nodes, {}, args.split_seed);
    const TargetDistribution targets =
        build_targets(dataset, mask, args.kind, args.epsilon, args.gamma);
    const NormAdjacency adj = normalize_adjacency(dataset.graph);
    const auto out = prepare_out_dir(args.out_dir);

    ordered_json report;
    report["command"] = "train";
    report["config"] = dataset_config_echo(args.data, args.split_seed);
    report["config"]["target_kind"] = target_kind_name(args.kind);
    report["config"]["epsilon"] = args.epsilon;
    report["config"]["gamma"] = args.gamma;
    report["config"].update(train_config_echo(args.train));
    report["config"]["seeds"] = args.seeds;

    std::vector<double> test_accuracies;
    report["runs"] = ordered_json::array();
    for (std::uint64_t seed : args.seeds) {
        ordered_json run;
        run["seed"] = seed;
        try {
            TrainConfig cfg = args.train;
            cfg.seed = seed;
            const TrainResult result =
                train(dataset.graph, dataset.features, dataset.labels, targets, mask, cfg);

            const std::string tag = "seed" + std::to_string(seed);
            std::string history = "epoch,train_loss,val_accuracy\n";
            for (std::size_t e = 0; e < result.history.train_loss.size(); ++e) {
                history += std::to_string(e) + ',' +
                           format_double(result.history.train_loss[e]) + ',' +
                           format_double(result.history.val_accuracy[e]) + '\n';
            }
            write_text_file(out / ("history_" + tag + ".csv"), history);
            save_model(result.model, out / ("model_" + tag + ".bin"));

            const ForwardCache cache =
                forward(result.model, adj, dataset.features, false, 0.0);
            const ReliabilityReport calibration =
                reliability(cache.probabilities, dataset.labels, mask, Role::Test);

            run["best_epoch"] = result.history.best_epoch;
            run["epochs_run"] = result.history.train_loss.size();
            run["train_accuracy"] = evaluate(result.model, adj, dataset.features,
                                             dataset.labels, mask, Role::Train);
            run["val_accuracy"] = result.history.best_val_accuracy;
            const double test_acc = evaluate(result.model, adj, dataset.features,
                                             dataset.labels, mask, Role::Test);
            run["test_accuracy"] = test_acc;
            run["test_ece"] = calibration.ece;
            run["history_csv"] = "history_" + tag + ".csv";
            run["model"] = "model_" + tag + ".bin";
            test_accuracies.push_back(test_acc);
        } catch (const std::exception& err) {
            run["error"] = err.what();
        }
        report["runs"].push_back(std::move(run));
    }

    const MeanStddev acc = mean_stddev(test_accuracies);
    report["aggregate"]["runs_requested"] = args.seeds.size();
    report["aggregate"]["runs_succeeded"] = test_accuracies.size();
    if (!test_accuracies.empty()) {
        report["aggregate"]["mean_test_accuracy"] = acc.mean;
        report["aggregate"]["stddev_test_accuracy"] = acc.stddev;
    }
    write_json_file(out / "report.json", report);

    if (!test_accuracies.empty()) {
        std::printf("test accuracy %.4f +- %.4f over %zu run(s)\n", acc.mean, acc.stddev,
                    test_accuracies.size());
    }
    if (test_accuracies.size() < args.seeds.size()) {
        std::fprintf(stderr, "%zu of %zu run(s) failed; see %s\n",
                     args.seeds.size() - test_accuracies.size(), args.seeds.size(),
                     (out / "report.json").c_str());
    }
    print_elapsed(watch);
    return test_accuracies.size() == args.seeds.size() ? 0 : 1;
}

int run_analyze(const AnalyzeArgs& args) {
    Stopwatch watch;
    const Dataset dataset = load(args.data);
    const SplitMask mask = make_splits(dataset.graph.num_nodes, {}, args.split_seed);
    const NeighborhoodStats stats = compute_ratios(dataset.graph, dataset.labels, mask);
    const TargetDistribution targets =
        build_targets(dataset, mask, args.kind, args.epsilon, args.gamma);
    const GcnModel model = load_model(args.model);
    const NormAdjacency adj = normalize_adjacency(dataset.graph);
    const ForwardCache cache = forward(model, adj, dataset.features, false, 0.0);
    const auto out = prepare_out_dir(args.out_dir);

    // Cross-entropy decomposition residual on the model's own predictions.
    SmoothingConfig smoothing;
    smoothing.epsilon = args.kind == TargetKind::Sals ? args.epsilon : 0.4;
    smoothing.gamma = args.kind == TargetKind::Sals ? args.gamma : 0.8;
    const double residual = verify_ce_decomposition(dataset.graph, dataset.labels, mask,
                                                    stats, smoothing, cache.probabilities);

    const ReliabilityReport calibration =
        reliability(cache.probabilities, dataset.labels, mask, Role::Test);
    std::string reliability_csv =
        "bin,confidence_low,confidence_high,mean_confidence,empirical_accuracy,count\n";
    for (std::size_t b = 0; b < calibration.bins.size(); ++b) {
        const auto& bin = calibration.bins[b];
        reliability_csv += std::to_string(b) + ',' + format_double(bin.confidence_low) +
                           ',' + format_double(bin.confidence_high) + ',' +
                           format_double(bin.mean_confidence) + ',' +
                           format_double(bin.empirical_accuracy) + ',' +
                           std::to_string(bin.count) + '\n';
    }
    write_text_file(out / "reliability.csv", reliability_csv);

    const Vector losses = per_node_cross_entropy(cache, targets);
    const Matrix logit_grads = logit_gradient_rows(cache, targets, mask);
    Vector grad_norms(logit_grads.rows());
    for (Eigen::Index i = 0; i < logit_grads.rows(); ++i) {
        grad_norms(i) = logit_grads.row(i).norm();
    }
    const RatioProfile profile =
        ratio_profile(losses, grad_norms, stats, dataset.labels, mask);

    std::string profile_csv =
        "bucket,size,mean_own_class_ratio,mean_grad_norm,cumulative_loss_end\n";
    const std::size_t num_train = profile.order.size();
    const std::size_t base = num_train / kRatioBuckets;
    const std::size_t extra = num_train % kRatioBuckets;
    std::size_t pos = 0;
    double cumulative_end = 0.0;
    for (int b = 0; b < kRatioBuckets; ++b) {
        const std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
        double ratio_sum = 0.0;
        for (std::size_t k = 0; k < size; ++k) {
            ratio_sum += own_class_ratio(stats, dataset.labels, profile.order[pos + k]);
        }
        pos += size;
        if (size > 0) cumulative_end = profile.cumulative_loss[pos - 1];
        profile_csv += std::to_string(b) + ',' + std::to_string(size) + ',' +
                       format_double(size > 0 ? ratio_sum / static_cast<double>(size) : 0.0) +
                       ',' + format_double(profile.bucket_grad_norms[static_cast<std::size_t>(b)]) +
                       ',' + format_double(cumulative_end) + '\n';
    }
    write_text_file(out / "ratio_profile.csv", profile_csv);

    const EmbeddingTable embeddings = export_embeddings(
        model, adj, dataset.features, mask, args.ratio_threshold, stats, dataset.labels);
    std::string embeddings_csv = "node_id,r_value,label";
    for (Eigen::Index d = 0; d < embeddings.vectors.cols(); ++d) {
        embeddings_csv += ",e_" + std::to_string(d);
    }
    embeddings_csv += '\n';
    for (std::size_t k = 0; k < embeddings.rows.size(); ++k) {
        const auto& row = embeddings.rows[k];
        embeddings_csv += std::to_string(row.node_id) + ',' + format_double(row.r_value) +
                          ',' + std::to_string(row.label);
        for (Eigen::Index d = 0; d < embeddings.vectors.cols(); ++d) {
            embeddings_csv +=
                ',' + format_double(embeddings.vectors(static_cast<Eigen::Index>(k), d));
        }
        embeddings_csv += '\n';
    }
    write_text_file(out / "embeddings.csv", embeddings_csv);

    ordered_json report;
    report["command"] = "analyze";
    report["config"] = dataset_config_echo(args.data, args.split_seed);
    report["config"]["model"] = args.model.string();
    report["config"]["target_kind"] = target_kind_name(args.kind);
    report["config"]["epsilon"] = args.epsilon;
    report["config"]["gamma"] = args.gamma;
    report["config"]["ratio_threshold"] = args.ratio_threshold;
    report["max_decomposition_residual"] = residual;
    report["test_ece"] = calibration.ece;
    report["embeddings_exported"] = embeddings.rows.size();
    report["reliability_csv"] = "reliability.csv";
    report["ratio_profile_csv"] = "ratio_profile.csv";
    report["embeddings_csv"] = "embeddings.csv";
    write_json_file(out / "analysis.json", report);

    std::printf("max decomposition residual: %.3e\n", residual);
    std::printf("test ece: %.4f\n", calibration.ece);
    print_elapsed(watch);
    return 0;
}

int run_sweep(const SweepArgs& args) {
    Stopwatch watch;
    if (args.num_seeds < 1) throw std::invalid_argument("--seeds must be >= 1");
    for (double e : args.epsilon_values) check_smoothing_flags(TargetKind::Sals, e, 0.5);
    for (double g : args.gamma_values) check_smoothing_flags(TargetKind::Sals, 0.5, g);
    const Dataset dataset = load(args.data);
    const SplitMask mask = make_splits(dataset.graph.num_nodes, {}, args.split_seed);

    const SweepGrid grid = sweep(dataset, mask, args.epsilon_values, args.gamma_values,
                                 args.num_seeds, args.train);

    std::string csv = "epsilon,gamma,mean_test_accuracy,stddev_test_accuracy,seeds,error\n";
    bool all_valid = true;
    for (std::size_t e = 0; e < grid.epsilon_values.size(); ++e) {
        for (std::size_t g = 0; g < grid.gamma_values.size(); ++g) {
            const SweepCell& cell = grid.cell(e, g);
            csv += format_double(grid.epsilon_values[e]) + ',' +
                   format_double(grid.gamma_values[g]) + ',';
            if (cell.valid) {
                csv += format_double(cell.mean_accuracy) + ',' +
                       format_double(cell.stddev_accuracy) + ',' +
                       std::to_string(args.num_seeds) + ",\n";
            } else {
                all_valid = false;
                csv += ",,0," + csv_field(cell.error) + '\n';
            }
        }
    }
    const auto out = prepare_out_dir(args.out_dir);
    write_text_file(out / "sweep.csv", csv);

    std::printf("wrote %s: %zu cells x %d seed(s)\n", (out / "sweep.csv").c_str(),
                grid.cells.size(), args.num_seeds);
    print_elapsed(watch);
    return all_valid ? 0 : 1;
}

}  // namespace sals::cli
