#include "sals/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sals {

namespace {

constexpr double kLogClip = 1e-12;

int argmax_row(const Matrix& m, Eigen::Index i) {
    int best = 0;
    double best_value = m(i, 0);
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
        if (m(i, c) > best_value) {
            best_value = m(i, c);
            best = static_cast<int>(c);
        }
    }
    return best;
}

void check_row_stochastic(const Matrix& probabilities) {
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < probabilities.cols(); ++c) {
            const double p = probabilities(i, c);
            if (!(p >= 0.0) || !std::isfinite(p)) {
                throw std::invalid_argument("probability row " + std::to_string(i) +
                                            " has a negative or non-finite entry");
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw std::invalid_argument("probability row " + std::to_string(i) +
                                        " sums to " + std::to_string(sum));
        }
    }
}

/// -sum_c q(c) log max(p(c), clip) for one node's rows.
double clipped_cross_entropy(const Matrix& q, Eigen::Index qi, const Matrix& p,
                             Eigen::Index pi) {
    double h = 0.0;
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
        if (q(qi, c) != 0.0) {
            h -= q(qi, c) * std::log(std::max(p(pi, c), kLogClip));
        }
    }
    return h;
}

}  // namespace

ReliabilityReport reliability(const Matrix& probabilities, const LabelSet& labels,
                              const SplitMask& mask, Role role, int num_bins) {
    if (num_bins < 1) throw std::invalid_argument("reliability: num_bins must be positive");
    if (static_cast<std::size_t>(probabilities.rows()) != mask.num_nodes() ||
        mask.num_nodes() != labels.num_nodes()) {
        throw std::invalid_argument("reliability: probabilities/labels/mask sizes disagree");
    }
    if (mask.count(role) == 0) {
        throw std::invalid_argument(std::string("reliability: no nodes with role ") +
                                    role_name(role));
    }
    check_row_stochastic(probabilities);

    ReliabilityReport report;
    report.bins.resize(static_cast<std::size_t>(num_bins));
    for (int b = 0; b < num_bins; ++b) {
        report.bins[static_cast<std::size_t>(b)].confidence_low = b / static_cast<double>(num_bins);
        report.bins[static_cast<std::size_t>(b)].confidence_high =
            (b + 1) / static_cast<double>(num_bins);
    }

    std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
    std::vector<std::size_t> correct(static_cast<std::size_t>(num_bins), 0);
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (mask.role(i) != role) continue;
        if (!labels.has_label(i)) {
            throw std::invalid_argument("reliability: node " + std::to_string(i) +
                                        " has no label");
        }
        const auto row = static_cast<Eigen::Index>(i);
        const int predicted = argmax_row(probabilities, row);
        const double confidence = probabilities(row, predicted);
        // bin b covers (b/B, (b+1)/B]; exact zeros land in bin 0.
        int b = static_cast<int>(std::ceil(confidence * num_bins)) - 1;
        b = std::clamp(b, 0, num_bins - 1);
        auto& bin = report.bins[static_cast<std::size_t>(b)];
        bin.count += 1;
        conf_sum[static_cast<std::size_t>(b)] += confidence;
        correct[static_cast<std::size_t>(b)] += predicted == labels.label(i);
        report.total += 1;
    }

    for (int b = 0; b < num_bins; ++b) {
        auto& bin = report.bins[static_cast<std::size_t>(b)];
        if (bin.count == 0) continue;
        bin.mean_confidence = conf_sum[static_cast<std::size_t>(b)] /
                              static_cast<double>(bin.count);
        bin.empirical_accuracy = static_cast<double>(correct[static_cast<std::size_t>(b)]) /
                                 static_cast<double>(bin.count);
        report.ece += static_cast<double>(bin.count) / static_cast<double>(report.total) *
                      std::abs(bin.empirical_accuracy - bin.mean_confidence);
    }
    return report;
}

RatioProfile ratio_profile(const Vector& per_node_loss,
                           const Vector& final_layer_grad_norms,
                           const NeighborhoodStats& stats, const LabelSet& labels,
                           const SplitMask& mask) {
    const std::size_t n = mask.num_nodes();
    if (static_cast<std::size_t>(per_node_loss.size()) != n ||
        static_cast<std::size_t>(final_layer_grad_norms.size()) != n ||
        stats.num_nodes() != n || labels.num_nodes() != n) {
        throw std::invalid_argument("ratio_profile: input sizes disagree");
    }

    RatioProfile profile;
    for (NodeId i = 0; i < n; ++i) {
        if (mask.is_train(i)) profile.order.push_back(i);
    }
    if (profile.order.empty()) throw std::invalid_argument("ratio_profile: empty train set");
    std::stable_sort(profile.order.begin(), profile.order.end(),
                     [&](NodeId a, NodeId b) {
                         const double ra = own_class_ratio(stats, labels, a);
                         const double rb = own_class_ratio(stats, labels, b);
                         return ra != rb ? ra < rb : a < b;
                     });

    double total_loss = 0.0;
    for (NodeId i : profile.order) {
        const double loss = per_node_loss(static_cast<Eigen::Index>(i));
        if (!(loss >= 0.0)) {
            throw std::invalid_argument("ratio_profile: negative loss at node " +
                                        std::to_string(i));
        }
        total_loss += loss;
    }
    if (total_loss <= 0.0) {
        throw std::invalid_argument("ratio_profile: total train loss is zero");
    }
    profile.cumulative_loss.reserve(profile.order.size());
    double running = 0.0;
    for (NodeId i : profile.order) {
        running += per_node_loss(static_cast<Eigen::Index>(i));
        profile.cumulative_loss.push_back(running / total_loss);
    }

    // Contiguous buckets over the sorted order; the first (size % kRatioBuckets)
    // buckets hold one extra node so sizes differ by at most one.
    const std::size_t num_train = profile.order.size();
    const std::size_t base = num_train / kRatioBuckets;
    const std::size_t extra = num_train % kRatioBuckets;
    profile.bucket_grad_norms.assign(kRatioBuckets, 0.0);
    std::size_t pos = 0;
    for (int b = 0; b < kRatioBuckets; ++b) {
        const std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
        double sum = 0.0;
        for (std::size_t k = 0; k < size; ++k, ++pos) {
            sum += final_layer_grad_norms(static_cast<Eigen::Index>(profile.order[pos]));
        }
        profile.bucket_grad_norms[static_cast<std::size_t>(b)] =
            size > 0 ? sum / static_cast<double>(size) : 0.0;
    }
    return profile;
}

double verify_ce_decomposition(const Graph& graph, const LabelSet& labels,
                               const SplitMask& mask, const NeighborhoodStats& stats,
                               const SmoothingConfig& cfg, const Matrix& predictions) {
    if (static_cast<std::size_t>(predictions.rows()) != graph.num_nodes ||
        predictions.cols() != labels.num_classes) {
        throw std::invalid_argument("verify_ce_decomposition: prediction shape mismatch");
    }
    check_row_stochastic(predictions);
    const TargetDistribution targets = sals_targets(labels, mask, stats, cfg);
    const int num_classes = labels.num_classes;

    double max_residual = 0.0;
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        if (!mask.is_train(i) || stats.labeled_degree[i] == 0) continue;
        const auto row = static_cast<Eigen::Index>(i);

        const double lhs = clipped_cross_entropy(targets.matrix, row, predictions, row);

        double neighbor_term = 0.0;  // mean of H(onehot_{y_j}, p(.|i)) over N_L(i)
        for (NodeId j : neighbors(graph, i)) {
            if (!mask.is_train(j) || !labels.has_label(j)) continue;
            neighbor_term -=
                std::log(std::max(predictions(row, labels.label(j)), kLogClip));
        }
        neighbor_term /= static_cast<double>(stats.labeled_degree[i]);

        double uniform_term = 0.0;  // H(u, p(.|i))
        for (int c = 0; c < num_classes; ++c) {
            uniform_term -= std::log(std::max(predictions(row, c), kLogClip));
        }
        uniform_term /= static_cast<double>(num_classes);

        const double own_term =
            -std::log(std::max(predictions(row, labels.label(i)), kLogClip));
        const double rhs = (1.0 - cfg.epsilon) * own_term +
                           cfg.epsilon * (cfg.gamma * neighbor_term +
                                          (1.0 - cfg.gamma) * uniform_term);
        max_residual = std::max(max_residual, std::abs(lhs - rhs));
    }
    return max_residual;
}

SweepGrid sweep(const Dataset& dataset, const SplitMask& mask,
                const std::vector<double>& epsilon_values,
                const std::vector<double>& gamma_values, int num_seeds,
                const TrainConfig& cfg) {
    if (epsilon_values.empty() || gamma_values.empty()) {
        throw std::invalid_argument("sweep: empty hyperparameter grid");
    }
    if (num_seeds < 1) throw std::invalid_argument("sweep: need at least one seed");

    const NeighborhoodStats stats = compute_ratios(dataset.graph, dataset.labels, mask);
    const NormAdjacency adj = normalize_adjacency(dataset.graph);
    SweepGrid grid;
    grid.epsilon_values = epsilon_values;
    grid.gamma_values = gamma_values;
    grid.cells.resize(epsilon_values.size() * gamma_values.size());

    for (std::size_t e = 0; e < epsilon_values.size(); ++e) {
        for (std::size_t g = 0; g < gamma_values.size(); ++g) {
            SweepCell& cell = grid.cells[e * gamma_values.size() + g];
            SmoothingConfig smoothing;
            smoothing.epsilon = epsilon_values[e];
            smoothing.gamma = gamma_values[g];
            try {
                const TargetDistribution targets =
                    sals_targets(dataset.labels, mask, stats, smoothing);
                std::vector<double> accuracies;
                accuracies.reserve(static_cast<std::size_t>(num_seeds));
                for (int s = 0; s < num_seeds; ++s) {
                    TrainConfig run_cfg = cfg;
                    run_cfg.seed = static_cast<std::uint64_t>(s);
                    const TrainResult result = train(dataset.graph, dataset.features,
                                                     dataset.labels, targets, mask, run_cfg);
                    accuracies.push_back(evaluate(result.model, adj, dataset.features,
                                                  dataset.labels, mask, Role::Test));
                }
                const double mean =
                    std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
                    static_cast<double>(accuracies.size());
                double variance = 0.0;
                for (double a : accuracies) variance += (a - mean) * (a - mean);
                variance /= static_cast<double>(accuracies.size());
                cell.mean_accuracy = mean;
                cell.stddev_accuracy = std::sqrt(variance);
                cell.valid = true;
            } catch (const std::exception& err) {
                cell.valid = false;
                cell.error = err.what();
            }
        }
    }
    return grid;
}

EmbeddingTable export_embeddings(const GcnModel& model, const NormAdjacency& adj,
                                 const NodeFeatures& features, const SplitMask& mask,
                                 double ratio_threshold, const NeighborhoodStats& stats,
                                 const LabelSet& labels) {
    if (model.num_layers() < 2) {
        throw std::invalid_argument(
            "export_embeddings: a single-layer model has no penultimate layer");
    }
    const ForwardCache cache = forward(model, adj, features, false, 0.0);
    const Matrix& penultimate = cache.layer_inputs.back();

    EmbeddingTable table;
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const double r = own_class_ratio(stats, labels, i);
        if (r < ratio_threshold) continue;
        table.rows.push_back({i, r, labels.label(i)});
    }
    table.vectors.resize(static_cast<Eigen::Index>(table.rows.size()), penultimate.cols());
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
        table.vectors.row(static_cast<Eigen::Index>(k)) =
            penultimate.row(static_cast<Eigen::Index>(table.rows[k].node_id));
    }
    return table;
}

double gini_coefficient(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("gini_coefficient: empty sample");
    std::vector<double> sorted = values;
    for (double v : sorted) {
        if (!(v >= 0.0)) {
            throw std::invalid_argument("gini_coefficient: negative entry");
        }
    }
    std::sort(sorted.begin(), sorted.end());
    const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
    if (total <= 0.0) return 0.0;  // all-zero sample: perfectly equal

    // G = sum_i (2(i+1) - n - 1) x_(i) / (n * total) with ascending x_(i).
    const double n = static_cast<double>(sorted.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        weighted += (2.0 * (static_cast<double>(i) + 1.0) - n - 1.0) * sorted[i];
    }
    return weighted / (n * total);
}

}  // namespace sals
