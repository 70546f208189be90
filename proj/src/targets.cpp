#include "sals/targets.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sals {

namespace {

void check_labels_mask(const LabelSet& labels, const SplitMask& mask) {
    if (labels.num_nodes() != mask.num_nodes()) {
        throw std::invalid_argument("labels cover " + std::to_string(labels.num_nodes()) +
                                    " nodes but mask covers " +
                                    std::to_string(mask.num_nodes()));
    }
}

void check_train_labeled(const LabelSet& labels, const SplitMask& mask) {
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (mask.is_train(i) && !labels.has_label(i)) {
            throw std::invalid_argument("train node " + std::to_string(i) + " has no label");
        }
    }
}

/// Rows for non-train nodes: hard label when present, zeros otherwise.
Matrix base_matrix(const LabelSet& labels, const SplitMask& mask) {
    const auto n = static_cast<Eigen::Index>(labels.num_nodes());
    Matrix m = Matrix::Zero(n, labels.num_classes);
    for (NodeId i = 0; i < labels.num_nodes(); ++i) {
        if (!mask.is_train(i) && labels.has_label(i)) {
            m(static_cast<Eigen::Index>(i), labels.label(i)) = 1.0;
        }
    }
    return m;
}

}  // namespace

const char* target_kind_name(TargetKind kind) {
    switch (kind) {
        case TargetKind::Hard: return "hard";
        case TargetKind::Ls: return "ls";
        case TargetKind::Sals: return "sals";
    }
    return "?";
}

TargetKind parse_target_kind(const std::string& name) {
    if (name == "hard") return TargetKind::Hard;
    if (name == "ls") return TargetKind::Ls;
    if (name == "sals") return TargetKind::Sals;
    throw std::invalid_argument("unknown target kind '" + name + "' (expected hard|ls|sals)");
}

NeighborhoodStats compute_ratios(const Graph& graph, const LabelSet& labels,
                                 const SplitMask& mask) {
    check_labels_mask(labels, mask);
    if (labels.num_nodes() != graph.num_nodes) {
        throw std::invalid_argument("labels/mask node count does not match graph");
    }
    check_train_labeled(labels, mask);

    NeighborhoodStats stats;
    stats.ratios = Matrix::Zero(static_cast<Eigen::Index>(graph.num_nodes),
                                labels.num_classes);
    stats.labeled_degree.assign(graph.num_nodes, 0);
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        std::size_t labeled = 0;
        for (NodeId j : neighbors(graph, i)) {
            if (mask.is_train(j) && labels.has_label(j)) {
                stats.ratios(static_cast<Eigen::Index>(i), labels.label(j)) += 1.0;
                ++labeled;
            }
        }
        stats.labeled_degree[i] = labeled;
        if (labeled > 0) {
            stats.ratios.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(labeled);
        }
    }
    return stats;
}

TargetDistribution hard_targets(const LabelSet& labels, const SplitMask& mask) {
    check_labels_mask(labels, mask);
    check_train_labeled(labels, mask);
    Matrix m = base_matrix(labels, mask);
    for (NodeId i = 0; i < labels.num_nodes(); ++i) {
        if (mask.is_train(i)) {
            m(static_cast<Eigen::Index>(i), labels.label(i)) = 1.0;
        }
    }
    return {std::move(m), TargetKind::Hard};
}

TargetDistribution ls_targets(const LabelSet& labels, const SplitMask& mask,
                              double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) {
        throw std::invalid_argument("ls_targets: epsilon must lie in (0, 1]");
    }
    check_labels_mask(labels, mask);
    check_train_labeled(labels, mask);
    const double uniform = 1.0 / labels.num_classes;
    Matrix m = base_matrix(labels, mask);
    for (NodeId i = 0; i < labels.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        for (int c = 0; c < labels.num_classes; ++c) {
            const double onehot = (c == labels.label(i)) ? 1.0 : 0.0;
            m(row, c) = (1.0 - epsilon) * onehot + epsilon * uniform;
        }
    }
    return {std::move(m), TargetKind::Ls};
}

TargetDistribution sals_targets(const LabelSet& labels, const SplitMask& mask,
                                const NeighborhoodStats& stats,
                                const SmoothingConfig& cfg) {
    if (!(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0)) {
        throw std::invalid_argument("sals_targets: epsilon must lie in (0, 1]");
    }
    if (!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0)) {
        throw std::invalid_argument("sals_targets: gamma must lie in [0, 1]");
    }
    check_labels_mask(labels, mask);
    check_train_labeled(labels, mask);
    if (stats.num_nodes() != labels.num_nodes() ||
        stats.ratios.cols() != labels.num_classes) {
        throw std::invalid_argument("sals_targets: stats shape does not match labels");
    }

    const double uniform = 1.0 / labels.num_classes;
    Matrix m = base_matrix(labels, mask);
    for (NodeId i = 0; i < labels.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        const bool fallback = stats.labeled_degree[i] == 0;
        for (int c = 0; c < labels.num_classes; ++c) {
            // Fallback eta := u keeps the row stochastic and reduces it to the
            // plain label-smoothing row.
            const double eta = fallback ? uniform : stats.ratios(row, c);
            const double mix = cfg.gamma * eta + (1.0 - cfg.gamma) * uniform;
            const double onehot = (c == labels.label(i)) ? 1.0 : 0.0;
            m(row, c) = (1.0 - cfg.epsilon) * onehot + cfg.epsilon * mix;
        }
    }
    return {std::move(m), TargetKind::Sals};
}

double optimum_logit_gap(double epsilon, double gamma, double r_c, int num_classes) {
    if (num_classes < 2) {
        throw std::invalid_argument("optimum_logit_gap: need at least 2 classes");
    }
    if (!(epsilon >= 0.0 && epsilon <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0) ||
        !(r_c >= 0.0 && r_c <= 1.0)) {
        throw std::invalid_argument("optimum_logit_gap: parameter out of range");
    }
    const double other = epsilon * gamma * r_c + epsilon * (1.0 - gamma) / num_classes;
    if (other <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return std::log((1.0 - epsilon + other) / other);
}

double own_class_ratio(const NeighborhoodStats& stats, const LabelSet& labels, NodeId i) {
    if (!labels.has_label(i)) return 0.0;
    return stats.ratios(static_cast<Eigen::Index>(i), labels.label(i));
}

}  // namespace sals
