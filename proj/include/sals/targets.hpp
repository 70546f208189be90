#pragma once

#include "sals/graph.hpp"
#include "sals/types.hpp"

#include <vector>

namespace sals {

/// Mixing weights for structure-aware smoothing: a train row becomes
///   (1 - epsilon) * onehot(y_i) + epsilon * (gamma * eta(i) + (1 - gamma) * u)
/// where eta(i) is the label distribution of i's labeled train neighbors and
/// u the uniform distribution. Nodes without labeled neighbors fall back to
/// eta(i) := u, which reduces the row to plain label smoothing.
struct SmoothingConfig {
    double epsilon = 0.4;
    double gamma = 0.8;

    enum class Fallback { Uniform };
    Fallback fallback = Fallback::Uniform;
};

/// Per-node label ratios over labeled train neighbors. Row i sums to 1 when
/// labeled_degree[i] > 0 and is all-zero otherwise.
struct NeighborhoodStats {
    Matrix ratios;                            // N x C
    std::vector<std::size_t> labeled_degree;  // |N_L(i)|

    std::size_t num_nodes() const { return labeled_degree.size(); }
};

enum class TargetKind { Hard, Ls, Sals };

const char* target_kind_name(TargetKind kind);
TargetKind parse_target_kind(const std::string& name);

/// Per-node training targets. Train rows are row-stochastic; rows of other
/// nodes are never consumed by training and hold the hard label when present,
/// zeros otherwise.
struct TargetDistribution {
    Matrix matrix;  // N x C
    TargetKind kind = TargetKind::Hard;
};

/// ratios(i,c) = |{j in N(i) : train, y_j = c}| / |{j in N(i) : train}|,
/// all-zero row when node i has no labeled train neighbor.
NeighborhoodStats compute_ratios(const Graph& graph, const LabelSet& labels,
                                 const SplitMask& mask);

/// One-hot rows for train nodes. Throws if a train node is unlabeled.
TargetDistribution hard_targets(const LabelSet& labels, const SplitMask& mask);

/// Uniform label smoothing: (1 - epsilon) * onehot + epsilon * u.
/// Requires 0 < epsilon <= 1.
TargetDistribution ls_targets(const LabelSet& labels, const SplitMask& mask,
                              double epsilon);

/// Structure-aware smoothing per SmoothingConfig; stats must come from the
/// same graph/labels/mask.
TargetDistribution sals_targets(const LabelSet& labels, const SplitMask& mask,
                                const NeighborhoodStats& stats,
                                const SmoothingConfig& cfg);

/// Closed-form gap between the loss-minimizing logits of the correct class
/// and of a class holding a ratio r_c of the labeled neighbors:
///   log((1 - eps + eps*gamma*r_c + eps*(1-gamma)/C) / (eps*gamma*r_c + eps*(1-gamma)/C))
/// Returns +infinity when the denominator vanishes (eps = 0, or gamma = 1
/// with r_c = 0), where no finite logits attain the optimum.
double optimum_logit_gap(double epsilon, double gamma, double r_c, int num_classes);

/// r_{y_i}(i): the ratio of node i's labeled train neighbors sharing i's own
/// label. Zero when i is unlabeled or has no labeled neighbor.
double own_class_ratio(const NeighborhoodStats& stats, const LabelSet& labels, NodeId i);

}  // namespace sals
