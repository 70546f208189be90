#pragma once

#include "sals/data_io.hpp"
#include "sals/gnn.hpp"
#include "sals/graph.hpp"
#include "sals/targets.hpp"
#include "sals/types.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace sals {

/// One confidence bin of a reliability diagram. Empty bins keep
/// mean_confidence and empirical_accuracy at zero and contribute nothing
/// to the calibration error.
struct ReliabilityBin {
    double confidence_low = 0.0;   // exclusive, except bin 0 which admits 0
    double confidence_high = 0.0;  // inclusive
    double mean_confidence = 0.0;
    double empirical_accuracy = 0.0;
    std::size_t count = 0;
};

struct ReliabilityReport {
    std::vector<ReliabilityBin> bins;
    double ece = 0.0;       // sum_b (count_b / total) * |acc_b - conf_b|
    std::size_t total = 0;  // number of evaluated nodes
};

/// Bins nodes of the given role by confidence (max softmax probability) into
/// num_bins equal-width bins over (0, 1]: bin b covers (b/num_bins,
/// (b+1)/num_bins], with confidence exactly 0 placed in bin 0. Throws on an
/// empty role set or non-row-stochastic probabilities.
ReliabilityReport reliability(const Matrix& probabilities, const LabelSet& labels,
                              const SplitMask& mask, Role role, int num_bins = 10);

constexpr int kRatioBuckets = 6;

/// Train-node loss/gradient distributions along the own-class ratio order.
struct RatioProfile {
    std::vector<NodeId> order;            // train ids ascending by r_{y_i}(i), ties by id
    std::vector<double> cumulative_loss;  // running loss share over `order`, ends at 1
    std::vector<double> bucket_grad_norms;  // kRatioBuckets mean l2 norms, even buckets
};

/// per_node_loss and final_layer_grad_norms are indexed by node id (length N);
/// only train entries are read. Buckets split the sorted order into
/// kRatioBuckets contiguous groups whose sizes differ by at most one (the
/// earlier buckets take the remainder). Throws on an empty train set.
RatioProfile ratio_profile(const Vector& per_node_loss,
                           const Vector& final_layer_grad_norms,
                           const NeighborhoodStats& stats, const LabelSet& labels,
                           const SplitMask& mask);

/// Checks the cross-entropy decomposition of the structure-aware target:
///   H(q_sals(.|i), p(.|i)) = (1-eps) H(onehot_i, p)
///                          + eps [ gamma/|N_L(i)| sum_{j in N_L(i)} H(onehot_j, p)
///                                  + (1-gamma) H(u, p) ]
/// over train nodes with at least one labeled train neighbor (fallback rows
/// reduce to plain smoothing and are skipped), where N_L(i) is the labeled
/// train neighborhood underlying `stats`. Probabilities are clipped at 1e-12
/// before taking logs. Returns the maximum |LHS - RHS|.
double verify_ce_decomposition(const Graph& graph, const LabelSet& labels,
                               const SplitMask& mask, const NeighborhoodStats& stats,
                               const SmoothingConfig& cfg, const Matrix& predictions);

/// Aggregate of one (epsilon, gamma) sweep cell. Failed cells carry the error
/// message and are excluded from any downstream comparison.
struct SweepCell {
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;  // population stddev over seeds
    bool valid = false;
    std::string error;
};

struct SweepGrid {
    std::vector<double> epsilon_values;
    std::vector<double> gamma_values;
    std::vector<SweepCell> cells;  // row-major: index = e * |gamma| + g

    const SweepCell& cell(std::size_t epsilon_index, std::size_t gamma_index) const {
        return cells.at(epsilon_index * gamma_values.size() + gamma_index);
    }
};

/// Trains one model per (epsilon, gamma, seed) with seeds 0..num_seeds-1 and
/// aggregates test accuracy per cell. The split is fixed across all cells;
/// cfg.seed is overridden by the per-run seed. A training failure marks the
/// cell invalid instead of aborting the sweep.
SweepGrid sweep(const Dataset& dataset, const SplitMask& mask,
                const std::vector<double>& epsilon_values,
                const std::vector<double>& gamma_values, int num_seeds,
                const TrainConfig& cfg);

struct EmbeddingRow {
    NodeId node_id = 0;
    double r_value = 0.0;  // r_{y_i}(i)
    int label = 0;
};

/// Penultimate-layer activations (the input of the final layer, evaluation
/// mode) for train nodes with own-class ratio >= threshold, ascending by node
/// id. vectors.row(k) belongs to rows[k]. Throws for single-layer models.
struct EmbeddingTable {
    std::vector<EmbeddingRow> rows;
    Matrix vectors;
};

EmbeddingTable export_embeddings(const GcnModel& model, const NormAdjacency& adj,
                                 const NodeFeatures& features, const SplitMask& mask,
                                 double ratio_threshold, const NeighborhoodStats& stats,
                                 const LabelSet& labels);

/// Gini coefficient of a non-negative sample: mean absolute difference over
/// twice the mean. Zero for an all-equal (or all-zero) sample, approaching 1
/// as all mass concentrates on a single entry. Throws on negative entries or
/// an empty sample.
double gini_coefficient(const std::vector<double>& values);

}  // namespace sals
