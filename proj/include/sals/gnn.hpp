#pragma once

#include "sals/graph.hpp"
#include "sals/rng.hpp"
#include "sals/targets.hpp"
#include "sals/types.hpp"

#include <filesystem>
#include <functional>
#include <vector>

namespace sals {

/// Symmetric-normalized adjacency with self-loops, in CSR with explicit
/// values: entry (i, j) = 1 / sqrt(d_i * d_j) where d is the degree in A + I.
struct NormAdjacency {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> row_offsets;
    std::vector<std::size_t> col_ids;  // sorted per row, includes the diagonal
    std::vector<double> values;
};

NormAdjacency normalize_adjacency(const Graph& graph);

/// out = A_hat * x, rows iterated in order (deterministic).
Matrix propagate(const NormAdjacency& adj, const Matrix& x);

struct GcnLayer {
    Matrix weight;  // in_dim x out_dim
    Vector bias;    // out_dim
    bool residual = false;

    Eigen::Index in_dim() const { return weight.rows(); }
    Eigen::Index out_dim() const { return weight.cols(); }
};

struct GcnModel {
    std::vector<GcnLayer> layers;

    std::size_t num_layers() const { return layers.size(); }
    Eigen::Index input_dim() const { return layers.front().in_dim(); }
    Eigen::Index output_dim() const { return layers.back().out_dim(); }
};

/// Glorot-uniform weights, zero biases. With residual set, identity skip
/// connections go on the equal-width hidden layers (hidden -> hidden).
GcnModel init_model(int input_dim, int hidden_dim, int num_classes, int num_layers,
                    bool residual, Rng& rng);

struct ForwardCache {
    std::vector<Matrix> layer_inputs;     // H^l fed into layer l, size L
    std::vector<Matrix> pre_activations;  // Z^l = A_hat H^l W^l + b^l, size L
    std::vector<Matrix> dropout_masks;    // 0/1 per hidden layer; empty rows when unused
    Matrix logits;                        // = pre_activations.back()
    Matrix probabilities;                 // row softmax of logits
    double dropout = 0.0;
    bool training = false;
};

/// Full-batch forward pass: H^{l+1} = relu(A_hat H^l W^l + b^l) on hidden
/// layers (identity on the output layer), residual skip added after the
/// activation, inverted dropout on hidden activations when training.
/// Softmax rows are computed with per-row max subtraction.
ForwardCache forward(const GcnModel& model, const NormAdjacency& adj,
                     const NodeFeatures& features, bool training, double dropout,
                     Rng* rng = nullptr);

/// Mean over train nodes of -sum_c q(c|i) log p(c|i), evaluated through
/// log-softmax of the cached logits. Throws on an empty train set.
double soft_cross_entropy(const ForwardCache& cache, const TargetDistribution& targets,
                          const SplitMask& mask);

/// Unreduced per-node cross-entropy, length N.
Vector per_node_cross_entropy(const ForwardCache& cache, const TargetDistribution& targets);

/// Logit-level gradient rows before the 1/|train| scaling: p(.|i) - q(.|i) on
/// train nodes, zero elsewhere. Every entry lies in [-1, 1].
Matrix logit_gradient_rows(const ForwardCache& cache, const TargetDistribution& targets,
                           const SplitMask& mask);

struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;
};

/// Exact gradients of the masked mean cross-entropy plus the L2 penalty
/// 0.5 * weight_decay * ||W_0||^2 on the first layer's weight matrix (the
/// canonical GCN placement; upper weights and all biases are undecayed).
Gradients backward(const ForwardCache& cache, const TargetDistribution& targets,
                   const SplitMask& mask, const GcnModel& model, const NormAdjacency& adj,
                   const NodeFeatures& features, double weight_decay = 0.0);

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    double dropout = 0.5;
    int epochs = 300;
    int hidden_dim = 64;
    int num_layers = 3;
    std::uint64_t seed = 0;
    int early_stop_patience = 50;
    bool residual = false;
};

struct TrainHistory {
    std::vector<double> train_loss;    // cross-entropy at the start of each epoch
    std::vector<double> val_accuracy;  // after that epoch's update
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
};

struct TrainResult {
    GcnModel model;  // parameters of the best validation epoch
    TrainHistory history;
};

/// Called once per epoch with the training-mode cache of that epoch.
using EpochObserver = std::function<void(int epoch, const ForwardCache& cache)>;

/// Full-batch adaptive-moment training (beta = (0.9, 0.999), eps = 1e-8) with
/// early stopping on validation accuracy. Deterministic given cfg.seed; a
/// non-finite loss aborts with a diagnostic.
TrainResult train(const Graph& graph, const NodeFeatures& features, const LabelSet& labels,
                  const TargetDistribution& targets, const SplitMask& mask,
                  const TrainConfig& cfg, const EpochObserver& observer = {});

/// Fraction of nodes in the role whose argmax probability matches the label;
/// argmax ties resolve to the lowest class index.
double evaluate(const GcnModel& model, const NormAdjacency& adj, const NodeFeatures& features,
                const LabelSet& labels, const SplitMask& mask, Role role);

/// Argmax class per node, ties to the lowest index.
std::vector<int> predict(const GcnModel& model, const NormAdjacency& adj,
                         const NodeFeatures& features);

/// Flat little-endian checkpoint: magic "SALSGCN1", u32 layer count, per layer
/// (u32 in_dim, u32 out_dim, u8 residual), then per layer the row-major f64
/// weight matrix followed by the f64 bias vector.
void save_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);

}  // namespace sals
