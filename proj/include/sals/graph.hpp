#pragma once

#include "sals/types.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sals {

/// Immutable undirected graph in compressed row form. Neighbor lists are
/// sorted ascending, hold no duplicates and no self-loops, and are symmetric:
/// j appears in row i iff i appears in row j.
struct Graph {
    std::size_t num_nodes = 0;
    std::vector<std::size_t> row_offsets;   // length num_nodes + 1
    std::vector<std::size_t> neighbor_ids;  // column indices, sorted per row
    std::size_t num_edges = 0;              // undirected edge count

    std::size_t degree(NodeId i) const {
        return row_offsets[i + 1] - row_offsets[i];
    }
};

using EdgeList = std::vector<std::pair<NodeId, NodeId>>;

/// Builds a symmetric, deduplicated, self-loop-free CSR graph. Each input
/// edge (directed or not) ends up stored in both endpoint rows.
/// Throws std::invalid_argument on num_nodes == 0 or an endpoint out of range.
Graph build_graph(const EdgeList& edge_pairs, std::size_t num_nodes);

/// Sorted neighbor ids of node i. Throws std::out_of_range on a bad index.
std::span<const NodeId> neighbors(const Graph& graph, NodeId i);

/// Canonical (i < j) undirected edge list, ascending; inverse of build_graph.
EdgeList edge_list(const Graph& graph);

/// Per-node feature rows; row count must match the graph it accompanies.
struct NodeFeatures {
    Matrix matrix;  // N x D

    std::size_t num_nodes() const { return static_cast<std::size_t>(matrix.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

inline constexpr int kAbsentLabel = -1;

/// Per-node class labels in [0, C), with kAbsentLabel marking unlabeled nodes.
struct LabelSet {
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t num_nodes() const { return labels.size(); }
    bool has_label(NodeId i) const { return labels[i] != kAbsentLabel; }
    int label(NodeId i) const { return labels[i]; }
};

/// Validates labels against the declared class count (C >= 2, every present
/// label < C). Throws std::invalid_argument on violation.
LabelSet make_label_set(std::vector<int> labels, int num_classes);

/// Disjoint train/val/test cover of the node set.
struct SplitMask {
    std::vector<Role> roles;

    std::size_t num_nodes() const { return roles.size(); }
    Role role(NodeId i) const { return roles[i]; }
    bool is_train(NodeId i) const { return roles[i] == Role::Train; }

    std::size_t count(Role r) const;
    std::vector<NodeId> indices(Role r) const;
};

/// Checks that features/labels/mask agree with the graph on node count and
/// that every TRAIN node carries a label. Throws std::invalid_argument.
void validate_dataset_shapes(const Graph& graph, const NodeFeatures& features,
                             const LabelSet& labels, const SplitMask& mask);

}  // namespace sals
