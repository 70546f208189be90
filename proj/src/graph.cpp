#include "sals/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace sals {

Graph build_graph(const EdgeList& edge_pairs, std::size_t num_nodes) {
    if (num_nodes == 0) {
        throw std::invalid_argument("build_graph: num_nodes must be positive");
    }
    std::vector<std::vector<NodeId>> rows(num_nodes);
    for (std::size_t k = 0; k < edge_pairs.size(); ++k) {
        const auto [a, b] = edge_pairs[k];
        if (a >= num_nodes || b >= num_nodes) {
            throw std::invalid_argument("build_graph: edge " + std::to_string(k) +
                                        " endpoint out of range");
        }
        if (a == b) continue;  // self-loops only exist inside adjacency normalization
        rows[a].push_back(b);
        rows[b].push_back(a);
    }

    Graph g;
    g.num_nodes = num_nodes;
    g.row_offsets.resize(num_nodes + 1, 0);
    for (auto& row : rows) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
        g.row_offsets[i + 1] = g.row_offsets[i] + rows[i].size();
    }
    g.neighbor_ids.reserve(g.row_offsets.back());
    for (const auto& row : rows) {
        g.neighbor_ids.insert(g.neighbor_ids.end(), row.begin(), row.end());
    }
    g.num_edges = g.neighbor_ids.size() / 2;
    return g;
}

std::span<const NodeId> neighbors(const Graph& graph, NodeId i) {
    if (i >= graph.num_nodes) {
        throw std::out_of_range("neighbors: node " + std::to_string(i) +
                                " out of range (num_nodes=" +
                                std::to_string(graph.num_nodes) + ")");
    }
    return {graph.neighbor_ids.data() + graph.row_offsets[i],
            graph.row_offsets[i + 1] - graph.row_offsets[i]};
}

EdgeList edge_list(const Graph& graph) {
    EdgeList edges;
    edges.reserve(graph.num_edges);
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        for (NodeId j : neighbors(graph, i)) {
            if (i < j) edges.emplace_back(i, j);
        }
    }
    return edges;
}

LabelSet make_label_set(std::vector<int> labels, int num_classes) {
    if (num_classes < 2) {
        throw std::invalid_argument("make_label_set: need at least 2 classes");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != kAbsentLabel && (labels[i] < 0 || labels[i] >= num_classes)) {
            throw std::invalid_argument("make_label_set: label of node " +
                                        std::to_string(i) + " is " +
                                        std::to_string(labels[i]) +
                                        ", outside [0, " + std::to_string(num_classes) + ")");
        }
    }
    return LabelSet{std::move(labels), num_classes};
}

std::size_t SplitMask::count(Role r) const {
    std::size_t n = 0;
    for (Role x : roles) n += (x == r);
    return n;
}

std::vector<NodeId> SplitMask::indices(Role r) const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < roles.size(); ++i) {
        if (roles[i] == r) out.push_back(i);
    }
    return out;
}

void validate_dataset_shapes(const Graph& graph, const NodeFeatures& features,
                             const LabelSet& labels, const SplitMask& mask) {
    const std::size_t n = graph.num_nodes;
    if (features.num_nodes() != n || labels.num_nodes() != n || mask.num_nodes() != n) {
        throw std::invalid_argument(
            "dataset shapes disagree: graph has " + std::to_string(n) + " nodes, features " +
            std::to_string(features.num_nodes()) + ", labels " +
            std::to_string(labels.num_nodes()) + ", mask " + std::to_string(mask.num_nodes()));
    }
    for (NodeId i = 0; i < n; ++i) {
        if (mask.is_train(i) && !labels.has_label(i)) {
            throw std::invalid_argument("train node " + std::to_string(i) + " has no label");
        }
    }
}

}  // namespace sals
