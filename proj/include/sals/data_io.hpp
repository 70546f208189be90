#pragma once

#include "sals/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace sals {

struct Dataset {
    Graph graph;
    NodeFeatures features;
    LabelSet labels;
    std::string name;
};

/// Loads a dataset from the three on-disk files:
///   edges    - text, one edge per line as "<i>\t<j>", '#' starts a comment
///   features - CSV, row i holds node i's feature vector
///   labels   - CSV with header "node_id,label", rows dense 0..n-1 in order
/// Node count comes from the labels file; -1 marks an absent label.
/// Throws std::runtime_error with the offending line number on parse errors.
/// Shortest exact decimal form of a double (%.17g): round-trips bit-exactly
/// and keeps repeated runs byte-identical. Shared by every CSV/JSON writer.
std::string format_double(double v);

Dataset load_dataset(const std::filesystem::path& edges_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path,
                     std::string name = "");

/// Writes the three files in the exact formats load_dataset reads.
/// Deterministic: identical datasets produce byte-identical files.
void write_dataset(const Dataset& dataset,
                   const std::filesystem::path& edges_path,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& labels_path);

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

/// Uniformly random partition of 0..n-1 into roles, sized by largest-remainder
/// rounding of the fractions. Deterministic given the seed; throws if any role
/// would be empty or the fractions are invalid.
SplitMask make_splits(std::size_t num_nodes, const SplitFractions& fractions,
                      std::uint64_t seed);

/// Planted-partition generator config. Accepted as JSON with exactly these
/// field names.
struct SbmConfig {
    int nodes_per_class = 0;
    int num_classes = 0;
    double p_in = 0.0;
    double p_out = 0.0;
    int feature_dim = 0;
    double feature_noise = 0.0;
    std::uint64_t seed = 0;
};

SbmConfig parse_sbm_config(const std::string& json_text);
SbmConfig load_sbm_config(const std::filesystem::path& path);

/// Samples a stochastic block model: labels are community ids in contiguous
/// blocks, each pair (i, j) is an edge independently with probability p_in or
/// p_out, and node features are the class mean (a unit basis vector, so
/// feature_dim >= num_classes) plus isotropic Gaussian noise.
Dataset generate_sbm(const SbmConfig& cfg);

}  // namespace sals
