#pragma once

// Shared random-instance builders for the unit and acceptance suites.

#include "sals/gnn.hpp"
#include "sals/graph.hpp"
#include "sals/rng.hpp"
#include "sals/types.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace sals::testing {

/// Scratch directory removed on destruction; unique per instantiation.
class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sals_test_" + tag + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        if (path_.empty()) return;
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) {
        other.path_.clear();
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    TempDir& operator=(TempDir&&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Erdos-Renyi graph over n nodes with edge probability p.
inline Graph random_graph(Rng& rng, std::size_t n, double p = 0.25) {
    EdgeList edges;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
        }
    }
    return build_graph(edges, n);
}

/// Uniform labels over [0, num_classes); every node labeled.
inline LabelSet random_labels(Rng& rng, std::size_t n, int num_classes) {
    std::vector<int> labels(n);
    for (auto& l : labels) l = static_cast<int>(rng.index(static_cast<std::size_t>(num_classes)));
    return make_label_set(std::move(labels), num_classes);
}

/// Random role per node with the given train probability, but always at least
/// one train node (node 0 is forced when the draw yields none).
inline SplitMask random_mask(Rng& rng, std::size_t n, double train_p = 0.6) {
    SplitMask mask;
    mask.roles.resize(n);
    bool any_train = false;
    for (auto& role : mask.roles) {
        const double u = rng.uniform();
        role = u < train_p          ? Role::Train
               : u < train_p + 0.2 ? Role::Val
                                   : Role::Test;
        any_train |= role == Role::Train;
    }
    if (!any_train) mask.roles[0] = Role::Train;
    return mask;
}

/// Ensures every class owns at least one train node by relabeling the first
/// train nodes; keeps the instance valid for training entry points.
inline void cover_classes_in_train(LabelSet& labels, const SplitMask& mask) {
    std::vector<NodeId> train = mask.indices(Role::Train);
    for (int c = 0; c < labels.num_classes; ++c) {
        const bool covered = std::any_of(train.begin(), train.end(), [&](NodeId i) {
            return labels.labels[i] == c;
        });
        if (!covered && static_cast<std::size_t>(c) < train.size()) {
            labels.labels[train[static_cast<std::size_t>(c)]] = c;
        }
    }
}

/// Row-stochastic matrix with strictly positive entries.
inline Matrix random_stochastic(Rng& rng, std::size_t rows, int cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(i, c) = rng.uniform(0.05, 1.0);
            sum += m(i, c);
        }
        m.row(i) /= sum;
    }
    return m;
}

/// Standard-normal feature matrix.
inline Matrix random_features(Rng& rng, std::size_t rows, int cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(i, c) = rng.normal();
    }
    return m;
}

/// Smallest |pre-activation| across the rectified (hidden) layers of a
/// forward pass. Central differences are only trustworthy when no hidden
/// unit sits within a probe step of its kink, so gradient checks redraw
/// instances where this dips below a safety margin.
inline double min_hidden_preactivation(const ForwardCache& cache,
                                       std::size_t num_layers) {
    double smallest = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < num_layers; ++l) {
        smallest = std::min(smallest, cache.pre_activations[l].cwiseAbs().minCoeff());
    }
    return smallest;
}

}  // namespace sals::testing
