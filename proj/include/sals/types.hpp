#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>

namespace sals {

// Dense matrices are row-major: per-node rows stay contiguous, which keeps
// CSR propagation and the numpy interop copy-free in spirit.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using NodeId = std::size_t;

/// Transductive split role of a node.
enum class Role { Train, Val, Test };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::Train: return "train";
        case Role::Val: return "val";
        case Role::Test: return "test";
    }
    return "?";
}

}  // namespace sals
