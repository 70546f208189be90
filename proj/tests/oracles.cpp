#include "oracles.hpp"

#include "sals/rng.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace sals::oracle {

namespace {

/// Dense \hat{A} = D^{-1/2} (A + I) D^{-1/2} built entry by entry.
std::vector<std::vector<double>> dense_norm_adjacency(const Graph& graph) {
    const std::size_t n = graph.num_nodes;
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (NodeId i = 0; i < n; ++i) {
        a[i][i] = 1.0;
        for (NodeId j : neighbors(graph, i)) a[i][j] = 1.0;
    }
    std::vector<double> degree(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) degree[i] += a[i][j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a[i][j] /= std::sqrt(degree[i]) * std::sqrt(degree[j]);
        }
    }
    return a;
}

}  // namespace

Matrix dense_forward_logits(const GcnModel& model, const Graph& graph,
                            const Matrix& features) {
    const auto a = dense_norm_adjacency(graph);
    const std::size_t n = graph.num_nodes;

    std::vector<std::vector<double>> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        h[i].assign(static_cast<std::size_t>(features.cols()), 0.0);
        for (Eigen::Index d = 0; d < features.cols(); ++d) {
            h[i][static_cast<std::size_t>(d)] = features(static_cast<Eigen::Index>(i), d);
        }
    }

    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        const auto& layer = model.layers[l];
        const auto in_dim = static_cast<std::size_t>(layer.in_dim());
        const auto out_dim = static_cast<std::size_t>(layer.out_dim());

        // m = h * W
        std::vector<std::vector<double>> m(n, std::vector<double>(out_dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                for (std::size_t d = 0; d < in_dim; ++d) {
                    m[i][o] += h[i][d] * layer.weight(static_cast<Eigen::Index>(d),
                                                      static_cast<Eigen::Index>(o));
                }
            }
        }
        // z = a * m + bias
        std::vector<std::vector<double>> z(n, std::vector<double>(out_dim, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                for (std::size_t k = 0; k < n; ++k) z[i][o] += a[i][k] * m[k][o];
                z[i][o] += layer.bias(static_cast<Eigen::Index>(o));
            }
        }
        if (l + 1 == model.num_layers()) {
            Matrix logits(n, out_dim);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t o = 0; o < out_dim; ++o) {
                    logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) =
                        z[i][o];
                }
            }
            return logits;
        }
        // hidden: relu, then the skip connection when enabled and widths match
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                double v = z[i][o] > 0.0 ? z[i][o] : 0.0;
                if (layer.residual && in_dim == out_dim) v += h[i][o];
                z[i][o] = v;
            }
        }
        h = std::move(z);
    }
    throw std::logic_error("dense_forward_logits: empty model");
}

double naive_soft_cross_entropy(const Matrix& logits, const Matrix& targets,
                                const SplitMask& mask) {
    long double total = 0.0L;
    std::size_t count = 0;
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        long double row_max = logits(row, 0);
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(row, c) > row_max) row_max = logits(row, c);
        }
        long double sum_exp = 0.0L;
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            sum_exp += expl(static_cast<long double>(logits(row, c)) - row_max);
        }
        const long double log_z = row_max + logl(sum_exp);
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            total -= static_cast<long double>(targets(row, c)) *
                     (static_cast<long double>(logits(row, c)) - log_z);
        }
        ++count;
    }
    if (count == 0) throw std::invalid_argument("naive_soft_cross_entropy: no train rows");
    return static_cast<double>(total / static_cast<long double>(count));
}

double training_loss(const GcnModel& model, const NormAdjacency& adj,
                     const NodeFeatures& features, const TargetDistribution& targets,
                     const SplitMask& mask, double weight_decay, double dropout,
                     std::uint64_t rng_seed) {
    Rng rng(rng_seed);
    const ForwardCache cache = forward(model, adj, features, true, dropout, &rng);
    double loss = soft_cross_entropy(cache, targets, mask);
    if (!model.layers.empty()) {
        loss += 0.5 * weight_decay * model.layers.front().weight.squaredNorm();
    }
    return loss;
}

Gradients finite_difference_gradients(const GcnModel& model, const NormAdjacency& adj,
                                      const NodeFeatures& features,
                                      const TargetDistribution& targets,
                                      const SplitMask& mask, double weight_decay,
                                      double dropout, std::uint64_t rng_seed, double h) {
    GcnModel probe = model;  // mutated entry by entry, restored after each probe
    Gradients grads;
    grads.weight.resize(model.num_layers());
    grads.bias.resize(model.num_layers());

    auto central = [&](double& entry) {
        const double saved = entry;
        entry = saved + h;
        const double up = training_loss(probe, adj, features, targets, mask,
                                        weight_decay, dropout, rng_seed);
        entry = saved - h;
        const double down = training_loss(probe, adj, features, targets, mask,
                                          weight_decay, dropout, rng_seed);
        entry = saved;
        return (up - down) / (2.0 * h);
    };

    for (std::size_t l = 0; l < model.num_layers(); ++l) {
        auto& layer = probe.layers[l];
        grads.weight[l].resize(layer.weight.rows(), layer.weight.cols());
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
                grads.weight[l](r, c) = central(layer.weight(r, c));
            }
        }
        grads.bias[l].resize(layer.bias.size());
        for (Eigen::Index b = 0; b < layer.bias.size(); ++b) {
            grads.bias[l](b) = central(layer.bias(b));
        }
    }
    return grads;
}

double minimized_logit_gap(double epsilon, double gamma, const std::vector<double>& eta,
                           int own_class, int other_class) {
    const std::size_t num_classes = eta.size();
    std::vector<double> q(num_classes, 0.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        q[c] = epsilon * (gamma * eta[c] + (1.0 - gamma) / static_cast<double>(num_classes));
    }
    q[static_cast<std::size_t>(own_class)] += 1.0 - epsilon;
    for (double qc : q) {
        if (qc <= 0.0) {
            throw std::invalid_argument("minimized_logit_gap: target lacks full support");
        }
    }

    // Gradient descent on z for H(q, softmax(z)); gradient is softmax(z) - q.
    std::vector<double> z(num_classes, 0.0);
    std::vector<double> p(num_classes, 0.0);
    for (int iter = 0; iter < 200000; ++iter) {
        double z_max = z[0];
        for (double zi : z) z_max = std::max(z_max, zi);
        double sum = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            p[c] = std::exp(z[c] - z_max);
            sum += p[c];
        }
        double worst = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            p[c] /= sum;
            worst = std::max(worst, std::abs(p[c] - q[c]));
        }
        if (worst < 1e-13) break;
        for (std::size_t c = 0; c < num_classes; ++c) z[c] -= p[c] - q[c];
    }
    return z[static_cast<std::size_t>(own_class)] - z[static_cast<std::size_t>(other_class)];
}

double pairwise_gini(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("pairwise_gini: empty sample");
    double abs_diff_sum = 0.0;
    double total = 0.0;
    for (double a : values) {
        total += a;
        for (double b : values) abs_diff_sum += std::abs(a - b);
    }
    if (total <= 0.0) return 0.0;
    const double n = static_cast<double>(values.size());
    return abs_diff_sum / (2.0 * n * n * (total / n));
}

}  // namespace sals::oracle
