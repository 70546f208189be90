#include "sals/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace sals {

namespace {

int argmax_row(const Matrix& m, Eigen::Index i) {
    int best = 0;
    double best_value = m(i, 0);
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
        if (m(i, c) > best_value) {  // strict: ties keep the lowest class index
            best_value = m(i, c);
            best = static_cast<int>(c);
        }
    }
    return best;
}

void check_cache_matches(const ForwardCache& cache, const GcnModel& model,
                         const NormAdjacency& adj, const NodeFeatures& features) {
    const auto n = static_cast<Eigen::Index>(adj.num_nodes);
    bool ok = cache.layer_inputs.size() == model.num_layers() &&
              cache.pre_activations.size() == model.num_layers() &&
              cache.logits.rows() == n && features.matrix.rows() == n &&
              cache.logits.cols() == model.output_dim();
    for (std::size_t l = 0; ok && l < model.num_layers(); ++l) {
        ok = cache.layer_inputs[l].rows() == n &&
             cache.layer_inputs[l].cols() == model.layers[l].in_dim() &&
             cache.pre_activations[l].cols() == model.layers[l].out_dim();
    }
    if (!ok) {
        throw std::invalid_argument("backward: cache does not match model and inputs (stale cache?)");
    }
}

/// Row-wise log-softmax with max subtraction.
Matrix log_softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double row_max = logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            sum += std::exp(logits(i, c) - row_max);
        }
        const double log_sum = std::log(sum);
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            out(i, c) = logits(i, c) - row_max - log_sum;
        }
    }
    return out;
}

struct AdamState {
    std::vector<Matrix> m_weight, v_weight;
    std::vector<Vector> m_bias, v_bias;
    long step = 0;

    explicit AdamState(const GcnModel& model) {
        for (const auto& layer : model.layers) {
            m_weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
            v_weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
            m_bias.push_back(Vector::Zero(layer.bias.size()));
            v_bias.push_back(Vector::Zero(layer.bias.size()));
        }
    }
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(GcnModel& model, const Gradients& grads, AdamState& state, double lr) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto& layer = model.layers[l];
        auto& mw = state.m_weight[l];
        auto& vw = state.v_weight[l];
        mw = kAdamBeta1 * mw + (1.0 - kAdamBeta1) * grads.weight[l];
        vw.array() = kAdamBeta2 * vw.array() +
                     (1.0 - kAdamBeta2) * grads.weight[l].array().square();
        layer.weight.array() -=
            lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + kAdamEps);

        auto& mb = state.m_bias[l];
        auto& vb = state.v_bias[l];
        mb = kAdamBeta1 * mb + (1.0 - kAdamBeta1) * grads.bias[l];
        vb.array() = kAdamBeta2 * vb.array() +
                     (1.0 - kAdamBeta2) * grads.bias[l].array().square();
        layer.bias.array() -= lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + kAdamEps);
    }
}

void check_train_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.hidden_dim < 1 || cfg.num_layers < 1 ||
        cfg.early_stop_patience < 1) {
        throw std::invalid_argument("TrainConfig: counts must be positive");
    }
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
        throw std::invalid_argument("TrainConfig: dropout must lie in [0, 1)");
    }
    if (!(cfg.learning_rate > 0.0) || cfg.weight_decay < 0.0) {
        throw std::invalid_argument("TrainConfig: invalid learning_rate/weight_decay");
    }
}

}  // namespace

NormAdjacency normalize_adjacency(const Graph& graph) {
    NormAdjacency adj;
    adj.num_nodes = graph.num_nodes;
    adj.row_offsets.resize(graph.num_nodes + 1, 0);

    std::vector<double> inv_sqrt_degree(graph.num_nodes);
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        inv_sqrt_degree[i] = 1.0 / std::sqrt(static_cast<double>(graph.degree(i) + 1));
    }

    adj.col_ids.reserve(graph.neighbor_ids.size() + graph.num_nodes);
    adj.values.reserve(graph.neighbor_ids.size() + graph.num_nodes);
    for (NodeId i = 0; i < graph.num_nodes; ++i) {
        bool self_inserted = false;
        for (NodeId j : neighbors(graph, i)) {
            if (!self_inserted && j > i) {
                adj.col_ids.push_back(i);
                adj.values.push_back(inv_sqrt_degree[i] * inv_sqrt_degree[i]);
                self_inserted = true;
            }
            adj.col_ids.push_back(j);
            adj.values.push_back(inv_sqrt_degree[i] * inv_sqrt_degree[j]);
        }
        if (!self_inserted) {
            adj.col_ids.push_back(i);
            adj.values.push_back(inv_sqrt_degree[i] * inv_sqrt_degree[i]);
        }
        adj.row_offsets[i + 1] = adj.col_ids.size();
    }
    return adj;
}

Matrix propagate(const NormAdjacency& adj, const Matrix& x) {
    if (static_cast<std::size_t>(x.rows()) != adj.num_nodes) {
        throw std::invalid_argument("propagate: row count does not match adjacency");
    }
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (std::size_t i = 0; i < adj.num_nodes; ++i) {
        auto out_row = out.row(static_cast<Eigen::Index>(i));
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
            out_row += adj.values[k] * x.row(static_cast<Eigen::Index>(adj.col_ids[k]));
        }
    }
    return out;
}

GcnModel init_model(int input_dim, int hidden_dim, int num_classes, int num_layers,
                    bool residual, Rng& rng) {
    if (input_dim < 1 || hidden_dim < 1 || num_classes < 2 || num_layers < 1) {
        throw std::invalid_argument("init_model: invalid dimensions");
    }
    auto glorot = [&](int rows, int cols) {
        Matrix w(rows, cols);
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                w(i, j) = rng.uniform(-limit, limit);
            }
        }
        return w;
    };

    GcnModel model;
    for (int l = 0; l < num_layers; ++l) {
        const int in = (l == 0) ? input_dim : hidden_dim;
        const int out = (l == num_layers - 1) ? num_classes : hidden_dim;
        GcnLayer layer;
        layer.weight = glorot(in, out);
        layer.bias = Vector::Zero(out);
        layer.residual = residual && l > 0 && l < num_layers - 1;  // equal-width hidden layers
        model.layers.push_back(std::move(layer));
    }
    return model;
}

ForwardCache forward(const GcnModel& model, const NormAdjacency& adj,
                     const NodeFeatures& features, bool training, double dropout,
                     Rng* rng) {
    if (model.layers.empty()) throw std::invalid_argument("forward: empty model");
    if (features.matrix.cols() != model.input_dim()) {
        throw std::invalid_argument("forward: feature dim " +
                                    std::to_string(features.matrix.cols()) +
                                    " does not match first layer (" +
                                    std::to_string(model.input_dim()) + ")");
    }
    if (features.num_nodes() != adj.num_nodes) {
        throw std::invalid_argument("forward: feature rows do not match adjacency");
    }
    const bool use_dropout = training && dropout > 0.0;
    if (use_dropout && rng == nullptr) {
        throw std::invalid_argument("forward: dropout in training mode needs an rng");
    }

    ForwardCache cache;
    cache.training = training;
    cache.dropout = use_dropout ? dropout : 0.0;
    const std::size_t num_layers = model.num_layers();
    cache.layer_inputs.reserve(num_layers);
    cache.pre_activations.reserve(num_layers);
    cache.dropout_masks.assign(num_layers, Matrix());

    Matrix h = features.matrix;
    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto& layer = model.layers[l];
        if (h.cols() != layer.in_dim()) {
            throw std::invalid_argument("forward: layer " + std::to_string(l) +
                                        " input width mismatch");
        }
        cache.layer_inputs.push_back(h);
        Matrix z = propagate(adj, (h * layer.weight).eval());
        z.rowwise() += layer.bias.transpose();
        cache.pre_activations.push_back(z);

        if (l + 1 == num_layers) {
            cache.logits = std::move(z);
            break;
        }
        Matrix a = z.cwiseMax(0.0);
        if (layer.residual && layer.in_dim() == layer.out_dim()) {
            a += h;
        }
        if (use_dropout) {
            Matrix mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < mask.rows(); ++i) {
                for (Eigen::Index c = 0; c < mask.cols(); ++c) {
                    mask(i, c) = rng->bernoulli(dropout) ? 0.0 : 1.0;
                }
            }
            a = (a.array() * mask.array()).matrix() / (1.0 - dropout);
            cache.dropout_masks[l] = std::move(mask);
        }
        h = std::move(a);
    }

    cache.probabilities.resize(cache.logits.rows(), cache.logits.cols());
    for (Eigen::Index i = 0; i < cache.logits.rows(); ++i) {
        const double row_max = cache.logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index c = 0; c < cache.logits.cols(); ++c) {
            const double e = std::exp(cache.logits(i, c) - row_max);
            cache.probabilities(i, c) = e;
            sum += e;
        }
        cache.probabilities.row(i) /= sum;
    }
    return cache;
}

double soft_cross_entropy(const ForwardCache& cache, const TargetDistribution& targets,
                          const SplitMask& mask) {
    if (targets.matrix.rows() != cache.logits.rows() ||
        targets.matrix.cols() != cache.logits.cols()) {
        throw std::invalid_argument("soft_cross_entropy: target shape mismatch");
    }
    const std::size_t num_train = mask.count(Role::Train);
    if (num_train == 0) throw std::invalid_argument("soft_cross_entropy: empty train set");

    const Matrix log_p = log_softmax_rows(cache.logits);
    double total = 0.0;
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        total -= targets.matrix.row(row).dot(log_p.row(row));
    }
    return total / static_cast<double>(num_train);
}

Vector per_node_cross_entropy(const ForwardCache& cache, const TargetDistribution& targets) {
    const Matrix log_p = log_softmax_rows(cache.logits);
    Vector out(cache.logits.rows());
    for (Eigen::Index i = 0; i < cache.logits.rows(); ++i) {
        out(i) = -targets.matrix.row(i).dot(log_p.row(i));
    }
    return out;
}

Matrix logit_gradient_rows(const ForwardCache& cache, const TargetDistribution& targets,
                           const SplitMask& mask) {
    Matrix g = Matrix::Zero(cache.logits.rows(), cache.logits.cols());
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (!mask.is_train(i)) continue;
        const auto row = static_cast<Eigen::Index>(i);
        g.row(row) = cache.probabilities.row(row) - targets.matrix.row(row);
    }
    return g;
}

Gradients backward(const ForwardCache& cache, const TargetDistribution& targets,
                   const SplitMask& mask, const GcnModel& model, const NormAdjacency& adj,
                   const NodeFeatures& features, double weight_decay) {
    check_cache_matches(cache, model, adj, features);
    const std::size_t num_train = mask.count(Role::Train);
    if (num_train == 0) throw std::invalid_argument("backward: empty train set");

    const std::size_t num_layers = model.num_layers();
    Gradients grads;
    grads.weight.resize(num_layers);
    grads.bias.resize(num_layers);

    // d(loss)/d(logits): (p - q) / |train| on train rows, zero elsewhere.
    Matrix grad_out =
        logit_gradient_rows(cache, targets, mask) / static_cast<double>(num_train);

    for (std::size_t l = num_layers; l-- > 0;) {
        const auto& layer = model.layers[l];
        Matrix grad_z;
        Matrix grad_skip;  // gradient flowing through the residual connection
        if (l + 1 == num_layers) {
            grad_z = std::move(grad_out);
        } else {
            Matrix grad_act = std::move(grad_out);
            if (cache.dropout > 0.0 && cache.dropout_masks[l].size() > 0) {
                grad_act = (grad_act.array() * cache.dropout_masks[l].array()).matrix() /
                           (1.0 - cache.dropout);
            }
            if (layer.residual && layer.in_dim() == layer.out_dim()) {
                grad_skip = grad_act;
            }
            grad_z = (grad_act.array() *
                      (cache.pre_activations[l].array() > 0.0).cast<double>())
                         .matrix();
        }

        // z = A_hat (h W) + b, so dW = h^T (A_hat dz), db = colsum dz.
        const Matrix propagated = propagate(adj, grad_z);
        grads.weight[l] = cache.layer_inputs[l].transpose() * propagated;
        // L2 decay regularizes the first layer's weight matrix only, matching
        // the canonical GCN recipe the 5e-4 default comes from; upper layers
        // (in particular the class-template layer) stay unpenalized so the
        // output probabilities can reach finite-mass targets exactly.
        if (weight_decay > 0.0 && l == 0) {
            grads.weight[l] += weight_decay * layer.weight;
        }
        grads.bias[l] = grad_z.colwise().sum().transpose();

        if (l > 0) {
            grad_out = propagated * layer.weight.transpose();
            if (grad_skip.size() > 0) grad_out += grad_skip;
        }
    }
    return grads;
}

TrainResult train(const Graph& graph, const NodeFeatures& features, const LabelSet& labels,
                  const TargetDistribution& targets, const SplitMask& mask,
                  const TrainConfig& cfg, const EpochObserver& observer) {
    check_train_config(cfg);
    validate_dataset_shapes(graph, features, labels, mask);
    if (targets.matrix.rows() != static_cast<Eigen::Index>(graph.num_nodes) ||
        targets.matrix.cols() != labels.num_classes) {
        throw std::invalid_argument("train: target shape mismatch");
    }
    // Every class needs at least one train node, else its logits are never pulled up.
    std::vector<bool> seen(static_cast<std::size_t>(labels.num_classes), false);
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (mask.is_train(i)) seen[static_cast<std::size_t>(labels.label(i))] = true;
    }
    for (int c = 0; c < labels.num_classes; ++c) {
        if (!seen[static_cast<std::size_t>(c)]) {
            throw std::invalid_argument("train: class " + std::to_string(c) +
                                        " has no train node");
        }
    }

    const NormAdjacency adj = normalize_adjacency(graph);
    Rng rng(cfg.seed);
    GcnModel model = init_model(static_cast<int>(features.dim()), cfg.hidden_dim,
                                labels.num_classes, cfg.num_layers, cfg.residual, rng);
    AdamState adam(model);

    TrainResult result;
    result.history.best_epoch = -1;
    result.history.best_val_accuracy = -1.0;
    GcnModel best_model = model;
    int epochs_since_best = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ForwardCache cache = forward(model, adj, features, true, cfg.dropout, &rng);
        const double loss = soft_cross_entropy(cache, targets, mask);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train: loss diverged to " + std::to_string(loss) +
                                     " at epoch " + std::to_string(epoch) + " (seed " +
                                     std::to_string(cfg.seed) + ")");
        }
        if (observer) observer(epoch, cache);

        const Gradients grads =
            backward(cache, targets, mask, model, adj, features, cfg.weight_decay);
        adam_step(model, grads, adam, cfg.learning_rate);

        const double val_acc = evaluate(model, adj, features, labels, mask, Role::Val);
        result.history.train_loss.push_back(loss);
        result.history.val_accuracy.push_back(val_acc);

        // Ties count as matching the best: they refresh the snapshot (the
        // last epoch attaining the best accuracy is the most converged of the
        // equally good candidates) and reset the patience clock, so training
        // stops only after the validation accuracy stays strictly below its
        // best for a full patience window.
        if (val_acc >= result.history.best_val_accuracy) {
            result.history.best_val_accuracy = val_acc;
            result.history.best_epoch = epoch;
            best_model = model;
            epochs_since_best = 0;
        } else if (++epochs_since_best >= cfg.early_stop_patience) {
            break;
        }
    }
    result.model = std::move(best_model);
    return result;
}

double evaluate(const GcnModel& model, const NormAdjacency& adj, const NodeFeatures& features,
                const LabelSet& labels, const SplitMask& mask, Role role) {
    const std::size_t count = mask.count(role);
    if (count == 0) {
        throw std::invalid_argument(std::string("evaluate: no nodes with role ") +
                                    role_name(role));
    }
    const ForwardCache cache = forward(model, adj, features, false, 0.0);
    std::size_t correct = 0;
    for (NodeId i = 0; i < mask.num_nodes(); ++i) {
        if (mask.role(i) != role) continue;
        if (!labels.has_label(i)) {
            throw std::invalid_argument("evaluate: node " + std::to_string(i) +
                                        " has no label");
        }
        correct += argmax_row(cache.probabilities, static_cast<Eigen::Index>(i)) ==
                   labels.label(i);
    }
    return static_cast<double>(correct) / static_cast<double>(count);
}

std::vector<int> predict(const GcnModel& model, const NormAdjacency& adj,
                         const NodeFeatures& features) {
    const ForwardCache cache = forward(model, adj, features, false, 0.0);
    std::vector<int> out(static_cast<std::size_t>(cache.probabilities.rows()));
    for (Eigen::Index i = 0; i < cache.probabilities.rows(); ++i) {
        out[static_cast<std::size_t>(i)] = argmax_row(cache.probabilities, i);
    }
    return out;
}

namespace {
constexpr char kModelMagic[8] = {'S', 'A', 'L', 'S', 'G', 'C', 'N', '1'};
}

void save_model(const GcnModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kModelMagic, sizeof(kModelMagic));
    const auto num_layers = static_cast<std::uint32_t>(model.num_layers());
    out.write(reinterpret_cast<const char*>(&num_layers), sizeof(num_layers));
    for (const auto& layer : model.layers) {
        const auto in = static_cast<std::uint32_t>(layer.in_dim());
        const auto out_dim = static_cast<std::uint32_t>(layer.out_dim());
        const std::uint8_t residual = layer.residual ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&in), sizeof(in));
        out.write(reinterpret_cast<const char*>(&out_dim), sizeof(out_dim));
        out.write(reinterpret_cast<const char*>(&residual), sizeof(residual));
    }
    for (const auto& layer : model.layers) {
        out.write(reinterpret_cast<const char*>(layer.weight.data()),
                  static_cast<std::streamsize>(sizeof(double) * layer.weight.size()));
        out.write(reinterpret_cast<const char*>(layer.bias.data()),
                  static_cast<std::streamsize>(sizeof(double) * layer.bias.size()));
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

GcnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw std::runtime_error(path.string() + " is not a model checkpoint");
    }
    std::uint32_t num_layers = 0;
    in.read(reinterpret_cast<char*>(&num_layers), sizeof(num_layers));
    if (!in || num_layers == 0 || num_layers > 1000) {
        throw std::runtime_error(path.string() + ": corrupt layer count");
    }
    GcnModel model;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
    for (std::uint32_t l = 0; l < num_layers; ++l) {
        std::uint32_t in_dim = 0, out_dim = 0;
        std::uint8_t residual = 0;
        in.read(reinterpret_cast<char*>(&in_dim), sizeof(in_dim));
        in.read(reinterpret_cast<char*>(&out_dim), sizeof(out_dim));
        in.read(reinterpret_cast<char*>(&residual), sizeof(residual));
        if (!in || in_dim == 0 || out_dim == 0) {
            throw std::runtime_error(path.string() + ": corrupt layer header");
        }
        GcnLayer layer;
        layer.residual = residual != 0;
        model.layers.push_back(std::move(layer));
        dims.emplace_back(in_dim, out_dim);
    }
    for (std::uint32_t l = 0; l < num_layers; ++l) {
        auto& layer = model.layers[l];
        layer.weight.resize(dims[l].first, dims[l].second);
        layer.bias.resize(dims[l].second);
        in.read(reinterpret_cast<char*>(layer.weight.data()),
                static_cast<std::streamsize>(sizeof(double) * layer.weight.size()));
        in.read(reinterpret_cast<char*>(layer.bias.data()),
                static_cast<std::streamsize>(sizeof(double) * layer.bias.size()));
        if (!in) throw std::runtime_error(path.string() + ": truncated parameter data");
    }
    for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
        if (model.layers[l].out_dim() != model.layers[l + 1].in_dim()) {
            throw std::runtime_error(path.string() + ": layer dimensions do not chain");
        }
    }
    return model;
}

}  // namespace sals
