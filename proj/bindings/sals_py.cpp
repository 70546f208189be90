#include "sals/analysis.hpp"
#include "sals/cli.hpp"
#include "sals/data_io.hpp"
#include "sals/gnn.hpp"
#include "sals/graph.hpp"
#include "sals/targets.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <stdexcept>
#include <string>

namespace py = pybind11;

namespace {

sals::Role parse_role(const std::string& name) {
    if (name == "train") return sals::Role::Train;
    if (name == "val") return sals::Role::Val;
    if (name == "test") return sals::Role::Test;
    throw std::invalid_argument("unknown role '" + name + "' (train, val, or test)");
}

sals::TrainConfig make_train_config(double learning_rate, double weight_decay,
                                    double dropout, int epochs, int hidden_dim,
                                    int num_layers, std::uint64_t seed, int patience,
                                    bool residual) {
    sals::TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.weight_decay = weight_decay;
    cfg.dropout = dropout;
    cfg.epochs = epochs;
    cfg.hidden_dim = hidden_dim;
    cfg.num_layers = num_layers;
    cfg.seed = seed;
    cfg.early_stop_patience = patience;
    cfg.residual = residual;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_sals, m) {
    m.doc() = "Structure-aware label smoothing and graph convolutional training";

    py::class_<sals::Graph>(m, "Graph")
        .def_readonly("num_nodes", &sals::Graph::num_nodes)
        .def_readonly("num_edges", &sals::Graph::num_edges)
        .def("degree", &sals::Graph::degree, py::arg("i"))
        .def(
            "neighbors",
            [](const sals::Graph& g, sals::NodeId i) {
                auto view = sals::neighbors(g, i);
                return std::vector<sals::NodeId>(view.begin(), view.end());
            },
            py::arg("i"))
        .def("__repr__", [](const sals::Graph& g) {
            return "Graph(num_nodes=" + std::to_string(g.num_nodes) +
                   ", num_edges=" + std::to_string(g.num_edges) + ")";
        });

    m.def(
        "build_graph",
        [](const sals::EdgeList& edges, std::size_t num_nodes) {
            return sals::build_graph(edges, num_nodes);
        },
        py::arg("edges"), py::arg("num_nodes"),
        "Symmetric, deduplicated, self-loop-free graph from (i, j) pairs.");

    py::class_<sals::LabelSet>(m, "LabelSet")
        .def(py::init([](std::vector<int> labels, int num_classes) {
                 return sals::make_label_set(std::move(labels), num_classes);
             }),
             py::arg("labels"), py::arg("num_classes"),
             "Per-node labels in [0, C); -1 marks an unlabeled node.")
        .def_readonly("labels", &sals::LabelSet::labels)
        .def_readonly("num_classes", &sals::LabelSet::num_classes);

    py::class_<sals::SplitMask>(m, "SplitMask")
        .def("role", [](const sals::SplitMask& mask,
                        sals::NodeId i) { return sals::role_name(mask.role(i)); },
             py::arg("i"))
        .def(
            "count",
            [](const sals::SplitMask& mask, const std::string& role) {
                return mask.count(parse_role(role));
            },
            py::arg("role"))
        .def(
            "indices",
            [](const sals::SplitMask& mask, const std::string& role) {
                return mask.indices(parse_role(role));
            },
            py::arg("role"));

    m.def(
        "make_splits",
        [](std::size_t num_nodes, std::uint64_t seed, double train, double val,
           double test) {
            return sals::make_splits(num_nodes, {train, val, test}, seed);
        },
        py::arg("num_nodes"), py::arg("seed"), py::arg("train") = 0.6,
        py::arg("val") = 0.2, py::arg("test") = 0.2,
        "Random role partition, largest-remainder sized, deterministic per seed.");

    py::class_<sals::Dataset>(m, "Dataset")
        .def_readonly("graph", &sals::Dataset::graph)
        .def_readonly("labels", &sals::Dataset::labels)
        .def_property_readonly(
            "features", [](const sals::Dataset& d) { return d.features.matrix; });

    m.def("load_dataset", &sals::load_dataset, py::arg("edges_path"),
          py::arg("features_path"), py::arg("labels_path"), py::arg("name") = "");
    m.def(
        "generate_sbm",
        [](int nodes_per_class, int num_classes, double p_in, double p_out,
           int feature_dim, double feature_noise, std::uint64_t seed) {
            sals::SbmConfig cfg;
            cfg.nodes_per_class = nodes_per_class;
            cfg.num_classes = num_classes;
            cfg.p_in = p_in;
            cfg.p_out = p_out;
            cfg.feature_dim = feature_dim;
            cfg.feature_noise = feature_noise;
            cfg.seed = seed;
            return sals::generate_sbm(cfg);
        },
        py::arg("nodes_per_class"), py::arg("num_classes"), py::arg("p_in"),
        py::arg("p_out"), py::arg("feature_dim"), py::arg("feature_noise"),
        py::arg("seed"),
        "Planted-partition graph with unit-basis class means plus Gaussian noise.");

    m.def(
        "compute_ratios",
        [](const sals::Graph& graph, const sals::LabelSet& labels,
           const sals::SplitMask& mask) {
            auto stats = sals::compute_ratios(graph, labels, mask);
            return py::make_tuple(stats.ratios, stats.labeled_degree);
        },
        py::arg("graph"), py::arg("labels"), py::arg("mask"),
        "(ratios, labeled_degree): per-node label shares over labeled train neighbors.");

    m.def(
        "hard_targets",
        [](const sals::LabelSet& labels, const sals::SplitMask& mask) {
            return sals::hard_targets(labels, mask).matrix;
        },
        py::arg("labels"), py::arg("mask"));
    m.def(
        "ls_targets",
        [](const sals::LabelSet& labels, const sals::SplitMask& mask, double epsilon) {
            return sals::ls_targets(labels, mask, epsilon).matrix;
        },
        py::arg("labels"), py::arg("mask"), py::arg("epsilon"));
    m.def(
        "sals_targets",
        [](const sals::Graph& graph, const sals::LabelSet& labels,
           const sals::SplitMask& mask, double epsilon, double gamma) {
            sals::SmoothingConfig cfg;
            cfg.epsilon = epsilon;
            cfg.gamma = gamma;
            const auto stats = sals::compute_ratios(graph, labels, mask);
            return sals::sals_targets(labels, mask, stats, cfg).matrix;
        },
        py::arg("graph"), py::arg("labels"), py::arg("mask"), py::arg("epsilon") = 0.4,
        py::arg("gamma") = 0.8,
        "Train rows become (1-eps)*onehot + eps*(gamma*eta + (1-gamma)*uniform).");

    m.def("optimum_logit_gap", &sals::optimum_logit_gap, py::arg("epsilon"),
          py::arg("gamma"), py::arg("r_c"), py::arg("num_classes"),
          "Closed-form gap between the optimal correct-class and class-c logits.");

    py::class_<sals::GcnModel>(m, "GcnModel")
        .def_property_readonly("num_layers", &sals::GcnModel::num_layers)
        .def_property_readonly("input_dim", &sals::GcnModel::input_dim)
        .def_property_readonly("output_dim", &sals::GcnModel::output_dim);

    py::class_<sals::TrainHistory>(m, "TrainHistory")
        .def_readonly("train_loss", &sals::TrainHistory::train_loss)
        .def_readonly("val_accuracy", &sals::TrainHistory::val_accuracy)
        .def_readonly("best_epoch", &sals::TrainHistory::best_epoch)
        .def_readonly("best_val_accuracy", &sals::TrainHistory::best_val_accuracy);

    py::class_<sals::TrainResult>(m, "TrainResult")
        .def_readonly("model", &sals::TrainResult::model)
        .def_readonly("history", &sals::TrainResult::history);

    m.def(
        "train",
        [](const sals::Graph& graph, const sals::Matrix& features,
           const sals::LabelSet& labels, const sals::Matrix& targets,
           const sals::SplitMask& mask, double learning_rate, double weight_decay,
           double dropout, int epochs, int hidden_dim, int num_layers,
           std::uint64_t seed, int patience, bool residual) {
            sals::TargetDistribution target_dist;
            target_dist.matrix = targets;
            target_dist.kind = sals::TargetKind::Sals;
            return sals::train(graph, {features}, labels, target_dist, mask,
                               make_train_config(learning_rate, weight_decay, dropout,
                                                 epochs, hidden_dim, num_layers, seed,
                                                 patience, residual));
        },
        py::arg("graph"), py::arg("features"), py::arg("labels"), py::arg("targets"),
        py::arg("mask"), py::arg("learning_rate") = 0.01,
        py::arg("weight_decay") = 5e-4, py::arg("dropout") = 0.5,
        py::arg("epochs") = 300, py::arg("hidden_dim") = 64, py::arg("num_layers") = 3,
        py::arg("seed") = 0, py::arg("patience") = 50, py::arg("residual") = false,
        "Full-batch training against an N x C target matrix; returns the best "
        "validation model and the loss/accuracy history.");

    m.def(
        "predict_proba",
        [](const sals::GcnModel& model, const sals::Graph& graph,
           const sals::Matrix& features) {
            const auto adj = sals::normalize_adjacency(graph);
            return sals::forward(model, adj, {features}, false, 0.0).probabilities;
        },
        py::arg("model"), py::arg("graph"), py::arg("features"),
        "Row-stochastic class probabilities in evaluation mode.");

    m.def(
        "evaluate",
        [](const sals::GcnModel& model, const sals::Graph& graph,
           const sals::Matrix& features, const sals::LabelSet& labels,
           const sals::SplitMask& mask, const std::string& role) {
            const auto adj = sals::normalize_adjacency(graph);
            return sals::evaluate(model, adj, {features}, labels, mask,
                                  parse_role(role));
        },
        py::arg("model"), py::arg("graph"), py::arg("features"), py::arg("labels"),
        py::arg("mask"), py::arg("role"), "Argmax accuracy over one role.");

    m.def("save_model", &sals::save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &sals::load_model, py::arg("path"));

    m.def(
        "reliability",
        [](const sals::Matrix& probabilities, const sals::LabelSet& labels,
           const sals::SplitMask& mask, const std::string& role, int num_bins) {
            const auto report =
                sals::reliability(probabilities, labels, mask, parse_role(role), num_bins);
            py::list bins;
            for (const auto& bin : report.bins) {
                py::dict d;
                d["confidence_low"] = bin.confidence_low;
                d["confidence_high"] = bin.confidence_high;
                d["mean_confidence"] = bin.mean_confidence;
                d["empirical_accuracy"] = bin.empirical_accuracy;
                d["count"] = bin.count;
                bins.append(d);
            }
            py::dict out;
            out["ece"] = report.ece;
            out["total"] = report.total;
            out["bins"] = bins;
            return out;
        },
        py::arg("probabilities"), py::arg("labels"), py::arg("mask"),
        py::arg("role") = "test", py::arg("num_bins") = 10,
        "Equal-width confidence bins and the expected calibration error.");

    m.def(
        "verify_ce_decomposition",
        [](const sals::Graph& graph, const sals::LabelSet& labels,
           const sals::SplitMask& mask, double epsilon, double gamma,
           const sals::Matrix& predictions) {
            sals::SmoothingConfig cfg;
            cfg.epsilon = epsilon;
            cfg.gamma = gamma;
            const auto stats = sals::compute_ratios(graph, labels, mask);
            return sals::verify_ce_decomposition(graph, labels, mask, stats, cfg,
                                                 predictions);
        },
        py::arg("graph"), py::arg("labels"), py::arg("mask"), py::arg("epsilon"),
        py::arg("gamma"), py::arg("predictions"),
        "Max residual of the smoothed-target cross-entropy decomposition.");

    m.def("gini_coefficient", &sals::gini_coefficient, py::arg("values"),
          "Inequality of a non-negative sample: 0 for all-equal, towards 1 for "
          "single-entry concentration.");
}
