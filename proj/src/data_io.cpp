#include "sals/data_io.hpp"

#include "sals/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace sals {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line_no,
                             const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return in;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Strict integer parse of [begin, end); the whole range must be consumed.
bool parse_int(const char* begin, const char* end, long long& out) {
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

bool parse_double(const char* begin, const char* end, double& out) {
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

void append_double(std::string& out, double v) {
    std::array<char, 40> buf;
    const int len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
    out.append(buf.data(), static_cast<std::size_t>(len));
}

std::vector<int> read_labels_file(const std::filesystem::path& path, int& num_classes) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) parse_fail(path, 1, "empty labels file");
    ++line_no;
    strip_cr(line);
    if (line != "node_id,label") {
        parse_fail(path, line_no, "expected header 'node_id,label', got '" + line + "'");
    }

    std::vector<int> labels;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto comma = line.find(',');
        if (comma == std::string::npos) parse_fail(path, line_no, "expected 'node_id,label'");
        long long node_id = 0, label = 0;
        if (!parse_int(line.data(), line.data() + comma, node_id) ||
            !parse_int(line.data() + comma + 1, line.data() + line.size(), label)) {
            parse_fail(path, line_no, "malformed row '" + line + "'");
        }
        // Ids must be dense and in order; silent remapping would break the
        // alignment with the feature and edge files.
        if (node_id != static_cast<long long>(labels.size())) {
            parse_fail(path, line_no, "node ids must be dense 0..n-1 in order; expected " +
                                          std::to_string(labels.size()) + ", got " +
                                          std::to_string(node_id));
        }
        if (label < -1) parse_fail(path, line_no, "label must be >= -1");
        labels.push_back(static_cast<int>(label));
        max_label = std::max(max_label, static_cast<int>(label));
    }
    if (labels.empty()) parse_fail(path, line_no, "labels file has no rows");
    if (max_label < 1) parse_fail(path, line_no, "need at least 2 classes");
    num_classes = max_label + 1;
    return labels;
}

Matrix read_features_file(const std::filesystem::path& path, std::size_t num_nodes) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        std::vector<double> row;
        const char* cursor = line.data();
        const char* end = line.data() + line.size();
        while (true) {
            const char* cell_end = std::find(cursor, end, ',');
            double v = 0.0;
            if (!parse_double(cursor, cell_end, v)) {
                parse_fail(path, line_no, "malformed float in feature row");
            }
            row.push_back(v);
            if (cell_end == end) break;
            cursor = cell_end + 1;
        }
        if (width == 0) {
            width = row.size();
        } else if (row.size() != width) {
            parse_fail(path, line_no, "feature row has " + std::to_string(row.size()) +
                                          " columns, expected " + std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() != num_nodes) {
        throw std::runtime_error(path.string() + ": " + std::to_string(rows.size()) +
                                 " feature rows for " + std::to_string(num_nodes) + " nodes");
    }
    Matrix m(static_cast<Eigen::Index>(num_nodes), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t d = 0; d < width; ++d) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
        }
    }
    return m;
}

EdgeList read_edges_file(const std::filesystem::path& path, std::size_t num_nodes) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    std::size_t line_no = 0;
    EdgeList edges;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (!line.empty() && line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            parse_fail(path, line_no, "expected '<i>\\t<j>', got '" + line + "'");
        }
        long long a = 0, b = 0;
        if (!parse_int(line.data(), line.data() + tab, a) ||
            !parse_int(line.data() + tab + 1, line.data() + line.size(), b)) {
            parse_fail(path, line_no, "malformed edge '" + line + "'");
        }
        if (a < 0 || b < 0 || a >= static_cast<long long>(num_nodes) ||
            b >= static_cast<long long>(num_nodes)) {
            parse_fail(path, line_no, "edge endpoint out of range [0, " +
                                          std::to_string(num_nodes) + ")");
        }
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
    }
    return edges;
}

}  // namespace

std::string format_double(double v) {
    std::string out;
    append_double(out, v);
    return out;
}

Dataset load_dataset(const std::filesystem::path& edges_path,
                     const std::filesystem::path& features_path,
                     const std::filesystem::path& labels_path, std::string name) {
    int num_classes = 0;
    std::vector<int> raw_labels = read_labels_file(labels_path, num_classes);
    const std::size_t n = raw_labels.size();

    Dataset ds;
    ds.labels = make_label_set(std::move(raw_labels), num_classes);
    ds.features = NodeFeatures{read_features_file(features_path, n)};
    if (!ds.features.matrix.allFinite()) {
        throw std::runtime_error(features_path.string() + ": non-finite feature value");
    }
    ds.graph = build_graph(read_edges_file(edges_path, n), n);
    ds.name = name.empty() ? labels_path.stem().string() : std::move(name);
    return ds;
}

void write_dataset(const Dataset& dataset,
                   const std::filesystem::path& edges_path,
                   const std::filesystem::path& features_path,
                   const std::filesystem::path& labels_path) {
    {
        std::ofstream out(edges_path);
        if (!out) throw std::runtime_error("cannot write " + edges_path.string());
        std::string buf;
        for (const auto& [i, j] : edge_list(dataset.graph)) {
            buf += std::to_string(i);
            buf += '\t';
            buf += std::to_string(j);
            buf += '\n';
        }
        out << buf;
    }
    {
        std::ofstream out(features_path);
        if (!out) throw std::runtime_error("cannot write " + features_path.string());
        std::string buf;
        const auto& m = dataset.features.matrix;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index d = 0; d < m.cols(); ++d) {
                if (d > 0) buf += ',';
                append_double(buf, m(i, d));
            }
            buf += '\n';
        }
        out << buf;
    }
    {
        std::ofstream out(labels_path);
        if (!out) throw std::runtime_error("cannot write " + labels_path.string());
        std::string buf = "node_id,label\n";
        for (NodeId i = 0; i < dataset.labels.num_nodes(); ++i) {
            buf += std::to_string(i);
            buf += ',';
            buf += std::to_string(dataset.labels.labels[i]);
            buf += '\n';
        }
        out << buf;
    }
}

SplitMask make_splits(std::size_t num_nodes, const SplitFractions& fractions,
                      std::uint64_t seed) {
    const std::array<double, 3> f = {fractions.train, fractions.val, fractions.test};
    for (double x : f) {
        if (!(x > 0.0)) throw std::invalid_argument("make_splits: fractions must be positive");
    }
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
        throw std::invalid_argument("make_splits: fractions must sum to 1");
    }

    // Largest-remainder rounding; ties go to the earlier role.
    std::array<std::size_t, 3> sizes{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double exact = static_cast<double>(num_nodes) * f[k];
        sizes[k] = static_cast<std::size_t>(exact);
        remainders[k] = exact - static_cast<double>(sizes[k]);
        assigned += sizes[k];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t k = 0; assigned < num_nodes; ++assigned, ++k) {
        sizes[order[k % 3]] += 1;
    }
    if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
        throw std::invalid_argument("make_splits: a role would be empty with " +
                                    std::to_string(num_nodes) + " nodes");
    }

    std::vector<NodeId> perm(num_nodes);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    Rng rng(seed);
    rng.shuffle(perm);

    SplitMask mask;
    mask.roles.assign(num_nodes, Role::Test);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < sizes[0]; ++k) mask.roles[perm[cursor++]] = Role::Train;
    for (std::size_t k = 0; k < sizes[1]; ++k) mask.roles[perm[cursor++]] = Role::Val;
    for (std::size_t k = 0; k < sizes[2]; ++k) mask.roles[perm[cursor++]] = Role::Test;
    return mask;
}

SbmConfig parse_sbm_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("invalid SBM config JSON: ") + e.what());
    }
    static const std::array<const char*, 7> kFields = {
        "nodes_per_class", "num_classes", "p_in", "p_out",
        "feature_dim",     "feature_noise", "seed"};
    for (const char* field : kFields) {
        if (!doc.contains(field)) {
            throw std::runtime_error(std::string("SBM config missing field '") + field + "'");
        }
    }
    for (const auto& [key, _] : doc.items()) {
        if (std::find_if(kFields.begin(), kFields.end(), [&](const char* f) {
                return key == f;
            }) == kFields.end()) {
            throw std::runtime_error("SBM config has unknown field '" + key + "'");
        }
    }
    SbmConfig cfg;
    cfg.nodes_per_class = doc.at("nodes_per_class").get<int>();
    cfg.num_classes = doc.at("num_classes").get<int>();
    cfg.p_in = doc.at("p_in").get<double>();
    cfg.p_out = doc.at("p_out").get<double>();
    cfg.feature_dim = doc.at("feature_dim").get<int>();
    cfg.feature_noise = doc.at("feature_noise").get<double>();
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    return cfg;
}

SbmConfig load_sbm_config(const std::filesystem::path& path) {
    std::ifstream in = open_or_throw(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_sbm_config(buf.str());
}

Dataset generate_sbm(const SbmConfig& cfg) {
    if (cfg.nodes_per_class < 1) {
        throw std::invalid_argument("generate_sbm: a class would have zero nodes");
    }
    if (cfg.num_classes < 2) {
        throw std::invalid_argument("generate_sbm: need at least 2 classes");
    }
    if (!(cfg.p_out >= 0.0 && cfg.p_out <= cfg.p_in && cfg.p_in <= 1.0)) {
        throw std::invalid_argument("generate_sbm: need 0 <= p_out <= p_in <= 1");
    }
    if (cfg.feature_dim < cfg.num_classes) {
        throw std::invalid_argument(
            "generate_sbm: feature_dim must be >= num_classes for orthogonal class means");
    }
    if (cfg.feature_noise < 0.0) {
        throw std::invalid_argument("generate_sbm: feature_noise must be >= 0");
    }

    const std::size_t n =
        static_cast<std::size_t>(cfg.nodes_per_class) * static_cast<std::size_t>(cfg.num_classes);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<int>(i / static_cast<std::size_t>(cfg.nodes_per_class));
    }

    Rng rng(cfg.seed);
    // Draw order is part of the format: edges over ascending (i, j) pairs
    // first, then features node-major. Changing it changes seeded outputs.
    EdgeList edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = (labels[i] == labels[j]) ? cfg.p_in : cfg.p_out;
            if (rng.bernoulli(p)) edges.emplace_back(i, j);
        }
    }

    Matrix features(static_cast<Eigen::Index>(n), cfg.feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (int d = 0; d < cfg.feature_dim; ++d) {
            const double mean = (d == labels[i]) ? 1.0 : 0.0;  // unit-norm basis mean
            features(static_cast<Eigen::Index>(i), d) = mean + cfg.feature_noise * rng.normal();
        }
    }

    Dataset ds;
    ds.graph = build_graph(edges, n);
    ds.features = NodeFeatures{std::move(features)};
    ds.labels = make_label_set(std::move(labels), cfg.num_classes);
    ds.name = "sbm";
    return ds;
}

}  // namespace sals
