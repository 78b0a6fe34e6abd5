#include "g2d/graph.hpp"

#include "g2d/log.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <queue>
#include <sstream>

namespace g2d {

namespace fs = std::filesystem;

Graph::Graph(int node_count, std::vector<Edge> edges, int label,
             std::optional<Eigen::MatrixXd> node_attributes)
    : node_count_(node_count), label_(label), attributes_(std::move(node_attributes))
{
    if (node_count < 1) throw ConfigError("graph must have at least one node");
    if (attributes_ && attributes_->rows() != node_count)
        throw ConfigError("attribute row count " + std::to_string(attributes_->rows()) +
                          " != node count " + std::to_string(node_count));

    const auto raw = edges.size();
    for (auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= node_count || v >= node_count)
            throw ConfigError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                              ") out of range for " + std::to_string(node_count) + " nodes");
        if (u > v) std::swap(u, v);
    }
    std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);
    dropped_edges_ = static_cast<int>(raw - edges_.size());

    std::vector<int> deg(node_count, 0);
    for (const auto& [u, v] : edges_) {
        ++deg[u];
        ++deg[v];
    }
    offsets_.assign(node_count + 1, 0);
    for (int v = 0; v < node_count; ++v) offsets_[v + 1] = offsets_[v] + deg[v];
    adjacency_.resize(offsets_.back());
    std::vector<int> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [u, v] : edges_) {
        adjacency_[fill[u]++] = v;
        adjacency_[fill[v]++] = u;
    }
    for (int v = 0; v < node_count; ++v)
        std::sort(adjacency_.begin() + offsets_[v], adjacency_.begin() + offsets_[v + 1]);
}

std::span<const int> Graph::neighbors(int v) const
{
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
}

bool Graph::has_edge(int u, int v) const
{
    auto n = neighbors(u);
    return std::binary_search(n.begin(), n.end(), v);
}

const Eigen::MatrixXd& Graph::attributes() const
{
    if (!attributes_) throw ConfigError("graph has no node attributes");
    return *attributes_;
}

Graph Graph::permuted(std::span<const int> perm) const
{
    if (static_cast<int>(perm.size()) != node_count_) throw ConfigError("permutation size mismatch");
    std::vector<Edge> e;
    e.reserve(edges_.size());
    for (const auto& [u, v] : edges_) e.emplace_back(perm[u], perm[v]);
    std::optional<Eigen::MatrixXd> attrs;
    if (attributes_) {
        attrs = Eigen::MatrixXd(attributes_->rows(), attributes_->cols());
        for (int v = 0; v < node_count_; ++v) attrs->row(perm[v]) = attributes_->row(v);
    }
    return Graph(node_count_, std::move(e), label_, std::move(attrs));
}

Eigen::MatrixXi Graph::adjacency_matrix() const
{
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(node_count_, node_count_);
    for (const auto& [u, v] : edges_) a(u, v) = a(v, u) = 1;
    return a;
}

std::vector<int> GraphDataset::labels() const
{
    std::vector<int> out;
    out.reserve(graphs.size());
    for (const auto& g : graphs) out.push_back(g.label());
    return out;
}

bool GraphDataset::has_attributes() const
{
    return !graphs.empty() &&
           std::all_of(graphs.begin(), graphs.end(), [](const Graph& g) { return g.has_attributes(); });
}

void GraphDataset::validate() const
{
    if (class_count < 2) throw ConfigError("dataset needs at least two classes");
    for (const auto& g : graphs)
        if (g.label() < 0 || g.label() >= class_count)
            throw ConfigError("label " + std::to_string(g.label()) + " outside [0, class_count)");
}

std::vector<int> degrees(const Graph& graph)
{
    std::vector<int> d(graph.node_count());
    for (int v = 0; v < graph.node_count(); ++v) d[v] = graph.degree(v);
    return d;
}

double density_percent(const Graph& graph)
{
    const double n = graph.node_count();
    if (n < 2) return 0.0;
    return 200.0 * graph.edge_count() / (n * (n - 1.0));
}

namespace {

std::vector<int> bfs_distances(const Graph& g, int source)
{
    std::vector<int> dist(g.node_count(), -1);
    std::queue<int> frontier;
    dist[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        int u = frontier.front();
        frontier.pop();
        for (int w : g.neighbors(u)) {
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                frontier.push(w);
            }
        }
    }
    return dist;
}

}  // namespace

int largest_component_diameter(const Graph& graph)
{
    const int n = graph.node_count();
    std::vector<int> component(n, -1);
    int best = -1, best_size = 0, count = 0;
    for (int v = 0; v < n; ++v) {
        if (component[v] >= 0) continue;
        auto dist = bfs_distances(graph, v);
        int size = 0;
        for (int w = 0; w < n; ++w)
            if (dist[w] >= 0) {
                component[w] = count;
                ++size;
            }
        if (size > best_size) {
            best_size = size;
            best = count;
        }
        ++count;
    }
    int diameter = 0;
    for (int v = 0; v < n; ++v) {
        if (component[v] != best) continue;
        auto dist = bfs_distances(graph, v);
        diameter = std::max(diameter, *std::max_element(dist.begin(), dist.end()));
    }
    return diameter;
}

DatasetStats dataset_stats(const GraphDataset& dataset)
{
    if (dataset.graphs.empty()) throw ConfigError("dataset_stats on an empty dataset");
    DatasetStats s;
    s.graph_count = dataset.size();
    s.class_count = dataset.class_count;
    s.min_nodes = s.min_edges = std::numeric_limits<int>::max();
    double nodes = 0, edges = 0, diam = 0, dens = 0;
    std::vector<std::size_t> per_class(std::max(dataset.class_count, 1), 0);
    for (const auto& g : dataset.graphs) {
        s.max_nodes = std::max(s.max_nodes, g.node_count());
        s.min_nodes = std::min(s.min_nodes, g.node_count());
        s.max_edges = std::max(s.max_edges, g.edge_count());
        s.min_edges = std::min(s.min_edges, g.edge_count());
        nodes += g.node_count();
        edges += g.edge_count();
        diam += largest_component_diameter(g);
        dens += density_percent(g);
        if (g.label() >= 0 && g.label() < static_cast<int>(per_class.size())) ++per_class[g.label()];
    }
    const double n = static_cast<double>(s.graph_count);
    s.avg_nodes = nodes / n;
    s.avg_edges = edges / n;
    s.avg_diameter = diam / n;
    s.avg_density = dens / n;
    auto [lo, hi] = std::minmax_element(per_class.begin(), per_class.end());
    s.max_class_imbalance = *lo == 0 ? std::numeric_limits<double>::infinity()
                                     : static_cast<double>(*hi) / static_cast<double>(*lo);
    return s;
}

std::string stats_csv_header()
{
    return "dataset,graphs,classes,max_vertices,min_vertices,avg_vertices,max_edges,min_edges,"
           "avg_edges,avg_diameter_lcc,avg_density_pct,max_class_imbalance";
}

std::string stats_csv_row(const std::string& name, const DatasetStats& s)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << name << ',' << s.graph_count << ',' << s.class_count << ',' << s.max_nodes << ','
       << s.min_nodes << ',' << s.avg_nodes << ',' << s.max_edges << ',' << s.min_edges << ','
       << s.avg_edges << ',' << s.avg_diameter << ',' << s.avg_density << ','
       << s.max_class_imbalance;
    return os.str();
}

// ---------------------------------------------------------------------------
// Benchmark text format

namespace {

std::vector<std::string> read_lines(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos <= line.size()) {
        auto next = line.find(',', pos);
        if (next == std::string_view::npos) next = line.size();
        auto field = line.substr(pos, next - pos);
        auto b = field.find_first_not_of(" \t");
        auto e = field.find_last_not_of(" \t");
        out.push_back(b == std::string_view::npos ? std::string_view{} : field.substr(b, e - b + 1));
        pos = next + 1;
    }
    return out;
}

long long parse_int(std::string_view s, const fs::path& file, std::size_t line)
{
    std::string tmp(s);
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(tmp.c_str(), &end, 10);
    if (tmp.empty() || *end != '\0' || errno != 0)
        throw FormatError(file.filename().string() + ":" + std::to_string(line + 1) +
                          ": expected integer, got '" + tmp + "'");
    return v;
}

double parse_real(std::string_view s, const fs::path& file, std::size_t line)
{
    std::string tmp(s);
    char* end = nullptr;
    double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || *end != '\0')
        throw FormatError(file.filename().string() + ":" + std::to_string(line + 1) +
                          ": expected real, got '" + tmp + "'");
    return v;
}

std::string detect_prefix(const fs::path& directory)
{
    if (!fs::is_directory(directory)) throw FormatError(directory.string() + " is not a directory");
    const std::string dirname = directory.filename().empty() ? directory.parent_path().filename().string()
                                                             : directory.filename().string();
    if (fs::exists(directory / (dirname + "_A.txt"))) return dirname;
    std::vector<std::string> candidates;
    for (const auto& entry : fs::directory_iterator(directory)) {
        auto name = entry.path().filename().string();
        if (name.size() > 6 && name.ends_with("_A.txt")) candidates.push_back(name.substr(0, name.size() - 6));
    }
    if (candidates.size() != 1)
        throw FormatError("expected exactly one <DS>_A.txt in " + directory.string() + ", found " +
                          std::to_string(candidates.size()));
    return candidates.front();
}

}  // namespace

GraphDataset load_benchmark_dataset(const fs::path& directory)
{
    const std::string ds = detect_prefix(directory);
    const auto file = [&](const char* suffix) { return directory / (ds + suffix); };
    for (const char* required : {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt"})
        if (!fs::exists(file(required))) throw FormatError("missing mandatory file " + file(required).string());

    const auto label_path = file("_graph_labels.txt");
    auto label_lines = read_lines(label_path);
    const std::size_t graph_count = label_lines.size();
    if (graph_count == 0) throw FormatError("no graphs in " + label_path.string());
    std::vector<long long> raw_labels(graph_count);
    for (std::size_t i = 0; i < graph_count; ++i) raw_labels[i] = parse_int(split_fields(label_lines[i])[0], label_path, i);

    const auto ind_path = file("_graph_indicator.txt");
    auto ind_lines = read_lines(ind_path);
    const std::size_t total_nodes = ind_lines.size();
    std::vector<int> node_graph(total_nodes), node_local(total_nodes);
    std::vector<int> sizes(graph_count, 0);
    for (std::size_t i = 0; i < total_nodes; ++i) {
        long long gid = parse_int(split_fields(ind_lines[i])[0], ind_path, i);
        if (gid < 1 || gid > static_cast<long long>(graph_count))
            throw FormatError(ind_path.filename().string() + ":" + std::to_string(i + 1) + ": graph id " +
                              std::to_string(gid) + " outside [1, " + std::to_string(graph_count) + "]");
        node_graph[i] = static_cast<int>(gid - 1);
        node_local[i] = sizes[gid - 1]++;
    }
    for (std::size_t g = 0; g < graph_count; ++g)
        if (sizes[g] == 0) throw FormatError("graph " + std::to_string(g + 1) + " has no nodes");

    std::vector<std::vector<Edge>> edges(graph_count);
    const auto a_path = file("_A.txt");
    auto a_lines = read_lines(a_path);
    for (std::size_t i = 0; i < a_lines.size(); ++i) {
        auto f = split_fields(a_lines[i]);
        if (f.size() < 2) throw FormatError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": expected 'u, v'");
        long long u = parse_int(f[0], a_path, i), v = parse_int(f[1], a_path, i);
        for (long long x : {u, v})
            if (x < 1 || x > static_cast<long long>(total_nodes))
                throw FormatError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": node " +
                                  std::to_string(x) + " outside [1, " + std::to_string(total_nodes) + "]");
        const int gu = node_graph[u - 1], gv = node_graph[v - 1];
        if (gu != gv)
            throw FormatError(a_path.filename().string() + ":" + std::to_string(i + 1) + ": edge joins graphs " +
                              std::to_string(gu + 1) + " and " + std::to_string(gv + 1));
        edges[gu].emplace_back(node_local[u - 1], node_local[v - 1]);
    }

    std::vector<std::optional<Eigen::MatrixXd>> attrs(graph_count);
    const auto attr_path = file("_node_attributes.txt");
    if (fs::exists(attr_path)) {
        auto lines = read_lines(attr_path);
        if (lines.size() != total_nodes)
            throw FormatError("attribute line count " + std::to_string(lines.size()) + " != total node count " +
                              std::to_string(total_nodes));
        std::size_t width = split_fields(lines[0]).size();
        for (std::size_t g = 0; g < graph_count; ++g) attrs[g] = Eigen::MatrixXd(sizes[g], width);
        for (std::size_t i = 0; i < total_nodes; ++i) {
            auto f = split_fields(lines[i]);
            if (f.size() != width)
                throw FormatError(attr_path.filename().string() + ":" + std::to_string(i + 1) + ": expected " +
                                  std::to_string(width) + " attributes");
            for (std::size_t k = 0; k < width; ++k)
                (*attrs[node_graph[i]])(node_local[i], static_cast<Eigen::Index>(k)) = parse_real(f[k], attr_path, i);
        }
    }

    GraphDataset out;
    out.name = ds;
    out.original_labels = raw_labels;
    std::sort(out.original_labels.begin(), out.original_labels.end());
    out.original_labels.erase(std::unique(out.original_labels.begin(), out.original_labels.end()),
                              out.original_labels.end());
    out.class_count = static_cast<int>(out.original_labels.size());
    std::map<long long, int> remap;
    for (std::size_t k = 0; k < out.original_labels.size(); ++k) remap[out.original_labels[k]] = static_cast<int>(k);

    out.graphs.reserve(graph_count);
    for (std::size_t g = 0; g < graph_count; ++g)
        out.graphs.emplace_back(sizes[g], std::move(edges[g]), remap[raw_labels[g]], std::move(attrs[g]));
    // Undirected edges are conventionally listed in both directions, so only
    // drops beyond that count as anomalies.
    std::size_t kept = 0;
    for (const auto& g : out.graphs) kept += g.edge_count();
    if (a_lines.size() > 2 * kept) log::warn(ds, ": dropped ", a_lines.size() - 2 * kept, " self-loop or duplicate edge lines");
    return out;
}

void write_benchmark_dataset(const GraphDataset& dataset, const fs::path& directory)
{
    fs::create_directories(directory);
    const std::string ds = dataset.name.empty() ? directory.filename().string() : dataset.name;
    std::ofstream a(directory / (ds + "_A.txt")), ind(directory / (ds + "_graph_indicator.txt")),
        lab(directory / (ds + "_graph_labels.txt"));
    if (!a || !ind || !lab) throw FormatError("cannot write dataset files into " + directory.string());
    std::ofstream attr;
    if (dataset.has_attributes()) {
        attr.open(directory / (ds + "_node_attributes.txt"));
        attr << std::setprecision(17);
    }
    long long base = 1;
    for (std::size_t g = 0; g < dataset.size(); ++g) {
        const auto& graph = dataset.graphs[g];
        for (int v = 0; v < graph.node_count(); ++v) ind << (g + 1) << '\n';
        for (const auto& [u, v] : graph.edges()) {
            a << base + u << ", " << base + v << '\n';
            a << base + v << ", " << base + u << '\n';
        }
        const int label = graph.label();
        lab << (label < static_cast<int>(dataset.original_labels.size()) ? dataset.original_labels[label] : label) << '\n';
        if (attr.is_open()) {
            const auto& m = graph.attributes();
            for (int v = 0; v < m.rows(); ++v) {
                for (int k = 0; k < m.cols(); ++k) attr << (k ? ", " : "") << m(v, k);
                attr << '\n';
            }
        }
        base += graph.node_count();
    }
}

}  // namespace g2d
