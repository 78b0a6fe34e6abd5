#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace g2d {

/// Raised when an input file or directory violates the benchmark format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a configuration value is out of its admissible range.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Edge = std::pair<int, int>;

/// Simple undirected graph with optional continuous node attributes.
///
/// Edges are stored normalized (u < v), sorted and unique. Self-loops and
/// duplicates passed to the constructor are dropped and counted in
/// dropped_edges(). Adjacency lists are sorted, so has_edge() is a binary
/// search.
class Graph {
public:
    Graph() = default;
    Graph(int node_count, std::vector<Edge> edges, int label = 0,
          std::optional<Eigen::MatrixXd> node_attributes = std::nullopt);

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    std::span<const int> neighbors(int v) const;
    int degree(int v) const { return static_cast<int>(neighbors(v).size()); }
    bool has_edge(int u, int v) const;

    int label() const { return label_; }
    void set_label(int label) { label_ = label; }

    bool has_attributes() const { return attributes_.has_value(); }
    const Eigen::MatrixXd& attributes() const;
    const std::optional<Eigen::MatrixXd>& maybe_attributes() const { return attributes_; }

    int dropped_edges() const { return dropped_edges_; }

    /// Relabels node v as perm[v].
    Graph permuted(std::span<const int> perm) const;

    Eigen::MatrixXi adjacency_matrix() const;

private:
    int node_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<int> offsets_;
    std::vector<int> adjacency_;
    int label_ = 0;
    std::optional<Eigen::MatrixXd> attributes_;
    int dropped_edges_ = 0;
};

struct GraphDataset {
    std::string name;
    std::vector<Graph> graphs;
    int class_count = 0;
    /// original_labels[k] is the label value found in the input files for class k.
    std::vector<long long> original_labels;

    std::size_t size() const { return graphs.size(); }
    std::vector<int> labels() const;
    bool has_attributes() const;
    /// Throws ConfigError if labels or class_count are inconsistent.
    void validate() const;
};

struct DatasetStats {
    std::size_t graph_count = 0;
    int class_count = 0;
    int max_nodes = 0;
    int min_nodes = 0;
    double avg_nodes = 0.0;
    int max_edges = 0;
    int min_edges = 0;
    double avg_edges = 0.0;
    /// Mean over graphs of the diameter of each graph's largest connected component.
    double avg_diameter = 0.0;
    /// Mean edge density in percent.
    double avg_density = 0.0;
    /// Largest class size divided by smallest class size.
    double max_class_imbalance = 1.0;
};

std::vector<int> degrees(const Graph& graph);

/// Percent of possible undirected edges present; 0 for graphs with fewer than two nodes.
double density_percent(const Graph& graph);

/// Diameter of the largest connected component (ties: lowest-indexed component).
int largest_component_diameter(const Graph& graph);

DatasetStats dataset_stats(const GraphDataset& dataset);

std::string stats_csv_header();
std::string stats_csv_row(const std::string& name, const DatasetStats& stats);

/// Loads a dataset in the multi-file benchmark text format (<DS>_A.txt,
/// <DS>_graph_indicator.txt, <DS>_graph_labels.txt, optional
/// <DS>_node_attributes.txt). The prefix DS is detected from the _A.txt file.
GraphDataset load_benchmark_dataset(const std::filesystem::path& directory);

/// Writes the dataset in the same format; labels are written as their original values.
void write_benchmark_dataset(const GraphDataset& dataset, const std::filesystem::path& directory);

}  // namespace g2d
