#pragma once

#include "g2d/graph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace g2d {

// ---------------------------------------------------------------------------
// Small-graph canonical forms

/// Canonical code of a graph on at most 6 nodes: the node count in the top
/// bits and the lexicographically smallest upper-triangle adjacency bitstring
/// over all node permutations. Two small graphs share a code iff they are
/// isomorphic.
using CanonicalCode = std::uint32_t;

inline constexpr int max_graphlet_size = 6;

/// Upper-triangle bit index of pair (i, j), i < j, in a graph of n nodes.
constexpr int pair_bit(int i, int j, int n)
{
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

/// Raw (non-canonical) upper-triangle bitmask of a small graph.
std::uint32_t adjacency_bits(const Graph& graph);

CanonicalCode canonical_form(const Graph& graph);
CanonicalCode canonical_form_bits(int node_count, std::uint32_t adjacency_bits);

int canonical_node_count(CanonicalCode code);
int canonical_edge_count(CanonicalCode code);

// ---------------------------------------------------------------------------
// Graphlet kernel

struct GraphletConfig {
    int samples_per_graph = 2000;
    int min_size = 3;
    int max_size = 6;
    bool connected_only = false;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Sparse nonnegative count vector, sorted by key.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

/// Node subsets drawn for graphlet sampling: sizes uniform in
/// [min_size, min(max_size, |V|)], nodes uniform without replacement.
std::vector<std::vector<int>> sample_node_subsets(const Graph& graph, const GraphletConfig& config);

/// Canonical code of the subgraph induced by `nodes`.
CanonicalCode induced_code(const Graph& graph, std::span<const int> nodes);

/// Counts induced-subgraph isomorphism classes over the given node subsets.
SparseVector count_graphlets(const Graph& graph, const std::vector<std::vector<int>>& subsets);

/// Sampled graphlet count vector. Graphs with fewer than min_size nodes give
/// an empty vector.
SparseVector graphlet_count_vector(const Graph& graph, const GraphletConfig& config);

/// Counts over every node subset of size in [min_size, max_size] (no sampling).
SparseVector graphlet_count_vector_exhaustive(const Graph& graph, int min_size, int max_size);

double sparse_dot(const SparseVector& a, const SparseVector& b);

/// Cosine of two count vectors; 0 when either is empty or zero.
double graphlet_kernel(const SparseVector& a, const SparseVector& b);

// ---------------------------------------------------------------------------
// Weisfeiler-Lehman subtree kernel

/// Compression dictionary for one WL iteration, shared by all graphs of a dataset.
class WlDictionary {
public:
    int compress(int own, std::vector<int> neighbor_labels);
    std::size_t size() const { return table_.size(); }

private:
    std::map<std::pair<int, std::vector<int>>, int> table_;
};

/// One WL relabeling step: the new label compresses (own label, sorted neighbor labels).
std::vector<int> wl_relabel(std::span<const int> labels, const Graph& graph, WlDictionary& dictionary);

/// Per-graph label histograms for iterations 0..h, with degree initial labels
/// and dictionaries shared across `graphs`. result[t][g] is graph g's histogram at iteration t.
std::vector<std::vector<SparseVector>> wl_histograms(std::span<const Graph* const> graphs, int iterations);
std::vector<std::vector<SparseVector>> wl_histograms(const GraphDataset& dataset, int iterations);

/// Sum over iterations 0..h of the dot product of the two graphs' label histograms.
double wl_subtree_kernel(const Graph& a, const Graph& b, int iterations);

// ---------------------------------------------------------------------------
// Kernel matrices

struct KernelMatrix {
    Eigen::MatrixXd values;
    std::size_t evaluations = 0;
    double seconds = 0.0;
};

/// Fills an n x n symmetric matrix from the upper triangle: n(n+1)/2 calls of kernel(i, j) with i <= j.
KernelMatrix kernel_matrix(std::size_t n, const std::function<double(std::size_t, std::size_t)>& kernel);

/// One kernel matrix per WL iteration t (K_t = dot products of iteration-t
/// histograms); the WL kernel with h iterations is the sum of K_0..K_h.
std::vector<Eigen::MatrixXd> wl_iteration_kernels(const GraphDataset& dataset, int max_iterations, double* seconds = nullptr);

Eigen::MatrixXd wl_kernel_matrix(const GraphDataset& dataset, int iterations, double* seconds = nullptr);

KernelMatrix graphlet_kernel_matrix(const GraphDataset& dataset, const GraphletConfig& config, double* sampling_seconds = nullptr);

}  // namespace g2d
