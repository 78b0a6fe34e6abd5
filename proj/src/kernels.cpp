#include "g2d/kernels.hpp"

#include "g2d/log.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace g2d {

namespace {

constexpr int code_shift = 15;

constexpr int pair_count(int n)
{
    return n * (n - 1) / 2;
}

// canonical[n][mask] for n <= 6, filled orbit by orbit.
struct CanonicalTables {
    std::array<std::vector<std::uint16_t>, max_graphlet_size + 1> table;

    CanonicalTables()
    {
        for (int n = 0; n <= max_graphlet_size; ++n) {
            const int bits = pair_count(n);
            const std::uint32_t masks = 1u << bits;
            auto& t = table[n];
            t.assign(masks, std::uint16_t(0xFFFF));

            // bit_map[p][b]: where bit b lands under permutation p.
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::vector<std::vector<int>> bit_map;
            do {
                std::vector<int> m(bits);
                for (int i = 0; i < n; ++i)
                    for (int j = i + 1; j < n; ++j) {
                        int a = perm[i], b = perm[j];
                        if (a > b) std::swap(a, b);
                        m[pair_bit(i, j, n)] = pair_bit(a, b, n);
                    }
                bit_map.push_back(std::move(m));
            } while (std::next_permutation(perm.begin(), perm.end()));

            std::vector<std::uint32_t> orbit;
            for (std::uint32_t mask = 0; mask < masks; ++mask) {
                if (t[mask] != 0xFFFF) continue;
                orbit.clear();
                std::uint32_t best = mask;
                for (const auto& m : bit_map) {
                    std::uint32_t image = 0;
                    for (int b = 0; b < bits; ++b)
                        if (mask >> b & 1u) image |= 1u << m[b];
                    orbit.push_back(image);
                    best = std::min(best, image);
                }
                for (auto o : orbit) t[o] = static_cast<std::uint16_t>(best);
            }
        }
    }
};

const CanonicalTables& canonical_tables()
{
    static const CanonicalTables tables;
    return tables;
}

void append_count(std::map<std::uint32_t, double>& counts, std::uint32_t key)
{
    counts[key] += 1.0;
}

SparseVector to_sparse(const std::map<std::uint32_t, double>& m)
{
    return {m.begin(), m.end()};
}

bool subset_connected(const Graph& g, std::span<const int> nodes)
{
    const int k = static_cast<int>(nodes.size());
    std::uint32_t seen = 1, frontier = 1;
    while (frontier) {
        std::uint32_t next = 0;
        for (int i = 0; i < k; ++i) {
            if (!(frontier >> i & 1u)) continue;
            for (int j = 0; j < k; ++j)
                if (!(seen >> j & 1u) && g.has_edge(nodes[i], nodes[j])) next |= 1u << j;
        }
        seen |= next;
        frontier = next;
    }
    return std::popcount(seen) == k;
}

}  // namespace

std::uint32_t adjacency_bits(const Graph& graph)
{
    const int n = graph.node_count();
    if (n > max_graphlet_size) throw ConfigError("canonical forms are limited to graphs of at most 6 nodes");
    std::uint32_t bits = 0;
    for (const auto& [u, v] : graph.edges()) bits |= 1u << pair_bit(u, v, n);
    return bits;
}

CanonicalCode canonical_form_bits(int node_count, std::uint32_t bits)
{
    if (node_count < 0 || node_count > max_graphlet_size)
        throw ConfigError("canonical forms are limited to graphs of at most 6 nodes");
    if (bits >= (1u << pair_count(node_count))) throw ConfigError("adjacency bitmask wider than the node count allows");
    return (static_cast<std::uint32_t>(node_count) << code_shift) | canonical_tables().table[node_count][bits];
}

CanonicalCode canonical_form(const Graph& graph)
{
    return canonical_form_bits(graph.node_count(), adjacency_bits(graph));
}

int canonical_node_count(CanonicalCode code)
{
    return static_cast<int>(code >> code_shift);
}

int canonical_edge_count(CanonicalCode code)
{
    return std::popcount(code & ((1u << code_shift) - 1));
}

// ---------------------------------------------------------------------------

void GraphletConfig::validate() const
{
    if (min_size < 3 || min_size > max_size || max_size > max_graphlet_size)
        throw ConfigError("graphlet sizes must satisfy 3 <= min_size <= max_size <= 6");
    if (samples_per_graph < 1) throw ConfigError("graphlet sample count must be positive");
}

std::vector<std::vector<int>> sample_node_subsets(const Graph& graph, const GraphletConfig& config)
{
    config.validate();
    const int n = graph.node_count();
    std::vector<std::vector<int>> out;
    if (n < config.min_size) return out;
    const int hi = std::min(config.max_size, n);
    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<int> size_dist(config.min_size, hi);
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    out.reserve(config.samples_per_graph);
    for (int s = 0; s < config.samples_per_graph; ++s) {
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            const int k = size_dist(rng);
            for (int i = 0; i < k; ++i) {
                std::uniform_int_distribution<int> pick(i, n - 1);
                std::swap(pool[i], pool[pick(rng)]);
            }
            std::vector<int> subset(pool.begin(), pool.begin() + k);
            if (config.connected_only && !subset_connected(graph, subset)) continue;
            out.push_back(std::move(subset));
            accepted = true;
        }
        if (!accepted) {
            log::warn("no connected graphlet found after 1000 attempts; sampled ", out.size(), " graphlets");
            break;
        }
    }
    return out;
}

CanonicalCode induced_code(const Graph& graph, std::span<const int> nodes)
{
    const int k = static_cast<int>(nodes.size());
    if (k > max_graphlet_size) throw ConfigError("graphlets are limited to 6 nodes");
    std::uint32_t bits = 0;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (graph.has_edge(nodes[i], nodes[j])) bits |= 1u << pair_bit(i, j, k);
    return canonical_form_bits(k, bits);
}

SparseVector count_graphlets(const Graph& graph, const std::vector<std::vector<int>>& subsets)
{
    std::map<std::uint32_t, double> counts;
    for (const auto& s : subsets) append_count(counts, induced_code(graph, s));
    return to_sparse(counts);
}

SparseVector graphlet_count_vector(const Graph& graph, const GraphletConfig& config)
{
    if (graph.node_count() < config.min_size) {
        log::warn("graph with ", graph.node_count(), " nodes is smaller than the minimum graphlet size ", config.min_size);
        return {};
    }
    return count_graphlets(graph, sample_node_subsets(graph, config));
}

SparseVector graphlet_count_vector_exhaustive(const Graph& graph, int min_size, int max_size)
{
    if (min_size < 1 || max_size > max_graphlet_size || min_size > max_size) throw ConfigError("invalid graphlet size range");
    std::map<std::uint32_t, double> counts;
    const int n = graph.node_count();
    std::vector<int> chosen;
    std::function<void(int)> extend = [&](int next) {
        const int k = static_cast<int>(chosen.size());
        if (k >= min_size) append_count(counts, induced_code(graph, chosen));
        if (k == max_size) return;
        for (int v = next; v < n; ++v) {
            chosen.push_back(v);
            extend(v + 1);
            chosen.pop_back();
        }
    };
    extend(0);
    return to_sparse(counts);
}

double sparse_dot(const SparseVector& a, const SparseVector& b)
{
    double s = 0.0;
    auto i = a.begin(), j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (i->first < j->first)
            ++i;
        else if (j->first < i->first)
            ++j;
        else {
            s += i->second * j->second;
            ++i;
            ++j;
        }
    }
    return s;
}

double graphlet_kernel(const SparseVector& a, const SparseVector& b)
{
    const double na = std::sqrt(sparse_dot(a, a)), nb = std::sqrt(sparse_dot(b, b));
    if (na == 0.0 || nb == 0.0) {
        log::warn("graphlet kernel on a zero count vector; defined as 0");
        return 0.0;
    }
    return std::clamp(sparse_dot(a, b) / (na * nb), 0.0, 1.0);
}

// ---------------------------------------------------------------------------

int WlDictionary::compress(int own, std::vector<int> neighbor_labels)
{
    std::sort(neighbor_labels.begin(), neighbor_labels.end());
    auto [it, inserted] = table_.try_emplace({own, std::move(neighbor_labels)}, static_cast<int>(table_.size()));
    return it->second;
}

std::vector<int> wl_relabel(std::span<const int> labels, const Graph& graph, WlDictionary& dictionary)
{
    if (static_cast<int>(labels.size()) != graph.node_count()) throw ConfigError("one label per node required");
    std::vector<int> out(labels.size());
    std::vector<int> nbr;
    for (int v = 0; v < graph.node_count(); ++v) {
        nbr.clear();
        for (int w : graph.neighbors(v)) nbr.push_back(labels[w]);
        out[v] = dictionary.compress(labels[v], nbr);
    }
    return out;
}

namespace {

SparseVector label_histogram(std::span<const int> labels)
{
    std::map<std::uint32_t, double> counts;
    for (int l : labels) append_count(counts, static_cast<std::uint32_t>(l));
    return to_sparse(counts);
}

}  // namespace

std::vector<std::vector<SparseVector>> wl_histograms(std::span<const Graph* const> graphs, int iterations)
{
    if (iterations < 0) throw ConfigError("WL iteration count must be nonnegative");
    std::vector<std::vector<int>> labels;
    labels.reserve(graphs.size());
    for (const auto* g : graphs) labels.push_back(degrees(*g));

    std::vector<std::vector<SparseVector>> out(iterations + 1);
    for (int t = 0; t <= iterations; ++t) {
        if (t > 0) {
            WlDictionary dict;
            for (std::size_t i = 0; i < graphs.size(); ++i) labels[i] = wl_relabel(labels[i], *graphs[i], dict);
        }
        out[t].reserve(graphs.size());
        for (const auto& l : labels) out[t].push_back(label_histogram(l));
    }
    return out;
}

std::vector<std::vector<SparseVector>> wl_histograms(const GraphDataset& dataset, int iterations)
{
    std::vector<const Graph*> ptrs;
    for (const auto& g : dataset.graphs) ptrs.push_back(&g);
    return wl_histograms(ptrs, iterations);
}

double wl_subtree_kernel(const Graph& a, const Graph& b, int iterations)
{
    if (iterations < 1) throw ConfigError("WL kernel needs at least one iteration");
    const Graph* pair[2] = {&a, &b};
    const auto h = wl_histograms(pair, iterations);
    double k = 0.0;
    for (const auto& it : h) k += sparse_dot(it[0], it[1]);
    return k;
}

// ---------------------------------------------------------------------------

KernelMatrix kernel_matrix(std::size_t n, const std::function<double(std::size_t, std::size_t)>& kernel)
{
    if (n == 0) throw ConfigError("kernel matrix of an empty dataset");
    KernelMatrix out;
    out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel(i, j);
            out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            out.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            ++out.evaluations;
        }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

std::vector<Eigen::MatrixXd> wl_iteration_kernels(const GraphDataset& dataset, int max_iterations, double* seconds)
{
    const auto t0 = std::chrono::steady_clock::now();
    const auto h = wl_histograms(dataset, max_iterations);
    std::vector<Eigen::MatrixXd> out;
    for (const auto& it : h) out.push_back(kernel_matrix(dataset.size(), [&](std::size_t i, std::size_t j) {
                                               return sparse_dot(it[i], it[j]);
                                           }).values);
    if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

Eigen::MatrixXd wl_kernel_matrix(const GraphDataset& dataset, int iterations, double* seconds)
{
    if (iterations < 1) throw ConfigError("WL kernel needs at least one iteration");
    const auto parts = wl_iteration_kernels(dataset, iterations, seconds);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(parts[0].rows(), parts[0].cols());
    for (const auto& p : parts) k += p;
    return k;
}

KernelMatrix graphlet_kernel_matrix(const GraphDataset& dataset, const GraphletConfig& config, double* sampling_seconds)
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<SparseVector> vectors;
    vectors.reserve(dataset.size());
    for (std::size_t g = 0; g < dataset.size(); ++g) {
        GraphletConfig c = config;
        c.seed = config.seed + 0x9E3779B97F4A7C15ULL * (g + 1);
        vectors.push_back(graphlet_count_vector(dataset.graphs[g], c));
    }
    if (sampling_seconds) *sampling_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return kernel_matrix(dataset.size(), [&](std::size_t i, std::size_t j) { return graphlet_kernel(vectors[i], vectors[j]); });
}

}  // namespace g2d
