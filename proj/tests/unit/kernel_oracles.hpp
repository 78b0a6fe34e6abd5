#pragma once

#include "g2d/kernels.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

namespace testing {

/// Edge-set bitmask of an n-node graph under a relabeling, bit (i*n + j) for i < j.
inline std::uint64_t permuted_mask(const std::vector<std::pair<int, int>>& edges, const std::vector<int>& perm, int n)
{
    std::uint64_t m = 0;
    for (auto [a, b] : edges) {
        int u = perm[a], v = perm[b];
        if (u > v) std::swap(u, v);
        m |= std::uint64_t{1} << (u * n + v);
    }
    return m;
}

/// Brute-force canonical label: the smallest edge mask over all n! relabelings.
inline std::uint64_t brute_canonical(int n, const std::vector<std::pair<int, int>>& edges)
{
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::uint64_t best = ~std::uint64_t{0};
    do best = std::min(best, permuted_mask(edges, perm, n));
    while (std::next_permutation(perm.begin(), perm.end()));
    return best | (std::uint64_t{static_cast<unsigned>(n)} << 40);
}

inline std::vector<std::pair<int, int>> induced_edges(const g2d::Graph& g, const std::vector<int>& nodes)
{
    std::vector<std::pair<int, int>> e;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (std::size_t j = i + 1; j < nodes.size(); ++j)
            if (g.has_edge(nodes[i], nodes[j])) e.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return e;
}

struct ExhaustiveCheck {
    bool partition_matches = true;  ///< library classes and oracle classes coincide
    bool counts_match = true;
    std::size_t subsets = 0;
};

/// Compares graphlet_count_vector_exhaustive against enumeration of every node
/// subset with brute-force canonical labels.
inline ExhaustiveCheck check_exhaustive_graphlets(const g2d::Graph& g, int min_size, int max_size)
{
    ExhaustiveCheck out;
    const int n = g.node_count();
    std::map<std::uint64_t, double> oracle_counts;
    std::map<std::uint32_t, std::uint64_t> lib_to_oracle;
    std::map<std::uint64_t, std::uint32_t> oracle_to_lib;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        const int k = __builtin_popcount(mask);
        if (k < min_size || k > max_size) continue;
        std::vector<int> nodes;
        for (int v = 0; v < n; ++v)
            if (mask >> v & 1u) nodes.push_back(v);
        const auto oracle = brute_canonical(k, induced_edges(g, nodes));
        const auto lib = g2d::induced_code(g, nodes);
        oracle_counts[oracle] += 1.0;
        ++out.subsets;
        auto [it1, fresh1] = lib_to_oracle.emplace(lib, oracle);
        auto [it2, fresh2] = oracle_to_lib.emplace(oracle, lib);
        if (it1->second != oracle || it2->second != lib) out.partition_matches = false;
    }
    const auto vec = g2d::graphlet_count_vector_exhaustive(g, min_size, max_size);
    if (vec.size() != oracle_counts.size()) out.counts_match = false;
    for (const auto& [code, count] : vec) {
        const auto it = lib_to_oracle.find(code);
        if (it == lib_to_oracle.end() || oracle_counts[it->second] != count) out.counts_match = false;
    }
    return out;
}

}  // namespace testing
