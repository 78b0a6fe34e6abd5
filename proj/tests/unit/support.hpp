#pragma once

#include "g2d/graph.hpp"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline g2d::Graph path_graph(int n, int label = 0)
{
    std::vector<g2d::Edge> e;
    for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return g2d::Graph(n, e, label);
}

inline g2d::Graph star_graph(int leaves, int label = 0)
{
    std::vector<g2d::Edge> e;
    for (int i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return g2d::Graph(leaves + 1, e, label);
}

inline g2d::Graph complete_graph(int n, int label = 0)
{
    std::vector<g2d::Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return g2d::Graph(n, e, label);
}

inline g2d::Graph cycle_graph(int n, int label = 0)
{
    std::vector<g2d::Edge> e;
    for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return g2d::Graph(n, e, label);
}

/// Two k-cliques (nodes 0..k-1 and k..2k-1) joined by the edge (k-1, k).
inline g2d::Graph barbell_graph(int k)
{
    std::vector<g2d::Edge> e;
    for (int side = 0; side < 2; ++side)
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) e.emplace_back(side * k + i, side * k + j);
    e.emplace_back(k - 1, k);
    return g2d::Graph(2 * k, e);
}

inline g2d::Graph random_graph(int n, double p, std::mt19937_64& rng, int label = 0)
{
    std::bernoulli_distribution coin(p);
    std::vector<g2d::Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (coin(rng)) e.emplace_back(i, j);
    return g2d::Graph(n, e, label);
}

inline std::vector<int> random_permutation(int n, std::mt19937_64& rng)
{
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("g2d_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream(path) << text;
}

}  // namespace testing
