#include "g2d/kernels.hpp"
#include "kernel_oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <set>

using namespace g2d;
using namespace testing;

namespace {

Graph graph_from_mask(int n, std::uint32_t mask)
{
    std::vector<Edge> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (mask >> pair_bit(i, j, n) & 1u) e.emplace_back(i, j);
    return Graph(n, e);
}

bool brute_isomorphic(const Graph& a, const Graph& b)
{
    if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
    std::vector<int> perm(a.node_count());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (const auto& [u, v] : a.edges())
            if (!b.has_edge(perm[u], perm[v])) {
                ok = false;
                break;
            }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

}  // namespace

TEST_CASE("canonical forms")
{
    const Graph p3a(3, {{0, 1}, {1, 2}}), p3b(3, {{0, 2}, {2, 1}}), p3c(3, {{1, 0}, {0, 2}});
    CHECK(canonical_form(p3a) == canonical_form(p3b));
    CHECK(canonical_form(p3a) == canonical_form(p3c));
    CHECK(canonical_form(p3a) != canonical_form(complete_graph(3)));
    CHECK(canonical_node_count(canonical_form(p3a)) == 3);
    CHECK(canonical_edge_count(canonical_form(complete_graph(3))) == 3);
    CHECK(canonical_form(Graph(3, {})) != canonical_form(Graph(4, {})));
}

TEST_CASE("4-node graphs fall into 11 classes, matching brute-force isomorphism")
{
    std::vector<Graph> all;
    for (std::uint32_t m = 0; m < 64; ++m) all.push_back(graph_from_mask(4, m));
    std::set<CanonicalCode> codes;
    for (const auto& g : all) codes.insert(canonical_form(g));
    CHECK(codes.size() == 11);
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i; j < all.size(); ++j)
            CHECK((canonical_form(all[i]) == canonical_form(all[j])) == brute_isomorphic(all[i], all[j]));
}

TEST_CASE("class counts for 5 and 6 nodes")
{
    for (auto [n, expected] : {std::pair{5, 34}, std::pair{6, 156}}) {
        std::set<CanonicalCode> codes;
        const int pairs = n * (n - 1) / 2;
        for (std::uint32_t m = 0; m < (1u << pairs); ++m) codes.insert(canonical_form_bits(n, m));
        CHECK(codes.size() == static_cast<std::size_t>(expected));
    }
}

TEST_CASE("graphlet sampling")
{
    GraphletConfig cfg;
    cfg.min_size = 3;
    cfg.max_size = 3;
    SUBCASE("K6 gives triangles only")
    {
        const auto v = graphlet_count_vector(complete_graph(6), cfg);
        REQUIRE(v.size() == 1);
        CHECK(v[0].first == canonical_form(complete_graph(3)));
        CHECK(v[0].second == 2000);
    }
    SUBCASE("edgeless graph gives edgeless graphlets")
    {
        cfg.max_size = 6;
        const auto v = graphlet_count_vector(Graph(10, {}), cfg);
        double total = 0;
        for (const auto& [code, c] : v) {
            CHECK(canonical_edge_count(code) == 0);
            total += c;
        }
        CHECK(total == 2000);
    }
    SUBCASE("sizes stay in range and tiny graphs give empty vectors")
    {
        cfg.max_size = 5;
        std::mt19937_64 rng(1);
        const auto g = random_graph(12, 0.3, rng);
        for (const auto& s : sample_node_subsets(g, cfg)) {
            CHECK(s.size() >= 3);
            CHECK(s.size() <= 5);
            CHECK(std::set<int>(s.begin(), s.end()).size() == s.size());
        }
        CHECK(graphlet_count_vector(path_graph(2), cfg).empty());
    }
    SUBCASE("shared subsets give identical vectors across a permutation")
    {
        std::mt19937_64 rng(5);
        const auto g = random_graph(15, 0.3, rng);
        const auto perm = random_permutation(15, rng);
        const auto h = g.permuted(perm);
        auto subsets = sample_node_subsets(g, cfg);
        const auto a = count_graphlets(g, subsets);
        for (auto& s : subsets)
            for (int& v : s) v = perm[v];
        CHECK(count_graphlets(h, subsets) == a);
    }
    SUBCASE("invalid configurations")
    {
        cfg.min_size = 2;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
        cfg.min_size = 4;
        cfg.max_size = 7;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("exhaustive graphlet counts match the all-subsets oracle")
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 10; ++t) {
        const auto g = random_graph(5 + t % 3, 0.45, rng);
        const auto r = check_exhaustive_graphlets(g, 3, 6);
        CHECK(r.partition_matches);
        CHECK(r.counts_match);
    }
}

TEST_CASE("cosine kernel")
{
    const SparseVector a{{1, 2.0}}, b{{1, 1.0}, {2, 1.0}}, c{{3, 5.0}};
    CHECK(graphlet_kernel(a, a) == doctest::Approx(1.0));
    CHECK(graphlet_kernel(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(graphlet_kernel(a, c) == 0.0);
    CHECK(graphlet_kernel(a, {}) == 0.0);
    CHECK(sparse_dot(b, b) == 2.0);
}

TEST_CASE("WL relabeling")
{
    SUBCASE("regular graph stays uniform")
    {
        const auto g = cycle_graph(6);
        std::vector<int> labels(6, 2);
        WlDictionary dict;
        for (int it = 0; it < 3; ++it) {
            labels = wl_relabel(labels, g, dict);
            CHECK(std::set<int>(labels.begin(), labels.end()).size() == 1);
        }
    }
    SUBCASE("star separates center and leaves")
    {
        const auto g = star_graph(3);
        WlDictionary dict;
        const auto next = wl_relabel(std::vector<int>{3, 1, 1, 1}, g, dict);
        CHECK(next[0] != next[1]);
        CHECK(next[1] == next[2]);
        CHECK(next[2] == next[3]);
    }
    SUBCASE("isomorphic graphs share label multisets")
    {
        std::mt19937_64 rng(8);
        for (int t = 0; t < 20; ++t) {
            const auto g = random_graph(6, 0.5, rng);
            const auto h = g.permuted(random_permutation(6, rng));
            const Graph* both[2] = {&g, &h};
            const auto hist = wl_histograms(std::span<const Graph* const>(both, 2), 3);
            for (const auto& it : hist) CHECK(it[0] == it[1]);
        }
    }
}

TEST_CASE("WL kernel values")
{
    const auto star = star_graph(3);
    const Graph* one[1] = {&star};
    const auto hist = wl_histograms(std::span<const Graph* const>(one, 1), 1);
    CHECK(sparse_dot(hist[0][0], hist[0][0]) == 10.0);
    CHECK_THROWS_AS(wl_subtree_kernel(star, star, 0), ConfigError);
    CHECK(wl_subtree_kernel(Graph(2, {}), complete_graph(3), 1) == 0.0);

    std::mt19937_64 rng(3);
    const auto g = random_graph(9, 0.4, rng);
    const auto h = g.permuted(random_permutation(9, rng));
    CHECK(wl_subtree_kernel(g, h, 4) == wl_subtree_kernel(g, g, 4));
    CHECK(wl_subtree_kernel(g, g, 4) > 0);
}

TEST_CASE("kernel matrices")
{
    std::size_t calls = 0;
    const auto k = kernel_matrix(3, [&](std::size_t i, std::size_t j) {
        ++calls;
        return double(i + 10 * j);
    });
    CHECK(calls == 6);
    CHECK(k.evaluations == 6);
    CHECK(k.values == k.values.transpose());

    std::mt19937_64 rng(6);
    GraphDataset ds;
    for (int i = 0; i < 20; ++i) ds.graphs.push_back(random_graph(8, 0.35, rng, i % 2));
    ds.class_count = 2;
    const auto wl = wl_kernel_matrix(ds, 3);
    CHECK(wl == wl.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(wl);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8);

    const auto per_iter = wl_iteration_kernels(ds, 3);
    REQUIRE(per_iter.size() == 4);
    Eigen::MatrixXd sum = per_iter[0] + per_iter[1] + per_iter[2] + per_iter[3];
    CHECK((sum - wl).cwiseAbs().maxCoeff() == 0.0);
    CHECK(wl(2, 5) == wl_subtree_kernel(ds.graphs[2], ds.graphs[5], 3));

    GraphletConfig cfg;
    cfg.samples_per_graph = 300;
    const auto gk = graphlet_kernel_matrix(ds, cfg);
    CHECK(gk.values == gk.values.transpose());
    CHECK(gk.values.minCoeff() >= 0.0);
    CHECK(gk.values.maxCoeff() <= 1.0 + 1e-12);
    for (int i = 0; i < 20; ++i) CHECK(gk.values(i, i) == doctest::Approx(1.0));
}
