#include "g2d/embed.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace g2d;
using namespace testing;

TEST_CASE("transition weights follow the three-case rule")
{
    SUBCASE("p = q = 1 is uniform")
    {
        std::mt19937_64 rng(1);
        const auto g = random_graph(12, 0.5, rng);
        for (const auto& [u, v] : g.edges()) {
            const auto w = transition_weights(u, v, g, 1.0, 1.0);
            CHECK(std::all_of(w.begin(), w.end(), [](double x) { return x == 1.0; }));
        }
    }
    SUBCASE("path a-b-c")
    {
        const auto w = transition_weights(0, 1, path_graph(3), 0.25, 4.0);
        REQUIRE(w.size() == 2);
        CHECK(w[0] == doctest::Approx(4.0));   // back to a
        CHECK(w[1] == doctest::Approx(0.25));  // on to c
    }
    SUBCASE("star center")
    {
        const auto star = star_graph(5);
        const auto w = transition_weights(2, 0, star, 2.0, 0.5);
        const auto nb = star.neighbors(0);
        for (std::size_t k = 0; k < nb.size(); ++k) CHECK(w[k] == doctest::Approx(nb[k] == 2 ? 0.5 : 2.0));
    }
    SUBCASE("triangle neighbor of prev gets weight 1")
    {
        const auto w = transition_weights(0, 1, complete_graph(3), 0.5, 3.0);
        CHECK(w[0] == doctest::Approx(2.0));
        CHECK(w[1] == doctest::Approx(1.0));
    }
}

TEST_CASE("alias table matches its target within 3 sigma")
{
    const std::vector<double> w{1.0, 4.0, 0.5, 2.5, 2.0};
    const double total = 10.0;
    AliasTable table(w);
    std::mt19937_64 rng(42);
    const int draws = 100000;
    std::vector<int> counts(w.size(), 0);
    for (int i = 0; i < draws; ++i) ++counts[table.sample(rng)];
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double p = w[k] / total;
        CHECK(table.probability(static_cast<int>(k)) == doctest::Approx(p).epsilon(1e-12));
        const double sigma = std::sqrt(draws * p * (1 - p));
        CHECK(std::abs(counts[k] - draws * p) < 3 * sigma);
    }
}

TEST_CASE("alias table is scale invariant")
{
    const std::vector<double> a{1, 2, 3}, b{10, 20, 30};
    AliasTable ta(a), tb(b);
    for (int k = 0; k < 3; ++k) CHECK(ta.probability(k) == doctest::Approx(tb.probability(k)));
    CHECK_THROWS(AliasTable(std::vector<double>{0.0, 0.0}));
}

TEST_CASE("walks")
{
    WalkConfig cfg;
    cfg.walk_length = 5;
    cfg.walks_per_node = 4;
    cfg.context_size = 2;

    SUBCASE("isolated node gives length-1 walks")
    {
        const auto walks = generate_walks(Graph(1, {}), cfg, 1);
        REQUIRE(walks.size() == 4);
        for (const auto& w : walks) CHECK(w.size() == 1);
    }
    SUBCASE("every step is an edge")
    {
        cfg.p = 0.5;
        cfg.q = 2.0;
        std::mt19937_64 rng(2);
        for (const auto& g : {complete_graph(3), random_graph(20, 0.2, rng)}) {
            const auto walks = generate_walks(g, cfg, 7);
            CHECK(walks.size() == static_cast<std::size_t>(g.node_count() * cfg.walks_per_node));
            for (const auto& w : walks) {
                CHECK(w.size() <= static_cast<std::size_t>(cfg.walk_length));
                for (std::size_t i = 1; i < w.size(); ++i) CHECK(g.has_edge(w[i - 1], w[i]));
            }
        }
    }
    SUBCASE("deterministic per seed")
    {
        const auto g = barbell_graph(4);
        CHECK(generate_walks(g, cfg, 3) == generate_walks(g, cfg, 3));
        CHECK(generate_walks(g, cfg, 3) != generate_walks(g, cfg, 4));
    }
}

TEST_CASE("context pairs")
{
    using P = std::pair<int, int>;
    std::vector<Walk> walks{{0, 1, 3}};
    auto pairs = context_pairs(walks, 1);
    std::sort(pairs.begin(), pairs.end());
    CHECK(pairs == std::vector<P>{{0, 1}, {1, 0}, {1, 3}, {3, 1}});
    pairs = context_pairs(walks, 10);
    std::sort(pairs.begin(), pairs.end());
    CHECK(pairs == std::vector<P>{{0, 1}, {0, 3}, {1, 0}, {1, 3}, {3, 0}, {3, 1}});
    CHECK(context_pairs({}, 3).empty());
}

TEST_CASE("config validation")
{
    WalkConfig w;
    w.p = 0;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    w = {};
    w.context_size = w.walk_length;
    CHECK_THROWS_AS(w.validate(), ConfigError);
    EmbeddingConfig e;
    e.dimensions = 1;
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("skip-gram")
{
    EmbeddingConfig cfg;
    cfg.dimensions = 4;

    SUBCASE("epochs = 0 returns the seeded initialization")
    {
        cfg.epochs = 0;
        const std::vector<std::pair<int, int>> pairs{{0, 1}};
        const auto a = skipgram_train(pairs, 6, cfg);
        const auto b = skipgram_train(pairs, 6, cfg);
        CHECK(a.matrix == b.matrix);
        CHECK(a.matrix.cwiseAbs().maxCoeff() <= 0.5 / cfg.dimensions);
    }
    SUBCASE("dimensions above node count are rejected")
    {
        cfg.dimensions = 8;
        CHECK_THROWS_AS(skipgram_train(std::vector<std::pair<int, int>>{{0, 1}}, 4, cfg), ConfigError);
    }
    SUBCASE("a single repeated pair saturates")
    {
        // Every noise draw equals the context and is skipped.
        cfg.dimensions = 2;
        cfg.epochs = 50;
        cfg.learning_rate = 0.1;
        std::vector<std::pair<int, int>> pairs(200, {0, 1});
        const auto e = skipgram_train(pairs, 2, cfg);
        CHECK(e.epoch_loss.back() < -std::log(0.95));
        CHECK(e.epoch_loss.back() < e.epoch_loss.front());
    }
    SUBCASE("deterministic per seed")
    {
        const auto g = barbell_graph(5);
        WalkConfig w;
        w.walk_length = 20;
        const auto a = embed_graph(g, 0, w, cfg);
        const auto b = embed_graph(g, 0, w, cfg);
        CHECK(a.matrix == b.matrix);
        CHECK(a.matrix.allFinite());
    }
}

TEST_CASE("barbell embeddings separate the two cliques")
{
    const int k = 6;
    const auto g = barbell_graph(k);
    WalkConfig w;
    w.walk_length = 40;
    w.context_size = 3;
    EmbeddingConfig cfg;
    cfg.dimensions = 8;
    cfg.epochs = 3;
    const auto e = embed_graph(g, 0, w, cfg);
    REQUIRE(e.epoch_loss.size() == 3);
    CHECK(e.epoch_loss[1] <= e.epoch_loss[0]);
    CHECK(e.epoch_loss[2] <= e.epoch_loss[1]);

    double intra = 0, inter = 0;
    int ni = 0, nx = 0;
    for (int a = 0; a < 2 * k; ++a)
        for (int b = a + 1; b < 2 * k; ++b) {
            const double d = (e.matrix.row(a) - e.matrix.row(b)).norm();
            if ((a < k) == (b < k)) {
                intra += d;
                ++ni;
            } else {
                inter += d;
                ++nx;
            }
        }
    CHECK(intra / ni < inter / nx);

    // 2-means from the two farthest points recovers the cliques.
    int s0 = 0, s1 = 0;
    double far = -1;
    for (int a = 0; a < 2 * k; ++a)
        for (int b = a + 1; b < 2 * k; ++b) {
            const double d = (e.matrix.row(a) - e.matrix.row(b)).squaredNorm();
            if (d > far) {
                far = d;
                s0 = a;
                s1 = b;
            }
        }
    Eigen::RowVectorXd c0 = e.matrix.row(s0), c1 = e.matrix.row(s1);
    std::vector<int> assign(2 * k);
    for (int it = 0; it < 20; ++it) {
        Eigen::RowVectorXd m0 = Eigen::RowVectorXd::Zero(cfg.dimensions), m1 = m0;
        int n0 = 0, n1 = 0;
        for (int v = 0; v < 2 * k; ++v) {
            assign[v] = (e.matrix.row(v) - c0).squaredNorm() <= (e.matrix.row(v) - c1).squaredNorm() ? 0 : 1;
            (assign[v] ? m1 : m0) += e.matrix.row(v);
            ++(assign[v] ? n1 : n0);
        }
        if (n0) c0 = m0 / n0;
        if (n1) c1 = m1 / n1;
    }
    int agree = 0;
    for (int v = 0; v < 2 * k; ++v) agree += assign[v] == (v < k ? assign[0] : 1 - assign[0]);
    CHECK(agree == 2 * k);
}
