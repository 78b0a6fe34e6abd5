#include "g2d/harness.hpp"
#include "stat_oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace g2d;
using namespace testing;

namespace {

std::vector<int> fold_sizes(const std::vector<int>& assignment, int folds)
{
    std::vector<int> s(folds, 0);
    for (int f : assignment) ++s.at(f);
    return s;
}

bool disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b)
{
    const std::set<std::size_t> sa(a.begin(), a.end());
    return std::none_of(b.begin(), b.end(), [&](std::size_t i) { return sa.count(i) > 0; });
}

}  // namespace

TEST_CASE("stratified k-fold")
{
    SUBCASE("balanced 100 into 10")
    {
        std::vector<int> labels(100);
        for (int i = 0; i < 100; ++i) labels[i] = i % 2;
        const auto a = stratified_kfold(labels, 10, 1);
        for (int f = 0; f < 10; ++f) {
            int c0 = 0, c1 = 0;
            for (int i = 0; i < 100; ++i)
                if (a[i] == f) ++(labels[i] ? c1 : c0);
            CHECK(c0 == 5);
            CHECK(c1 == 5);
        }
    }
    SUBCASE("11929 samples in 11 classes")
    {
        std::mt19937_64 rng(2);
        std::discrete_distribution<int> cls({5, 9, 13, 2, 8, 7, 6, 4, 11, 3, 10});
        std::vector<int> labels(11929);
        for (int& y : labels) y = cls(rng);
        for (int c = 0; c < 11; ++c) labels[c] = c;
        const auto s = fold_sizes(stratified_kfold(labels, 10, 3), 10);
        for (int x : s) {
            CHECK(x >= 1192);
            CHECK(x <= 1193);
        }
    }
    SUBCASE("two folds of four")
    {
        const std::vector<int> labels{0, 0, 1, 1};
        const auto a = stratified_kfold(labels, 2, 9);
        CHECK(a[0] != a[1]);
        CHECK(a[2] != a[3]);
    }
    SUBCASE("classes smaller than the fold count are rejected")
    {
        const std::vector<int> labels{0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1};
        CHECK_THROWS_AS(stratified_kfold(labels, 4, 1), ConfigError);
    }
    SUBCASE("seed changes the split")
    {
        std::vector<int> labels(40);
        for (int i = 0; i < 40; ++i) labels[i] = i % 2;
        CHECK(stratified_kfold(labels, 5, 1) == stratified_kfold(labels, 5, 1));
        CHECK(stratified_kfold(labels, 5, 1) != stratified_kfold(labels, 5, 2));
    }
}

TEST_CASE("grid search")
{
    std::mt19937_64 rng(4);
    GraphDataset ds = generate_synthetic_dataset(
        std::vector<RandomGraphSpec>{{RandomGraphSpec::Kind::uniform_edges, 20, 0.2, 1},
                                     {RandomGraphSpec::Kind::preferential_attachment, 20, 0.0, 2}},
        20, 5);
    const auto labels = ds.labels();
    const auto ks = wl_iteration_kernels(ds, 3);
    std::vector<Eigen::MatrixXd> cumulative;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ks[0].rows(), ks[0].cols());
    for (const auto& k : ks) cumulative.push_back(acc += k);

    SUBCASE("single candidate")
    {
        const std::vector<int> h{2};
        const std::vector<double> c{3.0};
        const std::vector<Eigen::MatrixXd> one{cumulative[2]};
        const auto r = grid_search_kernel(one, h, labels, 2, c, 0.1, 1);
        CHECK(r.C == 3.0);
        CHECK(r.iterations == 2);
        CHECK(r.trainings == 1);
    }
    SUBCASE("ties prefer the smaller h, then the smaller C")
    {
        const std::vector<int> h{3, 5};
        const std::vector<double> c{0.5, 2.0};
        const std::vector<Eigen::MatrixXd> same{cumulative[1], cumulative[1]};
        const auto r = grid_search_kernel(same, h, labels, 2, c, 0.1, 1);
        CHECK(r.iterations == 3);
        const std::vector<double> big_c{1e3, 1e4};
        CHECK(grid_search_kernel(same, h, labels, 2, big_c, 0.1, 1).C == 1e3);
    }
    SUBCASE("ten C values by six h values is sixty trainings")
    {
        const std::vector<int> h{1, 2, 3, 4, 5, 6};
        std::vector<Eigen::MatrixXd> six;
        for (int i = 0; i < 6; ++i) six.push_back(cumulative[i % 4]);
        const auto grid = default_c_grid();
        CHECK(grid_search_kernel(six, h, labels, 2, grid, 0.1, 1).trainings == 60);
    }
}

TEST_CASE("Mann-Whitney U")
{
    SUBCASE("a = [1,2,3], b = [4,5,6]")
    {
        const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
        const auto r = mann_whitney_u(a, b);
        CHECK(r.u == 0.0);
        CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(r.exact);
    }
    SUBCASE("identical samples")
    {
        const std::vector<double> a{0.7, 0.7, 0.7}, b{0.7, 0.7};
        CHECK(mann_whitney_u(a, b).p_value == 1.0);
        std::vector<double> big(30, 0.9);
        CHECK(mann_whitney_u(big, big).p_value == 1.0);
    }
    SUBCASE("single comparison")
    {
        const std::vector<double> a{5}, b{3};
        CHECK(mann_whitney_u(a, b).u == 1.0);
    }
    SUBCASE("exact path matches brute-force permutation enumeration")
    {
        std::mt19937_64 rng(12);
        std::uniform_int_distribution<int> val(0, 4);  // small range forces ties
        for (int na = 1; na <= 6; ++na)
            for (int nb = 1; nb <= 6; ++nb) {
                std::vector<double> a(na), b(nb);
                for (auto& x : a) x = val(rng);
                for (auto& x : b) x = val(rng);
                const auto r = mann_whitney_u(a, b);
                CHECK(r.u == pairwise_u(a, b));
                CHECK(r.p_value == doctest::Approx(permutation_p(a, b)).epsilon(1e-12));
            }
    }
    SUBCASE("normal approximation with ties")
    {
        std::vector<double> a, b;
        for (int i = 0; i < 30; ++i) {
            a.push_back(0.5 + 0.01 * (i % 7));
            b.push_back(0.52 + 0.01 * (i % 5));
        }
        const auto r = mann_whitney_u(a, b);
        CHECK_FALSE(r.exact);
        CHECK(r.u == 300.0);
        // Reference value from an independent statistics package.
        CHECK(r.p_value == doctest::Approx(0.025265333581820017).epsilon(1e-9));
    }
}

TEST_CASE("synthetic generators")
{
    std::mt19937_64 rng(1);
    SUBCASE("p = 1 gives complete graphs")
    {
        const auto g = uniform_random_graph(9, 1.0, rng);
        CHECK(g.edge_count() == 36);
    }
    SUBCASE("m = 1 gives trees")
    {
        for (int t = 0; t < 10; ++t) {
            const auto g = preferential_attachment_graph(30, 1, rng);
            CHECK(g.edge_count() == 29);
            CHECK(g.node_count() == 30);
        }
    }
    SUBCASE("attachment edge count")
    {
        const auto g = preferential_attachment_graph(60, 3, rng);
        CHECK(g.edge_count() == 3 * 57);
    }
    SUBCASE("fixture shape")
    {
        const auto ds = synthetic_fixture();
        CHECK(ds.size() == 200);
        CHECK(ds.class_count == 2);
        const auto labels = ds.labels();
        CHECK(std::count(labels.begin(), labels.end(), 1) == 100);
        for (const auto& g : ds.graphs) CHECK(g.node_count() == 60);
    }
    SUBCASE("description parsing")
    {
        const auto ds = parse_synthetic_dataset("synthetic:er:12:0.3:4+ba:12:2:6@3");
        CHECK(ds.size() == 10);
        CHECK(ds.class_count == 2);
        const auto again = parse_synthetic_dataset("synthetic:er:12:0.3:4+ba:12:2:6@3");
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(ds.graphs[i].edges() == again.graphs[i].edges());
        CHECK_THROWS_AS(parse_synthetic_dataset("synthetic:xx:12:0.3:4"), ConfigError);
        CHECK_THROWS_AS(parse_synthetic_dataset("synthetic:ba:12:20:4"), ConfigError);
    }
}

TEST_CASE("mean and population std")
{
    const std::vector<double> v{1, 2, 3, 4};
    const auto [m, s] = mean_and_std(v);
    CHECK(m == 2.5);
    CHECK(s == doctest::Approx(std::sqrt(1.25)));
}

TEST_CASE("method configuration")
{
    CHECK(method_from_string("wl") == Method::wl);
    CHECK(to_string(Method::graphlet) == "graphlet");
    CHECK_THROWS_AS(method_from_string("rf"), ConfigError);

    const auto p = preset("imdb-b");
    CHECK(p.resolution == 14.0);
    CHECK(p.channels == 5);
    CHECK(preset("proteins_full").attribute_channels);
    CHECK_THROWS_AS(preset("nope"), ConfigError);

    MethodConfig m;
    m.method = Method::cnn;
    m.cnn = preset("collab");
    const auto back = MethodConfig::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
    const auto from_preset = MethodConfig::from_json({{"method", "cnn"}, {"preset", "reddit-b"}});
    CHECK(from_preset.cnn.walk.p == preset("reddit-b").walk.p);
}

TEST_CASE("experiments")
{
    const auto ds = parse_synthetic_dataset("synthetic:er:16:0.2:20+ba:16:2:20@5");
    CvConfig cv;

    SUBCASE("majority baseline on a balanced fixture")
    {
        MethodConfig m;
        m.method = Method::majority;
        const auto r = run_experiment(ds, m, cv);
        CHECK(r.folds.size() == 30);
        CHECK(r.mean == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("WL gives 30 entries and clean traces")
    {
        MethodConfig m;
        m.method = Method::wl;
        m.kernel.wl_iterations = {1, 2};
        m.kernel.c_grid = {0.1, 10};
        const auto r = run_experiment(ds, m, cv);
        REQUIRE(r.folds.size() == 30);
        CHECK(r.mean > 0.8);
        REQUIRE(r.traces.size() == 30);
        for (const auto& t : r.traces) {
            CHECK(disjoint(t.test, t.grid_search));
            CHECK(disjoint(t.test, t.model_fit));
        }
        const auto csv = results_csv(r);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
        const auto j = summary_json(r, nullptr, "");
        CHECK(j.at("mean").get<double>() == doctest::Approx(r.mean));
    }
    SUBCASE("CNN traces keep the test fold out of every fit")
    {
        MethodConfig m;
        m.method = Method::cnn;
        m.cnn.channels = 2;
        m.cnn.embedding.dimensions = 6;
        m.cnn.walk.walk_length = 10;
        m.cnn.walk.walks_per_node = 2;
        m.cnn.walk.context_size = 2;
        m.cnn.resolution = 40;
        m.cnn.hidden = 8;
        m.cnn.train.max_epochs = 2;
        cv.folds = 4;
        cv.repeats = 1;
        const auto r = run_experiment(ds, m, cv);
        REQUIRE(r.traces.size() == 4);
        for (const auto& t : r.traces) {
            CHECK_FALSE(t.pca_fit.empty());
            CHECK(disjoint(t.test, t.pca_fit));
            CHECK(disjoint(t.test, t.extent_fit));
            CHECK(disjoint(t.test, t.early_stopping));
            CHECK(disjoint(t.test, t.model_fit));
            CHECK(disjoint(t.early_stopping, t.model_fit));
        }
    }
}
