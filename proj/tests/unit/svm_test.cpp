#include "g2d/svm.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace g2d;
using namespace testing;

namespace {

struct Points {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

/// Two Gaussian blobs at (+-2, +-2) with a gap around the separating line.
Points separable(int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Points p;
    p.x.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const int label = i % 2 ? 1 : -1;
        p.y.push_back(label);
        do {
            p.x(i, 0) = 2.0 * label + g(rng);
            p.x(i, 1) = 2.0 * label + g(rng);
        } while (label * (p.x(i, 0) + p.x(i, 1)) < 1.0);
    }
    return p;
}

Eigen::MatrixXd linear_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return a * b.transpose(); }

}  // namespace

TEST_CASE("two-point analytic solution")
{
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
    const std::vector<int> y{1, -1};
    CsvmConfig cfg;
    cfg.C = 10;
    const auto m = smo_train(k, y, cfg);
    CHECK(std::abs(m.alpha[0] - 1.0) < 1e-12);
    CHECK(std::abs(m.alpha[1] - 1.0) < 1e-12);
    CHECK(std::abs(m.bias) < 1e-12);
    CHECK(m.support == std::vector<int>{0, 1});
    CHECK(m.converged);
}

TEST_CASE("contradictory duplicate sits at the box bound")
{
    const Eigen::MatrixXd k = Eigen::MatrixXd::Ones(2, 2);
    const std::vector<int> y{1, -1};
    CsvmConfig cfg;
    cfg.C = 0.5;
    const auto m = smo_train(k, y, cfg);
    CHECK(m.alpha[0] == doctest::Approx(0.5));
    CHECK(m.alpha[1] == doctest::Approx(0.5));
}

TEST_CASE("separable fixture")
{
    const auto p = separable(20, 3);
    const Eigen::MatrixXd k = linear_kernel(p.x, p.x);
    CsvmConfig cfg;
    cfg.C = 100;
    const auto m = smo_train(k, p.y, cfg);
    CHECK(svm_predict(m, k) == p.y);
    CHECK(kkt_residuals(k, m).maxCoeff() < 1e-3);
    CHECK((m.alpha.array() >= 0).all());
    CHECK((m.alpha.array() <= cfg.C).all());
    CHECK(std::abs(m.alpha.dot(m.y)) < 1e-9);
    for (std::size_t t = 1; t < m.dual_objective.size(); ++t)
        CHECK(m.dual_objective[t] >= m.dual_objective[t - 1] - 1e-12);
    CHECK(m.dual_objective.back() == doctest::Approx(dual_objective(k, m)));

    const auto test = separable(40, 4);
    CHECK(svm_predict(m, linear_kernel(test.x, p.x)) == test.y);
}

TEST_CASE("zero decision maps to +1")
{
    SvmModel m;
    m.alpha = Eigen::VectorXd::Zero(2);
    m.y = Eigen::VectorXd::Ones(2);
    CHECK(svm_predict(m, Eigen::MatrixXd::Zero(3, 2)) == std::vector<int>{1, 1, 1});
}

TEST_CASE("invalid inputs")
{
    CsvmConfig cfg;
    const Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(smo_train(k, std::vector<int>{1, 1}, cfg), ConfigError);
    CHECK_THROWS_AS(smo_train(k, std::vector<int>{1, 0}, cfg), ConfigError);
    cfg.C = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("default C grid")
{
    const auto g = default_c_grid();
    REQUIRE(g.size() == 10);
    CHECK(g.front() == doctest::Approx(1e-4));
    CHECK(g.back() == doctest::Approx(1e4));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(1e8, 1.0 / 9)));
}

TEST_CASE("one-vs-one multiclass")
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.3);
    const double centers[3][3] = {{4, 0, 0}, {0, 4, 0}, {0, 0, 4}};
    Eigen::MatrixXd x(30, 3);
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        y.push_back(i % 3);
        for (int d = 0; d < 3; ++d) x(i, d) = centers[i % 3][d] + noise(rng);
    }
    const Eigen::MatrixXd k = linear_kernel(x, x);
    CsvmConfig cfg;
    cfg.C = 10;
    const auto model = train_multiclass(k, y, 3, cfg);
    CHECK(model.pairs.size() == 3);
    CHECK(predict_multiclass(model, k) == y);

    Eigen::MatrixXd q(1, 3);
    q << 0, 0, 10;  // deep in class 2: both pairs involving 2 vote for it
    CHECK(predict_multiclass(model, linear_kernel(q, x)) == std::vector<int>{2});
}
