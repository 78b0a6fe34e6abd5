#include "g2d/cnn.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace g2d;
using namespace g2d::nn;
using namespace testing;

namespace {

CnnArchitecture tiny(Shape3 input, int classes, double dropout = 0.0)
{
    CnnArchitecture a;
    a.input = input;
    a.classes = classes;
    a.filters_first = 4;
    a.filters_second = 4;
    a.hidden = 8;
    a.dropout = dropout;
    return a;
}

/// Blank images (class 0) against full-count images (class 1).
Dataset<float> blank_vs_full(int per_class, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> counts(3.0);
    Dataset<float> d;
    d.inputs = RowMatrix<float>::Zero(2 * per_class, 64);
    for (int i = 0; i < 2 * per_class; ++i) {
        const int y = i % 2;
        d.labels.push_back(y);
        if (y == 1)
            for (int k = 0; k < 64; ++k) d.inputs(i, k) = static_cast<float>(1 + counts(rng));
    }
    return d;
}

}  // namespace

TEST_CASE("xavier initialization")
{
    const int square[2] = {3, 3};
    const auto t = xavier_init<double>(square, 5);
    for (double x : t.data) CHECK(std::abs(x) <= 1.0);
    CHECK(xavier_init<double>(square, 5).data == t.data);

    const int big[2] = {500, 200};
    const auto u = xavier_init<double>(big, 9);
    const double limit = std::sqrt(6.0 / 700.0);
    double mean = 0;
    for (double x : u.data) {
        CHECK(std::abs(x) <= limit);
        mean += x;
    }
    mean /= u.data.size();
    const double sigma = limit / std::sqrt(3.0);
    CHECK(std::abs(mean) < 3 * sigma / std::sqrt(double(u.data.size())));

    const int bad[3] = {1, 2, 3};
    CHECK_THROWS_AS(xavier_init<double>(bad, 1), ConfigError);
}

TEST_CASE("convolution examples")
{
    SUBCASE("1x1 identity")
    {
        Conv2d<double> conv(1, 1, 1, Padding::valid());
        conv.weight.value.setOnes();
        std::mt19937_64 rng(1);
        const DMat x = random_matrix(2, 25, rng);
        DMat y;
        conv.forward(x, {1, 5, 5}, y);
        CHECK(y == x);
    }
    SUBCASE("all-ones 3x3 on a constant image")
    {
        Conv2d<double> conv(1, 1, 3, Padding::same(3));
        conv.weight.value.setOnes();
        DMat x = DMat::Ones(1, 25), y;
        conv.forward(x, {1, 5, 5}, y);
        for (int r = 1; r < 4; ++r)
            for (int c = 1; c < 4; ++c) CHECK(y(0, r * 5 + c) == 9.0);
        CHECK(y(0, 0) == 4.0);
    }
    SUBCASE("same padding keeps the size for even kernels")
    {
        Conv2d<double> conv(2, 3, 4, Padding::same(4));
        CHECK(conv.output_shape({2, 7, 9}) == Shape3{3, 7, 9});
        CHECK_THROWS_AS(conv.output_shape({1, 7, 9}), ConfigError);
    }
}

TEST_CASE("max pooling examples")
{
    DMat x(1, 4);
    x << 1, 2, 3, 4;
    DMat y;
    std::vector<std::int32_t> arg;
    maxpool_2x2_forward(x, {1, 2, 2}, y, arg);
    CHECK(y(0, 0) == 4.0);
    DMat g;
    maxpool_2x2_backward<double>(DMat::Ones(1, 1), arg, {1, 2, 2}, g);
    CHECK(g == (DMat(1, 4) << 0, 0, 0, 1).finished());

    const DMat c = DMat::Constant(1, 36, 2.5);
    maxpool_2x2_forward(c, {1, 6, 6}, y, arg);
    CHECK(y.cols() == 9);
    CHECK((y.array() == 2.5).all());
}

TEST_CASE("gradients match central differences")
{
    const auto r = run_gradient_suite(3);
    CHECK(r.conv < 1e-4);
    CHECK(r.pool < 1e-4);
    CHECK(r.dense < 1e-4);
    CHECK(r.dropout < 1e-4);
    CHECK(r.softmax < 1e-4);
    CHECK(r.network < 1e-3);
}

TEST_CASE("inverted dropout preserves the expectation")
{
    std::mt19937_64 rng(2);
    RowMatrix<double> x = RowMatrix<double>::Ones(200, 500), mask;
    dropout_forward(x, 0.3, rng, mask);
    const double n = x.size();
    const double sigma = std::sqrt(0.3 / 0.7);  // per-entry std of the scaled mask
    CHECK(std::abs(x.mean() - 1.0) < 3 * sigma / std::sqrt(n));
    CHECK(((x.array() == 0.0) || ((x.array() - 1.0 / 0.7).abs() < 1e-12)).all());
}

TEST_CASE("softmax and output shape")
{
    std::mt19937_64 rng(4);
    const auto p = softmax_rows<double>(random_matrix(5, 4, rng, 30.0));
    for (int i = 0; i < 5; ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-6));

    auto arch = CnnArchitecture::reference({5, 28, 28}, 3);
    arch.filters_first = 4;
    arch.filters_second = 4;
    CnnModel<float> model(arch, 1);
    const RowMatrix<float> x = RowMatrix<float>::Random(2, arch.input.size()).cwiseAbs();
    const auto out = model.forward(x, false);
    CHECK(out.cols() == 3);

    auto no_drop = tiny({1, 8, 8}, 2, 0.0);
    CnnModel<double> m(no_drop, 2);
    const DMat y = random_matrix(3, 64, rng);
    CHECK(m.forward(y, true) == m.forward(y, false));
}

TEST_CASE("reference architecture")
{
    const auto a = CnnArchitecture::reference({5, 62, 62}, 2);
    CHECK(a.region_sizes == std::vector<int>{3, 4, 5, 6});
    CHECK(a.filters_first == 64);
    CHECK(a.filters_second == 96);
    CHECK(a.hidden == 128);
    CHECK(a.dropout == doctest::Approx(0.3));
    CHECK(a.merged_width() == 4 * 96 * 15 * 15);
    auto tiny_input = a;
    tiny_input.input = {5, 3, 3};
    CHECK_THROWS_AS(tiny_input.validate(), ConfigError);
    CHECK(CnnArchitecture::from_json(a.to_json()).merged_width() == a.merged_width());
}

TEST_CASE("argmax and accuracy")
{
    Eigen::MatrixXd p(2, 3);
    p << 0.1, 0.7, 0.2, 0.4, 0.4, 0.2;
    CHECK(argmax_rows(p) == std::vector<int>{1, 0});
    const std::vector<int> a{1, 0, 1}, b{1, 1, 1};
    CHECK(accuracy(a, b) == doctest::Approx(2.0 / 3));
}

TEST_CASE("early stopping contract")
{
    EarlyStopping es(2);
    CHECK_FALSE(es.update(1.0));
    CHECK(es.improved());
    CHECK_FALSE(es.update(1.0));  // equal is not an improvement
    CHECK_FALSE(es.improved());
    CHECK(es.update(1.5));
    EarlyStopping again(2);
    again.update(1.0);
    again.update(1.1);
    CHECK_FALSE(again.update(0.9));
    CHECK(again.best() == 0.9);
}

TEST_CASE("training")
{
    const auto train_set = blank_vs_full(30, 1);
    const auto test_set = blank_vs_full(10, 2);
    TrainConfig cfg;
    cfg.max_epochs = 20;
    cfg.patience = 20;
    cfg.dropout = 0.0;

    SUBCASE("separable classes are learned")
    {
        CnnModel<float> model(tiny({1, 8, 8}, 2), 3);
        const auto h = train(model, train_set, test_set, cfg);
        CHECK(h.epochs.size() <= 20);
        CHECK(h.epochs.back().train_accuracy == 1.0);
        CHECK(predict(model, test_set.inputs).labels == test_set.labels);
        CHECK(predict(model, test_set.inputs).probabilities == predict(model, test_set.inputs).probabilities);
    }
    SUBCASE("patience 1 stops at epoch 2 when validation never improves")
    {
        cfg.patience = 1;
        cfg.adam.learning_rate = 0.0;
        CnnModel<float> model(tiny({1, 8, 8}, 2), 3);
        std::vector<RowMatrix<float>> before;
        for (auto* p : model.parameters()) before.push_back(p->value);
        const auto h = train(model, train_set, test_set, cfg);
        CHECK(h.epochs.size() == 2);
        CHECK(h.early_stopped);
        CHECK(h.best_epoch == 1);
        const auto after = model.parameters();
        for (std::size_t k = 0; k < before.size(); ++k) CHECK(after[k]->value == before[k]);
    }
    SUBCASE("stratified holdout")
    {
        const auto [tr, va] = stratified_holdout(train_set.labels, 0.1, 4);
        CHECK(tr.size() + va.size() == train_set.size());
        int ones = 0;
        for (auto i : va) ones += train_set.labels[i];
        CHECK(va.size() == 6);
        CHECK(ones == 3);
    }
    SUBCASE("bad labels and bad config")
    {
        CnnModel<float> model(tiny({1, 8, 8}, 2), 3);
        const std::vector<int> bad{0, 2};
        CHECK_THROWS_AS(model.loss(train_set.inputs.topRows(2), bad), ConfigError);
        cfg.batch_size = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("checkpoint round trip")
{
    CnnModel<float> model(tiny({2, 8, 8}, 3, 0.3), 11);
    const RowMatrix<float> x = RowMatrix<float>::Random(4, 128);
    const auto dir = temp_dir("ckpt");
    model.save(dir / "model.g2dt", {{"note", "x"}});
    auto back = CnnModel<float>::load(dir / "model.g2dt");
    CHECK(back.forward(x, false) == model.forward(x, false));
    CHECK(back.architecture().to_json() == model.architecture().to_json());
}
