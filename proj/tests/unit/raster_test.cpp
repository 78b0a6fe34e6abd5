#include "g2d/raster.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace g2d;
using namespace testing;

namespace {

CompressedNodeVectors vectors_of(Eigen::MatrixXd m)
{
    CompressedNodeVectors v;
    v.embedding = std::move(m);
    return v;
}

}  // namespace

TEST_CASE("image size formula")
{
    CHECK(image_size_for_range(-1.33, 2.78, 9) == 37);
    CHECK(image_size_for_range(-1.0, 1.0, 14) == 28);
    CHECK(image_size_for_range(0.0, 1.0, 9) == 9);
    CHECK(image_size_for_range(0.0, 1.01, 9) == 10);

    Eigen::MatrixXd m(2, 2);
    m << -1.33, 0.0, 2.78, 1.0;
    const auto spec = compute_spec({vectors_of(m)}, 9);
    CHECK(spec.size == 37);
    CHECK(spec.width() == spec.height());
    CHECK(spec.channels() == 1);
}

TEST_CASE("zero range pads to one bin")
{
    const auto spec = compute_spec({vectors_of(Eigen::MatrixXd::Constant(3, 2, 0.4))}, 9);
    CHECK(spec.size == 1);
    const auto img = rasterize_graph(vectors_of(Eigen::MatrixXd::Constant(3, 2, 0.4)), spec);
    CHECK(img.counts == std::vector<std::int32_t>{3});
}

TEST_CASE("single node at the midpoint")
{
    const auto spec = compute_spec_from_range(-1.0, 1.0, 2.5, {1, 0});
    REQUIRE(spec.size == 5);
    const auto img = rasterize_graph(vectors_of(Eigen::MatrixXd::Zero(1, 2)), spec);
    CHECK(img.at(0, 2, 2) == 1);
    CHECK(img.channel_sum(0) == 1);
}

TEST_CASE("bin edges")
{
    const auto spec = compute_spec_from_range(0.0, 1.0, 4, {1, 0});
    CHECK(spec.bin(0.0) == 0);
    CHECK(spec.bin(0.25) == 1);
    CHECK(spec.bin(0.999) == 3);
    CHECK(spec.bin(1.0) == 3);
    CHECK(spec.bin(-1e-12) == -1);
    CHECK(spec.bin(1.0 + 1e-12) == -1);
}

TEST_CASE("conservation and channel mapping")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 3);
    std::vector<CompressedNodeVectors> all;
    for (int g = 0; g < 20; ++g) {
        Eigen::MatrixXd m(5 + g * 30, 6);
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
        all.push_back(vectors_of(m));
    }
    const auto spec = compute_spec(all, 9);
    for (const auto& v : all) {
        const auto img = rasterize_graph(v, spec);
        CHECK(img.channels == 3);
        CHECK(img.height == spec.size);
        for (int c = 0; c < 3; ++c) CHECK(img.channel_sum(c) == v.embedding.rows());
    }
    // Channel 1 reads dims (2, 3): column from dim 2, row from dim 3.
    Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 6, spec.lo);
    one(0, 2) = spec.hi;
    const auto img = rasterize_graph(vectors_of(one), spec);
    CHECK(img.at(1, 0, spec.size - 1) == 1);
    CHECK(img.at(0, 0, 0) == 1);
}

TEST_CASE("translating by one bin width shifts by one pixel")
{
    const auto spec = compute_spec_from_range(0.0, 2.0, 5, {1, 0});
    Eigen::MatrixXd m(3, 2);
    m << 0.35, 0.55, 0.95, 1.15, 1.25, 0.75;
    const auto a = rasterize_graph(vectors_of(m), spec);
    const auto b = rasterize_graph(vectors_of(m.array() + spec.bin_width()), spec);
    for (int r = 0; r + 1 < spec.size; ++r)
        for (int c = 0; c + 1 < spec.size; ++c) CHECK(b.at(0, r + 1, c + 1) == a.at(0, r, c));
}

TEST_CASE("out-of-extent nodes and mismatched widths")
{
    const auto spec = compute_spec_from_range(0.0, 1.0, 3, {1, 0});
    Eigen::MatrixXd m(2, 2);
    m << 0.5, 0.5, 2.0, 0.5;
    CHECK(rasterize_graph(vectors_of(m), spec).channel_sum(0) == 1);
    CHECK_THROWS_AS(rasterize_graph(vectors_of(Eigen::MatrixXd::Zero(2, 3)), spec), ConfigError);
    CHECK_THROWS_AS(rasterize_graph(vectors_of(Eigen::MatrixXd::Zero(2, 4)), spec), ConfigError);
}

TEST_CASE("identical coordinates give identical images; rows normalize")
{
    Eigen::MatrixXd m(4, 4);
    m << 0, 0, 1, 1, 0.5, 0.5, 0.2, 0.9, 1, 1, 0, 0, 0.1, 0.9, 0.3, 0.3;
    const auto spec = compute_spec({vectors_of(m)}, 3);
    const std::vector<GraphImage> imgs{rasterize_graph(vectors_of(m), spec), rasterize_graph(vectors_of(m), spec)};
    CHECK(imgs[0].counts == imgs[1].counts);
    const auto raw = images_to_rows<double>(imgs);
    CHECK(raw.row(0).sum() == doctest::Approx(8.0));
    const auto norm = images_to_rows<double>(imgs, true);
    CHECK(norm.row(0).sum() == doctest::Approx(2.0));
}
