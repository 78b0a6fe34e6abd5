#pragma once

#include "g2d/pca.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace g2d {

/// Shared geometry of all images in a dataset. Images are square: one scalar
/// extent [lo, hi] covers every axis, split into `size` equal bins.
struct ImageSpec {
    double resolution = 9.0;  ///< bins per coordinate unit
    double lo = 0.0;
    double hi = 1.0;
    int size = 1;  ///< width == height
    ChannelLayout layout;

    int channels() const { return layout.total(); }
    int width() const { return size; }
    int height() const { return size; }
    double bin_width() const { return (hi - lo) / size; }
    /// Bin index along one axis, or -1 outside [lo, hi]. The last bin is closed.
    int bin(double coordinate) const;
};

nlohmann::json to_json(const ImageSpec& spec);
ImageSpec image_spec_from_json(const nlohmann::json& j);

/// Number of bins for a coordinate range at a given resolution: ceil(range * resolution), at least 1.
int image_size_for_range(double lo, double hi, double resolution);

/// Raw per-bin node counts, channel-major: counts[(c * height + row) * width + col].
/// Row indexes the odd dimension of a pair, column the even one.
struct GraphImage {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> counts;
    int graph_id = 0;
    int label = 0;

    std::int32_t at(int c, int row, int col) const { return counts[(static_cast<std::size_t>(c) * height + row) * width + col]; }
    std::int64_t channel_sum(int c) const;
};

/// One global extent over every coordinate of every listed graph (all if empty).
ImageSpec compute_spec(const std::vector<CompressedNodeVectors>& vectors, double resolution,
                       std::span<const std::size_t> extent_indices = {});

ImageSpec compute_spec_from_range(double lo, double hi, double resolution, ChannelLayout layout);

/// Channel k counts the (2k, 2k+1) coordinate pairs of the combined vectors.
/// Nodes outside the extent are not counted.
GraphImage rasterize_graph(const CompressedNodeVectors& vectors, const ImageSpec& spec, int graph_id = 0, int label = 0);

std::vector<GraphImage> rasterize_dataset(const std::vector<CompressedNodeVectors>& vectors, const GraphDataset& dataset,
                                          const ImageSpec& spec);

/// Flattens images into network inputs (one row per image). With
/// `normalize`, each channel is divided by its total count.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> images_to_rows(std::span<const GraphImage> images,
                                                                                     bool normalize = false)
{
    if (images.empty()) return {};
    const auto& first = images.front();
    const Eigen::Index plane = static_cast<Eigen::Index>(first.height) * first.width;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(images.size(), plane * first.channels);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        if (img.channels != first.channels || img.height != first.height || img.width != first.width)
            throw ConfigError("images of different shapes cannot be batched");
        for (int c = 0; c < img.channels; ++c) {
            const double sum = normalize ? static_cast<double>(img.channel_sum(c)) : 1.0;
            const double scale = sum > 0 ? 1.0 / sum : 0.0;
            for (Eigen::Index k = 0; k < plane; ++k)
                out(i, c * plane + k) = static_cast<Scalar>(img.counts[c * plane + k] * scale);
        }
    }
    return out;
}

/// Writes channel `c` as an 8-bit grayscale PNG, scaled so the largest count is white.
void write_channel_png(const GraphImage& image, int channel, const std::filesystem::path& path);

}  // namespace g2d
