#include "g2d/raster.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace g2d {

int ImageSpec::bin(double x) const
{
    if (!(x >= lo) || !(x <= hi)) return -1;
    if (x == hi) return size - 1;
    const int b = static_cast<int>((x - lo) / (hi - lo) * size);
    return std::min(b, size - 1);
}

nlohmann::json to_json(const ImageSpec& s)
{
    return {{"resolution", s.resolution},
            {"lo", s.lo},
            {"hi", s.hi},
            {"size", s.size},
            {"embedding_channels", s.layout.embedding_channels},
            {"attribute_channels", s.layout.attribute_channels}};
}

ImageSpec image_spec_from_json(const nlohmann::json& j)
{
    ImageSpec s;
    s.resolution = j.at("resolution").get<double>();
    s.lo = j.at("lo").get<double>();
    s.hi = j.at("hi").get<double>();
    s.size = j.at("size").get<int>();
    s.layout.embedding_channels = j.at("embedding_channels").get<int>();
    s.layout.attribute_channels = j.value("attribute_channels", 0);
    return s;
}

int image_size_for_range(double lo, double hi, double resolution)
{
    if (!(resolution > 0.0)) throw ConfigError("resolution must be positive");
    const double bins = std::abs(hi - lo) * resolution;
    // Absorb rounding noise such as 28.000000000000004.
    const int n = static_cast<int>(std::ceil(bins - 1e-9 * std::max(1.0, bins)));
    return std::max(n, 1);
}

ImageSpec compute_spec_from_range(double lo, double hi, double resolution, ChannelLayout layout)
{
    if (layout.total() < 1) throw ConfigError("image needs at least one channel");
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw ConfigError("invalid coordinate range");
    ImageSpec spec;
    spec.resolution = resolution;
    spec.layout = layout;
    spec.lo = lo;
    spec.hi = hi;
    if (hi == lo) spec.hi = lo + 1.0 / resolution;  // zero-range guard: one bin
    spec.size = image_size_for_range(spec.lo, spec.hi, resolution);
    return spec;
}

ImageSpec compute_spec(const std::vector<CompressedNodeVectors>& vectors, double resolution,
                       std::span<const std::size_t> extent_indices)
{
    if (vectors.empty()) throw ConfigError("compute_spec on an empty collection");
    std::vector<std::size_t> idx(extent_indices.begin(), extent_indices.end());
    if (idx.empty())
        for (std::size_t i = 0; i < vectors.size(); ++i) idx.push_back(i);
    const ChannelLayout layout = vectors[idx.front()].layout();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto i : idx) {
        const auto& v = vectors.at(i);
        const auto l = v.layout();
        if (l.embedding_channels != layout.embedding_channels || l.attribute_channels != layout.attribute_channels)
            throw ConfigError("all graphs must share one channel layout");
        if (v.embedding.size() > 0) {
            lo = std::min(lo, v.embedding.minCoeff());
            hi = std::max(hi, v.embedding.maxCoeff());
        }
        if (v.attributes && v.attributes->size() > 0) {
            lo = std::min(lo, v.attributes->minCoeff());
            hi = std::max(hi, v.attributes->maxCoeff());
        }
    }
    return compute_spec_from_range(lo, hi, resolution, layout);
}

std::int64_t GraphImage::channel_sum(int c) const
{
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::int64_t s = 0;
    for (std::size_t k = 0; k < plane; ++k) s += counts[c * plane + k];
    return s;
}

GraphImage rasterize_graph(const CompressedNodeVectors& vectors, const ImageSpec& spec, int graph_id, int label)
{
    if (vectors.embedding.cols() % 2 != 0 || (vectors.attributes && vectors.attributes->cols() % 2 != 0))
        throw ConfigError("compressed vector width must be even");
    const auto l = vectors.layout();
    if (l.embedding_channels != spec.layout.embedding_channels || l.attribute_channels != spec.layout.attribute_channels)
        throw ConfigError("compressed vector layout does not match the image spec");

    const Eigen::MatrixXd coords = vectors.combined();
    GraphImage img;
    img.channels = spec.channels();
    img.height = img.width = spec.size;
    img.graph_id = graph_id;
    img.label = label;
    img.counts.assign(static_cast<std::size_t>(img.channels) * spec.size * spec.size, 0);
    for (int c = 0; c < img.channels; ++c) {
        for (Eigen::Index v = 0; v < coords.rows(); ++v) {
            const int col = spec.bin(coords(v, 2 * c));
            const int row = spec.bin(coords(v, 2 * c + 1));
            if (col < 0 || row < 0) continue;
            ++img.counts[(static_cast<std::size_t>(c) * spec.size + row) * spec.size + col];
        }
    }
    return img;
}

std::vector<GraphImage> rasterize_dataset(const std::vector<CompressedNodeVectors>& vectors, const GraphDataset& dataset,
                                          const ImageSpec& spec)
{
    if (vectors.size() != dataset.size()) throw ConfigError("one compressed vector set per graph required");
    std::vector<GraphImage> out;
    out.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i)
        out.push_back(rasterize_graph(vectors[i], spec, static_cast<int>(i), dataset.graphs[i].label()));
    return out;
}

void write_channel_png(const GraphImage& image, int channel, const std::filesystem::path& path)
{
    if (channel < 0 || channel >= image.channels) throw ConfigError("channel out of range");
    std::unique_ptr<FILE, decltype(&std::fclose)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw FormatError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw FormatError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::int32_t peak = 1;
    for (int r = 0; r < image.height; ++r)
        for (int c = 0; c < image.width; ++c) peak = std::max(peak, image.at(channel, r, c));
    std::vector<png_byte> row(image.width);
    // Flip vertically so that the second coordinate grows upward.
    for (int r = image.height - 1; r >= 0; --r) {
        for (int c = 0; c < image.width; ++c)
            row[c] = static_cast<png_byte>(std::lround(255.0 * image.at(channel, r, c) / peak));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace g2d
