#pragma once

#include "g2d/embed.hpp"
#include "g2d/pca.hpp"
#include "g2d/raster.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <vector>

namespace g2d {

// All of these sit on the tensor container; the manifest carries a "kind" tag.

void write_embeddings(const std::filesystem::path& path, const std::vector<NodeEmbeddings>& embeddings,
                      const WalkConfig& walk, const EmbeddingConfig& config);
std::vector<NodeEmbeddings> read_embeddings(const std::filesystem::path& path);

void write_pca_model(const std::filesystem::path& path, const PcaModel<double>& model,
                     const nlohmann::json& extra = nlohmann::json::object());
PcaModel<double> read_pca_model(const std::filesystem::path& path);

struct ImageSet {
    ImageSpec spec;
    std::vector<GraphImage> images;
    int class_count = 0;
};

void write_images(const std::filesystem::path& path, const ImageSet& set,
                  const nlohmann::json& extra = nlohmann::json::object());
ImageSet read_images(const std::filesystem::path& path);

struct StoredKernel {
    Eigen::MatrixXd values;
    std::vector<int> labels;
    int class_count = 0;
    nlohmann::json manifest;
};

void write_kernel_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& values, std::span<const int> labels,
                         int class_count, const nlohmann::json& extra = nlohmann::json::object());
StoredKernel read_kernel_matrix(const std::filesystem::path& path);

}  // namespace g2d
