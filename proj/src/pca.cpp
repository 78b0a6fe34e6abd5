#include "g2d/pca.hpp"

#include "g2d/log.hpp"

namespace g2d {

ChannelLayout CompressedNodeVectors::layout() const
{
    return {static_cast<int>(embedding.cols() / 2), attributes ? static_cast<int>(attributes->cols() / 2) : 0};
}

Eigen::MatrixXd CompressedNodeVectors::combined() const
{
    if (!attributes) return embedding;
    Eigen::MatrixXd out(embedding.rows(), embedding.cols() + attributes->cols());
    out << embedding, *attributes;
    return out;
}

namespace {

std::vector<std::size_t> resolve_fit_indices(std::span<const std::size_t> fit, std::size_t n)
{
    if (!fit.empty()) {
        for (auto i : fit)
            if (i >= n) throw ConfigError("fit index out of range");
        return {fit.begin(), fit.end()};
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

Eigen::MatrixXd stack_rows(const std::vector<const Eigen::MatrixXd*>& parts)
{
    Eigen::Index rows = 0, cols = parts.empty() ? 0 : parts.front()->cols();
    for (auto* p : parts) {
        if (p->cols() != cols) throw ConfigError("cannot stack matrices of different widths");
        rows += p->rows();
    }
    Eigen::MatrixXd out(rows, cols);
    Eigen::Index r = 0;
    for (auto* p : parts) {
        out.middleRows(r, p->rows()) = *p;
        r += p->rows();
    }
    return out;
}

}  // namespace

std::vector<Eigen::MatrixXd> prepare_attribute_channels(const GraphDataset& dataset, int d_attr, double target_min,
                                                        double target_max, std::span<const std::size_t> fit_indices,
                                                        PcaModel<double>* fitted)
{
    if (!dataset.has_attributes()) throw ConfigError("dataset " + dataset.name + " has no node attributes");
    if (d_attr < 2 || d_attr % 2 != 0) throw ConfigError("attribute dimensionality must be even and >= 2");
    const auto fit = resolve_fit_indices(fit_indices, dataset.size());

    std::vector<const Eigen::MatrixXd*> parts;
    for (auto i : fit) parts.push_back(&dataset.graphs[i].attributes());
    const Eigen::MatrixXd stacked = stack_rows(parts);
    const auto model = pca_fit(stacked, d_attr);
    const Eigen::MatrixXd fit_codes = pca_transform(model, stacked);
    const Eigen::RowVectorXd lo = fit_codes.colwise().minCoeff(), hi = fit_codes.colwise().maxCoeff();

    std::vector<Eigen::MatrixXd> out;
    out.reserve(dataset.size());
    for (const auto& g : dataset.graphs) {
        Eigen::MatrixXd codes = pca_transform(model, g.attributes());
        for (Eigen::Index k = 0; k < codes.cols(); ++k) {
            const double range = hi[k] - lo[k];
            if (range > 0.0)
                codes.col(k) = ((codes.col(k).array() - lo[k]) * ((target_max - target_min) / range) + target_min).matrix();
            else
                codes.col(k).setConstant(0.5 * (target_min + target_max));
        }
        out.push_back(std::move(codes));
    }
    if (fitted) *fitted = model;
    return out;
}

CompressionResult compress_collection(const std::vector<NodeEmbeddings>& embeddings, const GraphDataset& dataset,
                                      const CompressionOptions& options, std::span<const std::size_t> fit_indices)
{
    const int d = options.dimensions;
    if (d < 2 || d % 2 != 0) throw ConfigError("retained dimensionality must be even and >= 2 (channels are dimension pairs)");
    if (embeddings.size() != dataset.size()) throw ConfigError("one embedding per graph required");
    CompressionResult result;
    result.fit_indices = resolve_fit_indices(fit_indices, dataset.size());
    result.vectors.resize(dataset.size());

    if (options.scope == PcaScope::global) {
        std::vector<const Eigen::MatrixXd*> parts;
        for (auto i : result.fit_indices) parts.push_back(&embeddings[i].matrix);
        const Eigen::MatrixXd stacked = stack_rows(parts);
        result.embedding_pca = pca_fit(stacked, d);
        for (std::size_t i = 0; i < dataset.size(); ++i)
            result.vectors[i].embedding = pca_transform(*result.embedding_pca, embeddings[i].matrix);
    } else {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            const auto& m = embeddings[i].matrix;
            if (m.rows() < d || m.rows() < 2)
                throw ConfigError("graph " + std::to_string(i) + " has too few nodes for per-graph PCA with d=" + std::to_string(d));
            result.vectors[i].embedding = pca_transform(pca_fit(m, d), m);
        }
    }

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (auto i : result.fit_indices) {
        lo = std::min(lo, result.vectors[i].embedding.minCoeff());
        hi = std::max(hi, result.vectors[i].embedding.maxCoeff());
    }
    result.embedding_min = lo;
    result.embedding_max = hi;

    if (options.attribute_channels) {
        PcaModel<double> attr_model;
        auto attrs = prepare_attribute_channels(dataset, d, lo, hi, result.fit_indices, &attr_model);
        result.attribute_pca = std::move(attr_model);
        for (std::size_t i = 0; i < dataset.size(); ++i) result.vectors[i].attributes = std::move(attrs[i]);
    }
    return result;
}

}  // namespace g2d
