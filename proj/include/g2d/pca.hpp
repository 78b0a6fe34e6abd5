#pragma once

#include "g2d/embed.hpp"
#include "g2d/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace g2d {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
struct SymmetricEigen {
    VectorX<Scalar> values;   ///< descending
    MatrixX<Scalar> vectors;  ///< column k pairs with values[k]
    int sweeps = 0;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Only the upper
/// triangle is read. Rotations are applied until the off-diagonal Frobenius
/// norm falls below eps times the matrix norm.
template <class Derived>
SymmetricEigen<typename Derived::Scalar> jacobi_eigen(const Eigen::MatrixBase<Derived>& symmetric, int max_sweeps = 100)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = symmetric.rows();
    if (symmetric.cols() != n) throw ConfigError("jacobi_eigen needs a square matrix");
    MatrixX<Scalar> a = symmetric.template selfadjointView<Eigen::Upper>();
    MatrixX<Scalar> v = MatrixX<Scalar>::Identity(n, n);
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar scale = std::max(a.norm(), std::numeric_limits<Scalar>::min());

    auto off_norm = [&] {
        Scalar s = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) s += 2 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    int sweep = 0;
    for (; sweep < max_sweeps && off_norm() > eps * scale; ++sweep) {
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (std::abs(apq) <= std::numeric_limits<Scalar>::min()) continue;
                // Rotation angle that annihilates a(p,q).
                const Scalar theta = (a(q, q) - a(p, p)) / (2 * apq);
                const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1));
                const Scalar c = 1 / std::sqrt(t * t + 1);
                const Scalar s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const Scalar vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
    SymmetricEigen<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        out.vectors.col(k) = v.col(order[k]);
    }
    out.sweeps = sweep;
    return out;
}

template <class Scalar>
struct PcaModel {
    VectorX<Scalar> mean;               ///< D
    MatrixX<Scalar> components;         ///< d x D, rows orthonormal
    VectorX<Scalar> explained_variance; ///< d, non-increasing

    Eigen::Index input_dim() const { return mean.size(); }
    Eigen::Index output_dim() const { return components.rows(); }
};

/// Fits PCA on the rows of `data` (M x D) keeping `d` components. Variances
/// use the M-1 denominator. Each component is signed so that its
/// largest-magnitude entry is positive.
template <class Derived>
PcaModel<typename Derived::Scalar> pca_fit(const Eigen::MatrixBase<Derived>& data, Eigen::Index d)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index m = data.rows(), dim = data.cols();
    if (d < 1 || d > dim) throw ConfigError("PCA needs 1 <= d <= D");
    if (m < d) throw ConfigError("PCA rank error: " + std::to_string(m) + " rows cannot support " + std::to_string(d) + " components");
    if (m < 2) throw ConfigError("PCA needs at least two rows");

    PcaModel<Scalar> model;
    model.mean = data.colwise().mean().transpose();
    MatrixX<Scalar> centered = data.rowwise() - model.mean.transpose();
    MatrixX<Scalar> cov = (centered.adjoint() * centered) / Scalar(m - 1);
    auto eig = jacobi_eigen(cov);

    model.components.resize(d, dim);
    model.explained_variance.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        VectorX<Scalar> c = eig.vectors.col(k);
        Eigen::Index arg = 0;
        c.cwiseAbs().maxCoeff(&arg);
        if (c[arg] < 0) c = -c;
        model.components.row(k) = c.transpose();
        model.explained_variance[k] = std::max(eig.values[k], Scalar(0));
    }
    return model;
}

/// Projects the rows of `data` onto the components after centering.
template <class Scalar, class Derived>
MatrixX<Scalar> pca_transform(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& data)
{
    if (data.cols() != model.input_dim())
        throw ConfigError("PCA input width " + std::to_string(data.cols()) + " != model width " +
                          std::to_string(model.input_dim()));
    return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

template <class Scalar, class Derived>
MatrixX<Scalar> pca_inverse_transform(const PcaModel<Scalar>& model, const Eigen::MatrixBase<Derived>& codes)
{
    if (codes.cols() != model.output_dim()) throw ConfigError("PCA code width mismatch");
    return (codes * model.components).rowwise() + model.mean.transpose();
}

// ---------------------------------------------------------------------------
// Collection-level compression

enum class PcaScope { global, per_graph };

struct ChannelLayout {
    int embedding_channels = 0;
    int attribute_channels = 0;
    int total() const { return embedding_channels + attribute_channels; }
};

/// Compressed per-node coordinates of one graph: the embedding part and the
/// optional attribute part, both with an even number of columns.
struct CompressedNodeVectors {
    Eigen::MatrixXd embedding;
    std::optional<Eigen::MatrixXd> attributes;

    ChannelLayout layout() const;
    /// [embedding | attributes] as one |V| x 2*channels matrix.
    Eigen::MatrixXd combined() const;
};

struct CompressionOptions {
    int dimensions = 10;  ///< retained embedding dimensions d (even)
    bool attribute_channels = false;
    PcaScope scope = PcaScope::global;
};

struct CompressionResult {
    std::optional<PcaModel<double>> embedding_pca;  ///< absent for per-graph scope
    std::optional<PcaModel<double>> attribute_pca;
    std::vector<CompressedNodeVectors> vectors;  ///< one per input graph
    double embedding_min = 0.0;
    double embedding_max = 0.0;
    std::vector<std::size_t> fit_indices;  ///< graphs whose nodes fitted the models
};

/// Fits attribute PCA on the nodes of `fit_indices` (all graphs if empty),
/// transforms every graph, then maps each compressed dimension affinely so
/// that its fit-set min/max land on [target_min, target_max].
std::vector<Eigen::MatrixXd> prepare_attribute_channels(const GraphDataset& dataset, int d_attr, double target_min,
                                                        double target_max, std::span<const std::size_t> fit_indices = {},
                                                        PcaModel<double>* fitted = nullptr);

/// Aligns and compresses node embeddings across the collection. With global
/// scope, one PCA is fitted on the stacked nodes of the fit graphs.
CompressionResult compress_collection(const std::vector<NodeEmbeddings>& embeddings, const GraphDataset& dataset,
                                      const CompressionOptions& options, std::span<const std::size_t> fit_indices = {});

}  // namespace g2d
