#include "g2d/persist.hpp"

#include "g2d/tensor_io.hpp"

namespace g2d {

namespace {

void expect_kind(const nlohmann::json& manifest, const std::string& kind, const std::filesystem::path& path)
{
    if (manifest.value("kind", std::string{}) != kind)
        throw FormatError(path.string() + ": manifest kind is not '" + kind + "'");
}

TensorRecord matrix_record(std::int64_t id, const Eigen::MatrixXd& m)
{
    TensorRecord r;
    r.id = id;
    r.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
    std::vector<double> data(m.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(data.data(), m.rows(), m.cols()) = m;
    r.data = std::move(data);
    return r;
}

Eigen::MatrixXd record_matrix(const TensorRecord& r, const std::filesystem::path& path)
{
    if (r.shape.size() != 2) throw FormatError(path.string() + ": record " + std::to_string(r.id) + " is not a matrix");
    const auto v = r.as_double();
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.data(), static_cast<Eigen::Index>(r.shape[0]), static_cast<Eigen::Index>(r.shape[1]));
}

}  // namespace

void write_embeddings(const std::filesystem::path& path, const std::vector<NodeEmbeddings>& embeddings,
                      const WalkConfig& walk, const EmbeddingConfig& config)
{
    std::vector<TensorRecord> records;
    records.reserve(embeddings.size());
    for (const auto& e : embeddings) records.push_back(matrix_record(e.graph_id, e.matrix));
    write_tensor_file(path, records,
                      {{"kind", "node_embeddings"}, {"walk", to_json(walk)}, {"embedding", to_json(config)},
                       {"graphs", embeddings.size()}});
}

std::vector<NodeEmbeddings> read_embeddings(const std::filesystem::path& path)
{
    expect_kind(read_manifest(path), "node_embeddings", path);
    std::vector<NodeEmbeddings> out;
    for (const auto& r : read_tensor_file(path)) {
        NodeEmbeddings e;
        e.graph_id = static_cast<int>(r.id);
        e.matrix = record_matrix(r, path);
        out.push_back(std::move(e));
    }
    return out;
}

void write_pca_model(const std::filesystem::path& path, const PcaModel<double>& model, const nlohmann::json& extra)
{
    std::vector<TensorRecord> records;
    records.push_back(matrix_record(0, model.mean.transpose()));
    records.push_back(matrix_record(1, model.components));
    records.push_back(matrix_record(2, model.explained_variance.transpose()));
    nlohmann::json manifest = extra;
    manifest["kind"] = "pca_model";
    manifest["input_dim"] = model.input_dim();
    manifest["output_dim"] = model.output_dim();
    write_tensor_file(path, records, manifest);
}

PcaModel<double> read_pca_model(const std::filesystem::path& path)
{
    expect_kind(read_manifest(path), "pca_model", path);
    const auto records = read_tensor_file(path);
    if (records.size() != 3) throw FormatError(path.string() + ": PCA model needs 3 records");
    PcaModel<double> m;
    m.mean = record_matrix(records[0], path).transpose();
    m.components = record_matrix(records[1], path);
    m.explained_variance = record_matrix(records[2], path).transpose();
    if (m.components.cols() != m.mean.size() || m.components.rows() != m.explained_variance.size())
        throw FormatError(path.string() + ": inconsistent PCA record shapes");
    return m;
}

void write_images(const std::filesystem::path& path, const ImageSet& set, const nlohmann::json& extra)
{
    std::vector<TensorRecord> records;
    std::vector<int> labels;
    for (const auto& img : set.images) {
        TensorRecord r;
        r.id = img.graph_id;
        r.shape = {static_cast<std::uint64_t>(img.channels), static_cast<std::uint64_t>(img.height),
                   static_cast<std::uint64_t>(img.width)};
        r.data = img.counts;
        records.push_back(std::move(r));
        labels.push_back(img.label);
    }
    nlohmann::json manifest = extra;
    manifest["kind"] = "images";
    manifest["spec"] = to_json(set.spec);
    manifest["labels"] = labels;
    manifest["class_count"] = set.class_count;
    write_tensor_file(path, records, manifest);
}

ImageSet read_images(const std::filesystem::path& path)
{
    const auto manifest = read_manifest(path);
    expect_kind(manifest, "images", path);
    ImageSet set;
    set.spec = image_spec_from_json(manifest.at("spec"));
    set.class_count = manifest.value("class_count", 0);
    const auto labels = manifest.at("labels").get<std::vector<int>>();
    const auto records = read_tensor_file(path);
    if (labels.size() != records.size()) throw FormatError(path.string() + ": label count does not match image count");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto* counts = std::get_if<std::vector<std::int32_t>>(&r.data);
        if (r.shape.size() != 3 || !counts) throw FormatError(path.string() + ": image records must be int32 (c, h, w)");
        GraphImage img;
        img.channels = static_cast<int>(r.shape[0]);
        img.height = static_cast<int>(r.shape[1]);
        img.width = static_cast<int>(r.shape[2]);
        img.counts = *counts;
        img.graph_id = static_cast<int>(r.id);
        img.label = labels[i];
        set.images.push_back(std::move(img));
    }
    return set;
}

void write_kernel_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& values, std::span<const int> labels,
                         int class_count, const nlohmann::json& extra)
{
    if (values.rows() != values.cols() || values.rows() != static_cast<Eigen::Index>(labels.size()))
        throw ConfigError("kernel matrix must be square and match the label count");
    nlohmann::json manifest = extra;
    manifest["kind"] = "kernel_matrix";
    manifest["labels"] = std::vector<int>(labels.begin(), labels.end());
    manifest["class_count"] = class_count;
    write_tensor_file(path, {matrix_record(0, values)}, manifest);
}

StoredKernel read_kernel_matrix(const std::filesystem::path& path)
{
    StoredKernel k;
    k.manifest = read_manifest(path);
    expect_kind(k.manifest, "kernel_matrix", path);
    const auto records = read_tensor_file(path);
    if (records.size() != 1) throw FormatError(path.string() + ": kernel file needs exactly one record");
    k.values = record_matrix(records[0], path);
    k.labels = k.manifest.at("labels").get<std::vector<int>>();
    k.class_count = k.manifest.value("class_count", 0);
    if (k.values.rows() != k.values.cols() || k.values.rows() != static_cast<Eigen::Index>(k.labels.size()))
        throw FormatError(path.string() + ": kernel matrix shape does not match its labels");
    return k;
}

}  // namespace g2d
