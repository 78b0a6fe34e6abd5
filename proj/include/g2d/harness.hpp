#pragma once

#include "g2d/cnn.hpp"
#include "g2d/embed.hpp"
#include "g2d/graph.hpp"
#include "g2d/kernels.hpp"
#include "g2d/pca.hpp"
#include "g2d/svm.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace g2d {

struct CvConfig {
    int folds = 10;
    int repeats = 3;
    double inner_validation_fraction = 0.1;  ///< 90-10 split for grid search
    std::uint64_t seed = 1;

    void validate() const;
};

/// Fold index in [0, folds) per sample. Each class is shuffled and dealt
/// round-robin, continuing the deal across classes, so every fold holds
/// floor or ceil of each class's share and fold sizes differ by at most one.
std::vector<int> stratified_kfold(std::span<const int> labels, int folds, std::uint64_t seed);

struct GridSearchResult {
    double C = 1.0;
    int iterations = 0;  ///< WL iterations; 0 for kernels without that parameter
    double accuracy = 0.0;
    int trainings = 0;
};

/// Joint search over (h, C) on a stratified inner split of the training set.
/// kernels[k] is the (train x train) kernel matrix for candidate h_grid[k].
/// Ties prefer smaller h, then smaller C.
GridSearchResult grid_search_kernel(const std::vector<Eigen::MatrixXd>& kernels, std::span<const int> h_grid,
                                    std::span<const int> labels, int classes, std::span<const double> c_grid,
                                    double validation_fraction, std::uint64_t seed, double tolerance = 1e-3);

struct MannWhitneyResult {
    double u = 0.0;        ///< U statistic of sample a
    double p_value = 1.0;  ///< two-sided
    bool exact = false;
};

/// Midranked U with exact enumeration for n_a + n_b <= 20 and a
/// tie-corrected normal approximation with continuity correction above.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Synthetic data

struct RandomGraphSpec {
    enum class Kind { uniform_edges, preferential_attachment };
    Kind kind = Kind::uniform_edges;
    int nodes = 60;
    double edge_probability = 0.1;  ///< uniform_edges
    int attachment = 3;             ///< preferential_attachment

    void validate() const;
    std::string describe() const;
};

Graph uniform_random_graph(int nodes, double edge_probability, std::mt19937_64& rng);
/// Growth model: starts from `attachment` isolated nodes; every new node links
/// to `attachment` distinct existing nodes chosen proportionally to degree.
Graph preferential_attachment_graph(int nodes, int attachment, std::mt19937_64& rng);

/// `count` graphs per spec; class k is the k-th spec.
GraphDataset generate_synthetic_dataset(std::span<const RandomGraphSpec> classes, int count, std::uint64_t seed);

/// Parses "er:60:0.1:100+ba:60:3:100[@seed]" (kind:nodes:param:count per class).
GraphDataset parse_synthetic_dataset(const std::string& description);

/// The desk-scale fixture: 100 uniform-edge graphs (n=60, p=0.1) vs 100 preferential-attachment graphs (n=60, m=3).
GraphDataset synthetic_fixture(std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Methods

enum class Method { cnn, wl, graphlet, majority };

Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct CnnPipelineConfig {
    WalkConfig walk;
    EmbeddingConfig embedding;
    int channels = 5;  ///< embedding channels; retained dimensions = 2 * channels
    bool attribute_channels = false;
    double resolution = 9.0;
    bool normalize_histograms = false;
    PcaScope pca_scope = PcaScope::global;
    /// Fit PCA and the image extent on all graphs instead of each fold's training side.
    bool global_preprocessing = false;
    int hidden = 128;
    nn::TrainConfig train;
};

struct KernelMethodConfig {
    std::vector<double> c_grid = default_c_grid();
    std::vector<int> wl_iterations{2, 3, 4, 5, 6, 7};
    GraphletConfig graphlet;
    double tolerance = 1e-3;
};

struct MethodConfig {
    Method method = Method::cnn;
    CnnPipelineConfig cnn;
    KernelMethodConfig kernel;

    nlohmann::json to_json() const;
    static MethodConfig from_json(const nlohmann::json& j);
};

/// Named node2vec/resolution/channel settings tuned per benchmark dataset.
CnnPipelineConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// ---------------------------------------------------------------------------
// Experiments

/// Which sample indices touched each fitted object in one outer fold.
struct FoldTrace {
    std::vector<std::size_t> test;
    std::vector<std::size_t> pca_fit;
    std::vector<std::size_t> extent_fit;
    std::vector<std::size_t> grid_search;
    std::vector<std::size_t> early_stopping;
    std::vector<std::size_t> model_fit;
};

struct FoldResult {
    int repeat = 0;
    int fold = 0;
    double accuracy = 0.0;
    std::size_t test_size = 0;
    nlohmann::json chosen = nlohmann::json::object();
    double train_seconds = 0.0;
    double seconds_per_epoch = 0.0;
    int epochs = 0;
};

struct EvalResult {
    std::string dataset;
    Method method = Method::cnn;
    std::vector<FoldResult> folds;
    double mean = 0.0;
    double std = 0.0;  ///< population standard deviation over all fold accuracies
    /// Phase name -> seconds (embedding, rasterization, seconds_per_epoch, kernel_matrix, svm, ...).
    std::vector<std::pair<std::string, double>> timings;
    std::vector<FoldTrace> traces;
    nlohmann::json metadata = nlohmann::json::object();

    std::vector<double> accuracies() const;
};

/// Population mean and standard deviation.
std::pair<double, double> mean_and_std(std::span<const double> values);

/// Per-graph embeddings for the CNN pipeline, seeded per graph.
std::vector<NodeEmbeddings> embed_dataset(const GraphDataset& dataset, const CnnPipelineConfig& config,
                                          double* seconds = nullptr);

/// Full protocol: `repeats` x `folds` stratified outer CV. Embeddings may be
/// supplied to share them across runs (e.g. ablations); otherwise they are computed.
EvalResult run_experiment(const GraphDataset& dataset, const MethodConfig& method, const CvConfig& cv,
                          const std::vector<NodeEmbeddings>* embeddings = nullptr);

std::string results_csv(const EvalResult& result);
std::string timings_csv(const EvalResult& result);
/// Summary with optional Mann-Whitney comparison against a baseline run's accuracies.
nlohmann::json summary_json(const EvalResult& result, const std::vector<double>* baseline = nullptr,
                            const std::string& baseline_name = "");

/// Reads the accuracy column of a results.csv.
std::vector<double> read_results_accuracies(const std::filesystem::path& path);

}  // namespace g2d
