#pragma once

#include "g2d/layers.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2d::nn {

/// Four parallel branches, one per region size, each
/// [conv(rs, f1) -> ReLU -> pool -> dropout -> conv(rs, f2) -> ReLU -> pool -> dropout],
/// flattened and concatenated, then dense(hidden) -> ReLU -> dropout -> dense(classes) -> softmax.
struct CnnArchitecture {
    Shape3 input{5, 28, 28};
    int classes = 2;
    std::vector<int> region_sizes{3, 4, 5, 6};
    int filters_first = 64;
    int filters_second = 96;
    int hidden = 128;
    double dropout = 0.3;

    /// The reference network for a given input and class count.
    static CnnArchitecture reference(Shape3 input, int classes, double dropout = 0.3);
    void validate() const;
    nlohmann::json to_json() const;
    static CnnArchitecture from_json(const nlohmann::json& j);
    /// Width of the merged (concatenated) branch outputs.
    Eigen::Index merged_width() const;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class Scalar>
class CnnModel {
public:
    using Matrix = RowMatrix<Scalar>;

    CnnModel() = default;
    explicit CnnModel(const CnnArchitecture& arch, std::uint64_t seed = 1);

    const CnnArchitecture& architecture() const { return arch_; }

    /// Class probabilities, one row per sample. Dropout is active only in train mode.
    Matrix forward(const Matrix& batch, bool train_mode);

    /// Zeroes gradients, runs forward and backward, returns the mean cross-entropy.
    Scalar loss_and_gradient(const Matrix& batch, std::span<const int> labels, bool train_mode = true);

    /// Mean cross-entropy in inference mode, no gradients.
    Scalar loss(const Matrix& batch, std::span<const int> labels);

    /// Probabilities computed by the most recent loss_and_gradient call.
    const Matrix& last_probabilities() const { return last_probabilities_; }

    std::vector<Parameter<Scalar>*> parameters();
    std::vector<const Parameter<Scalar>*> parameters() const;
    Eigen::Index parameter_count() const;

    void reseed_dropout(std::uint64_t seed) { dropout_rng_.seed(seed); }

    void save(const std::filesystem::path& path, const nlohmann::json& extra = nlohmann::json::object()) const;
    static CnnModel load(const std::filesystem::path& path);

private:
    struct Branch {
        Conv2d<Scalar> conv1, conv2;
        Shape3 s_conv1, s_pool1, s_conv2, s_pool2;
        Matrix a1, p1, m1, a2, p2, m2;
        std::vector<std::int32_t> arg1, arg2;
    };

    void check_input(const Matrix& batch) const;
    Matrix run_forward(const Matrix& batch, bool train_mode);
    void run_backward(const Matrix& batch, const Matrix& grad_logits);

    CnnArchitecture arch_;
    std::vector<Branch> branches_;
    Dense<Scalar> hidden_, output_;
    Matrix merged_, hidden_act_, hidden_mask_, last_probabilities_;
    bool last_train_ = false;
    std::mt19937_64 dropout_rng_{1};
};

struct TrainConfig {
    int batch_size = 32;
    double dropout = 0.3;
    int patience = 5;
    int max_epochs = 100;
    double validation_fraction = 0.1;
    AdamConfig adam;
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;  ///< 1-based epoch number of the restored weights
    bool early_stopped = false;

    std::string to_csv() const;
};

/// Patience counter on validation loss with a null improvement threshold.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    /// Records one epoch; returns true when training should stop.
    bool update(double val_loss);
    bool improved() const { return improved_; }
    double best() const { return best_; }

private:
    int patience_;
    int wait_ = 0;
    bool improved_ = false;
    double best_ = std::numeric_limits<double>::infinity();
};

template <class Scalar>
struct Dataset {
    RowMatrix<Scalar> inputs;  ///< one sample per row
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    Dataset subset(std::span<const std::size_t> rows) const;
};

/// Stratified split of `labels` into (train, validation) row lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const int> labels, double fraction,
                                                                                 std::uint64_t seed);

/// Adam on mini-batches; stops when validation loss has not improved for
/// `patience` epochs and restores the best-validation weights.
template <class Scalar>
TrainHistory train(CnnModel<Scalar>& model, const Dataset<Scalar>& train_set, const Dataset<Scalar>& validation,
                   const TrainConfig& config);

/// Same, holding out config.validation_fraction of `data` (stratified) for early stopping.
template <class Scalar>
TrainHistory train(CnnModel<Scalar>& model, const Dataset<Scalar>& data, const TrainConfig& config,
                   std::vector<std::size_t>* validation_rows = nullptr);

template <class Scalar>
struct Prediction {
    std::vector<int> labels;
    RowMatrix<Scalar> probabilities;
};

/// Argmax of inference-mode probabilities; ties go to the lowest class index.
template <class Scalar>
Prediction<Scalar> predict(CnnModel<Scalar>& model, const RowMatrix<Scalar>& inputs, int batch_size = 64);

std::vector<int> argmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& probabilities);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

extern template class CnnModel<float>;
extern template class CnnModel<double>;

}  // namespace g2d::nn
