#include "g2d/cnn.hpp"

#include "g2d/log.hpp"
#include "g2d/tensor_io.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <sstream>

namespace g2d::nn {

CnnArchitecture CnnArchitecture::reference(Shape3 input, int classes, double dropout)
{
    CnnArchitecture a;
    a.input = input;
    a.classes = classes;
    a.dropout = dropout;
    return a;
}

void CnnArchitecture::validate() const
{
    if (input.channels < 1) throw ConfigError("CNN input needs at least one channel");
    int largest = 0;
    for (int rs : region_sizes) {
        if (rs < 1) throw ConfigError("region sizes must be positive");
        largest = std::max(largest, rs);
    }
    if (region_sizes.empty()) throw ConfigError("CNN needs at least one branch");
    if (input.height < largest || input.width < largest)
        throw ConfigError("input " + std::to_string(input.height) + "x" + std::to_string(input.width) +
                          " smaller than the largest region size " + std::to_string(largest));
    if (input.height / 4 < 1 || input.width / 4 < 1) throw ConfigError("input too small for two 2x2 poolings");
    if (classes < 2) throw ConfigError("CNN needs at least two classes");
    if (filters_first < 1 || filters_second < 1 || hidden < 1) throw ConfigError("layer widths must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

nlohmann::json CnnArchitecture::to_json() const
{
    return {{"input", {input.channels, input.height, input.width}},
            {"classes", classes},
            {"region_sizes", region_sizes},
            {"filters", {filters_first, filters_second}},
            {"hidden", hidden},
            {"dropout", dropout},
            {"padding", "same"},
            {"merge", "flatten-concat"}};
}

CnnArchitecture CnnArchitecture::from_json(const nlohmann::json& j)
{
    CnnArchitecture a;
    const auto in = j.at("input");
    a.input = {in.at(0).get<int>(), in.at(1).get<int>(), in.at(2).get<int>()};
    a.classes = j.at("classes").get<int>();
    a.region_sizes = j.at("region_sizes").get<std::vector<int>>();
    a.filters_first = j.at("filters").at(0).get<int>();
    a.filters_second = j.at("filters").at(1).get<int>();
    a.hidden = j.at("hidden").get<int>();
    a.dropout = j.at("dropout").get<double>();
    return a;
}

Eigen::Index CnnArchitecture::merged_width() const
{
    Eigen::Index total = 0;
    for (int rs : region_sizes) {
        auto s = conv_output_shape(input, filters_first, rs, Padding::same(rs));
        s = maxpool_output_shape(s);
        s = conv_output_shape(s, filters_second, rs, Padding::same(rs));
        s = maxpool_output_shape(s);
        total += s.size();
    }
    return total;
}

// ---------------------------------------------------------------------------

template <class Scalar>
CnnModel<Scalar>::CnnModel(const CnnArchitecture& arch, std::uint64_t seed) : arch_(arch)
{
    arch_.validate();
    std::mt19937_64 seeder(seed);
    for (int rs : arch_.region_sizes) {
        Branch b;
        b.conv1 = Conv2d<Scalar>(arch_.input.channels, arch_.filters_first, rs, Padding::same(rs));
        b.s_conv1 = b.conv1.output_shape(arch_.input);
        b.s_pool1 = maxpool_output_shape(b.s_conv1);
        b.conv2 = Conv2d<Scalar>(arch_.filters_first, arch_.filters_second, rs, Padding::same(rs));
        b.s_conv2 = b.conv2.output_shape(b.s_pool1);
        b.s_pool2 = maxpool_output_shape(b.s_conv2);
        b.conv1.initialize(seeder());
        b.conv2.initialize(seeder());
        branches_.push_back(std::move(b));
    }
    const Eigen::Index merged = arch_.merged_width();
    hidden_ = Dense<Scalar>(static_cast<int>(merged), arch_.hidden);
    output_ = Dense<Scalar>(arch_.hidden, arch_.classes);
    hidden_.initialize(seeder());
    output_.initialize(seeder());
    dropout_rng_.seed(seeder());
}

template <class Scalar>
void CnnModel<Scalar>::check_input(const Matrix& batch) const
{
    if (batch.cols() != arch_.input.size())
        throw ConfigError("input width " + std::to_string(batch.cols()) + " does not match architecture input " +
                          std::to_string(arch_.input.channels) + "x" + std::to_string(arch_.input.height) + "x" +
                          std::to_string(arch_.input.width));
}

template <class Scalar>
typename CnnModel<Scalar>::Matrix CnnModel<Scalar>::run_forward(const Matrix& x, bool train_mode)
{
    check_input(x);
    last_train_ = train_mode;
    const double rate = arch_.dropout;
    Eigen::Index width = 0;
    for (auto& b : branches_) {
        b.conv1.forward(x, arch_.input, b.a1);
        relu_inplace(b.a1);
        maxpool_2x2_forward(b.a1, b.s_conv1, b.p1, b.arg1);
        if (train_mode) dropout_forward(b.p1, rate, dropout_rng_, b.m1);
        b.conv2.forward(b.p1, b.s_pool1, b.a2);
        relu_inplace(b.a2);
        maxpool_2x2_forward(b.a2, b.s_conv2, b.p2, b.arg2);
        if (train_mode) dropout_forward(b.p2, rate, dropout_rng_, b.m2);
        width += b.p2.cols();
    }
    merged_.resize(x.rows(), width);
    Eigen::Index offset = 0;
    for (auto& b : branches_) {
        merged_.middleCols(offset, b.p2.cols()) = b.p2;
        offset += b.p2.cols();
    }
    hidden_.forward(merged_, hidden_act_);
    relu_inplace(hidden_act_);
    if (train_mode) dropout_forward(hidden_act_, rate, dropout_rng_, hidden_mask_);
    Matrix logits;
    output_.forward(hidden_act_, logits);
    return logits;
}

template <class Scalar>
void CnnModel<Scalar>::run_backward(const Matrix& x, const Matrix& grad_logits)
{
    Matrix dh, dmerged;
    output_.backward(hidden_act_, grad_logits, &dh);
    if (last_train_) dropout_backward_inplace(hidden_mask_, dh);
    relu_backward_inplace(hidden_act_, dh);
    hidden_.backward(merged_, dh, &dmerged);

    Eigen::Index offset = 0;
    Matrix dp2, da2, dp1, da1;
    for (auto& b : branches_) {
        dp2 = dmerged.middleCols(offset, b.p2.cols());
        offset += b.p2.cols();
        if (last_train_) dropout_backward_inplace(b.m2, dp2);
        maxpool_2x2_backward(dp2, b.arg2, b.s_conv2, da2);
        relu_backward_inplace(b.a2, da2);
        b.conv2.backward(b.p1, b.s_pool1, da2, &dp1);
        if (last_train_) dropout_backward_inplace(b.m1, dp1);
        maxpool_2x2_backward(dp1, b.arg1, b.s_conv1, da1);
        relu_backward_inplace(b.a1, da1);
        b.conv1.backward(x, arch_.input, da1, nullptr);
    }
}

template <class Scalar>
typename CnnModel<Scalar>::Matrix CnnModel<Scalar>::forward(const Matrix& batch, bool train_mode)
{
    return softmax_rows<Scalar>(run_forward(batch, train_mode));
}

template <class Scalar>
Scalar CnnModel<Scalar>::loss_and_gradient(const Matrix& batch, std::span<const int> labels, bool train_mode)
{
    for (auto* p : parameters()) p->zero_grad();
    const Matrix logits = run_forward(batch, train_mode);
    Matrix grad;
    const Scalar loss = softmax_cross_entropy<Scalar>(logits, labels, &last_probabilities_, &grad);
    run_backward(batch, grad);
    return loss;
}

template <class Scalar>
Scalar CnnModel<Scalar>::loss(const Matrix& batch, std::span<const int> labels)
{
    const Matrix logits = run_forward(batch, false);
    return softmax_cross_entropy<Scalar>(logits, labels, nullptr, nullptr);
}

template <class Scalar>
std::vector<Parameter<Scalar>*> CnnModel<Scalar>::parameters()
{
    std::vector<Parameter<Scalar>*> out;
    for (auto& b : branches_) {
        out.push_back(&b.conv1.weight);
        out.push_back(&b.conv1.bias);
        out.push_back(&b.conv2.weight);
        out.push_back(&b.conv2.bias);
    }
    out.push_back(&hidden_.weight);
    out.push_back(&hidden_.bias);
    out.push_back(&output_.weight);
    out.push_back(&output_.bias);
    return out;
}

template <class Scalar>
std::vector<const Parameter<Scalar>*> CnnModel<Scalar>::parameters() const
{
    auto mut = const_cast<CnnModel*>(this)->parameters();
    return {mut.begin(), mut.end()};
}

template <class Scalar>
Eigen::Index CnnModel<Scalar>::parameter_count() const
{
    Eigen::Index n = 0;
    for (const auto* p : parameters()) n += p->value.size();
    return n;
}

template <class Scalar>
void CnnModel<Scalar>::save(const std::filesystem::path& path, const nlohmann::json& extra) const
{
    std::vector<TensorRecord> records;
    std::int64_t id = 0;
    for (const auto* p : parameters()) {
        TensorRecord r;
        r.id = id++;
        r.shape = {static_cast<std::uint64_t>(p->value.rows()), static_cast<std::uint64_t>(p->value.cols())};
        if constexpr (std::is_same_v<Scalar, float>)
            r.data = std::vector<float>(p->value.data(), p->value.data() + p->value.size());
        else
            r.data = std::vector<double>(p->value.data(), p->value.data() + p->value.size());
        records.push_back(std::move(r));
    }
    nlohmann::json manifest = {{"kind", "cnn_checkpoint"},
                               {"scalar", std::is_same_v<Scalar, float> ? "f32" : "f64"},
                               {"architecture", arch_.to_json()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) manifest[it.key()] = it.value();
    write_tensor_file(path, records, manifest);
}

template <class Scalar>
CnnModel<Scalar> CnnModel<Scalar>::load(const std::filesystem::path& path)
{
    const auto manifest = read_manifest(path);
    if (manifest.value("kind", "") != "cnn_checkpoint") throw FormatError(path.string() + " is not a CNN checkpoint");
    CnnModel model(CnnArchitecture::from_json(manifest.at("architecture")));
    const auto records = read_tensor_file(path);
    auto params = model.parameters();
    if (records.size() != params.size()) throw FormatError("checkpoint parameter count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
        const auto values = records[k].as_double();
        if (static_cast<Eigen::Index>(values.size()) != params[k]->value.size())
            throw FormatError("checkpoint tensor " + std::to_string(k) + " has the wrong size");
        for (std::size_t i = 0; i < values.size(); ++i) params[k]->value.data()[i] = static_cast<Scalar>(values[i]);
    }
    return model;
}

template class CnnModel<float>;
template class CnnModel<double>;

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const
{
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (patience < 1) throw ConfigError("patience must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) throw ConfigError("validation fraction must lie in (0, 1)");
    if (!(adam.learning_rate >= 0.0)) throw ConfigError("learning rate must be nonnegative");
}

nlohmann::json TrainConfig::to_json() const
{
    return {{"batch_size", batch_size},
            {"dropout", dropout},
            {"patience", patience},
            {"max_epochs", max_epochs},
            {"validation_fraction", validation_fraction},
            {"learning_rate", adam.learning_rate},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon},
            {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j)
{
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.dropout = j.value("dropout", c.dropout);
    c.patience = j.value("patience", c.patience);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.seed = j.value("seed", c.seed);
    return c;
}

std::string TrainHistory::to_csv() const
{
    std::ostringstream os;
    os << "epoch,train_loss,train_accuracy,val_loss,val_accuracy,seconds\n";
    os.precision(10);
    for (const auto& e : epochs)
        os << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.val_loss << ',' << e.val_accuracy << ','
           << e.seconds << '\n';
    return os.str();
}

bool EarlyStopping::update(double val_loss)
{
    improved_ = val_loss < best_;
    if (improved_) {
        best_ = val_loss;
        wait_ = 0;
        return false;
    }
    return ++wait_ >= patience_;
}

template <class Scalar>
Dataset<Scalar> Dataset<Scalar>::subset(std::span<const std::size_t> rows) const
{
    Dataset out;
    out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(static_cast<Eigen::Index>(rows[i]));
        out.labels.push_back(labels.at(rows[i]));
    }
    return out;
}

template struct Dataset<float>;
template struct Dataset<double>;

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(std::span<const int> labels, double fraction,
                                                                                 std::uint64_t seed)
{
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> train_rows, val_rows;
    for (auto& [label, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(rows.size())));
        if (take == 0 && rows.size() >= 2) take = 1;
        if (take >= rows.size() && rows.size() >= 2) take = rows.size() - 1;
        val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
        train_rows.insert(train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(take), rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    return {train_rows, val_rows};
}

std::vector<int> argmax_rows(const Eigen::Ref<const Eigen::MatrixXd>& probabilities)
{
    std::vector<int> out(probabilities.rows());
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < probabilities.cols(); ++k)
            if (probabilities(i, k) > probabilities(i, arg)) arg = k;
        out[i] = static_cast<int>(arg);
    }
    return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth)
{
    if (predicted.size() != truth.size()) throw ConfigError("prediction/label length mismatch");
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

namespace {

template <class Scalar>
RowMatrix<Scalar> gather_rows(const RowMatrix<Scalar>& m, std::span<const std::size_t> rows)
{
    RowMatrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

template <class Scalar>
std::pair<double, double> evaluate(CnnModel<Scalar>& model, const Dataset<Scalar>& data, int batch_size)
{
    double loss = 0.0;
    std::size_t hits = 0;
    const std::size_t n = data.size();
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t len = std::min<std::size_t>(batch_size, n - start);
        const RowMatrix<Scalar> x = data.inputs.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len));
        std::span<const int> y(data.labels.data() + start, len);
        const RowMatrix<Scalar> p = model.forward(x, false);
        for (std::size_t i = 0; i < len; ++i) {
            const double py = std::max<double>(p(static_cast<Eigen::Index>(i), y[i]), 1e-300);
            loss -= std::log(py);
            Eigen::Index arg = 0;
            p.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
            hits += arg == y[i];
        }
    }
    return {loss / static_cast<double>(n), static_cast<double>(hits) / static_cast<double>(n)};
}

}  // namespace

template <class Scalar>
TrainHistory train(CnnModel<Scalar>& model, const Dataset<Scalar>& train_set, const Dataset<Scalar>& validation,
                   const TrainConfig& config)
{
    config.validate();
    if (train_set.size() == 0) throw ConfigError("empty training set");
    if (validation.size() == 0) throw ConfigError("early stopping needs a nonempty validation set");
    for (int y : train_set.labels)
        if (y < 0 || y >= model.architecture().classes) throw ConfigError("training label outside [0, classes)");

    Adam<Scalar> optimizer(config.adam);
    std::mt19937_64 rng(config.seed);
    model.reseed_dropout(config.seed * 0x9E3779B97F4A7C15ULL + 1);
    EarlyStopping stopper(config.patience);
    auto params = model.parameters();
    std::vector<RowMatrix<Scalar>> best;
    for (auto* p : params) best.push_back(p->value);

    TrainHistory history;
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> batch_labels;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t len = std::min<std::size_t>(config.batch_size, order.size() - start);
            std::span<const std::size_t> rows(order.data() + start, len);
            const RowMatrix<Scalar> x = gather_rows(train_set.inputs, rows);
            batch_labels.clear();
            for (auto r : rows) batch_labels.push_back(train_set.labels[r]);
            const Scalar loss = model.loss_and_gradient(x, batch_labels, true);
            if (!std::isfinite(static_cast<double>(loss)))
                throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                    std::to_string(start) + " (learning rate " + std::to_string(config.adam.learning_rate) + ")");
            optimizer.step(params);
            loss_sum += static_cast<double>(loss) * static_cast<double>(len);
            const auto& p = model.last_probabilities();
            for (std::size_t i = 0; i < len; ++i) {
                Eigen::Index arg = 0;
                p.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
                hits += arg == batch_labels[i];
            }
        }
        const auto [val_loss, val_acc] = evaluate(model, validation, std::max(config.batch_size, 64));
        if (!std::isfinite(val_loss)) throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(order.size());
        rec.val_loss = val_loss;
        rec.val_accuracy = val_acc;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        history.epochs.push_back(rec);
        log::info("epoch ", epoch, " loss ", rec.train_loss, " acc ", rec.train_accuracy, " val_loss ", val_loss, " val_acc ",
                  val_acc, " (", rec.seconds, " s)");

        const bool stop = stopper.update(val_loss);
        if (stopper.improved()) {
            history.best_epoch = epoch;
            for (std::size_t k = 0; k < params.size(); ++k) best[k] = params[k]->value;
        }
        if (stop) {
            history.early_stopped = true;
            break;
        }
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best[k];
    return history;
}

template <class Scalar>
TrainHistory train(CnnModel<Scalar>& model, const Dataset<Scalar>& data, const TrainConfig& config,
                   std::vector<std::size_t>* validation_rows)
{
    config.validate();
    auto [train_rows, val_rows] = stratified_holdout(data.labels, config.validation_fraction, config.seed);
    if (validation_rows) *validation_rows = val_rows;
    return train(model, data.subset(train_rows), data.subset(val_rows), config);
}

template <class Scalar>
Prediction<Scalar> predict(CnnModel<Scalar>& model, const RowMatrix<Scalar>& inputs, int batch_size)
{
    Prediction<Scalar> out;
    out.probabilities.resize(inputs.rows(), model.architecture().classes);
    for (Eigen::Index start = 0; start < inputs.rows(); start += batch_size) {
        const Eigen::Index len = std::min<Eigen::Index>(batch_size, inputs.rows() - start);
        out.probabilities.middleRows(start, len) = model.forward(inputs.middleRows(start, len), false);
    }
    out.labels = argmax_rows(out.probabilities.template cast<double>());
    return out;
}

template TrainHistory train(CnnModel<float>&, const Dataset<float>&, const Dataset<float>&, const TrainConfig&);
template TrainHistory train(CnnModel<double>&, const Dataset<double>&, const Dataset<double>&, const TrainConfig&);
template TrainHistory train(CnnModel<float>&, const Dataset<float>&, const TrainConfig&, std::vector<std::size_t>*);
template TrainHistory train(CnnModel<double>&, const Dataset<double>&, const TrainConfig&, std::vector<std::size_t>*);
template Prediction<float> predict(CnnModel<float>&, const RowMatrix<float>&, int);
template Prediction<double> predict(CnnModel<double>&, const RowMatrix<double>&, int);

}  // namespace g2d::nn
