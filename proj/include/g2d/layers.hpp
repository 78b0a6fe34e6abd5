#pragma once

#include "g2d/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace g2d::nn {

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using RowMap = Eigen::Map<RowMatrix<Scalar>>;
template <class Scalar>
using ConstRowMap = Eigen::Map<const RowMatrix<Scalar>>;

/// Channels x height x width of one sample; samples are stored as rows of a
/// batch matrix in this order.
struct Shape3 {
    int channels = 0;
    int height = 0;
    int width = 0;

    Eigen::Index size() const { return static_cast<Eigen::Index>(channels) * height * width; }
    Eigen::Index plane() const { return static_cast<Eigen::Index>(height) * width; }
    bool operator==(const Shape3&) const = default;
};

struct Padding {
    int top = 0, left = 0, bottom = 0, right = 0;

    /// Output keeps the input size; even kernels put the extra row/column at the bottom/right.
    static Padding same(int kernel)
    {
        const int t = (kernel - 1) / 2;
        return {t, t, kernel - 1 - t, kernel - 1 - t};
    }
    static Padding valid() { return {}; }
};

/// Dense tensor with an explicit shape and row-major storage.
template <class Scalar>
struct Tensor {
    std::vector<int> shape;
    std::vector<Scalar> data;

    std::size_t size() const { return data.size(); }
};

/// Glorot-uniform draws in +-sqrt(6 / (fan_in + fan_out)). Rank-2 shapes are
/// {fan_in, fan_out}; rank-4 shapes are {out_channels, in_channels, kh, kw}.
template <class Scalar>
Tensor<Scalar> xavier_init(std::span<const int> shape, std::uint64_t seed)
{
    long long fan_in = 0, fan_out = 0, n = 1;
    for (int d : shape) {
        if (d < 1) throw ConfigError("xavier_init: nonpositive dimension");
        n *= d;
    }
    if (shape.size() == 2) {
        fan_in = shape[0];
        fan_out = shape[1];
    } else if (shape.size() == 4) {
        const long long receptive = static_cast<long long>(shape[2]) * shape[3];
        fan_in = shape[1] * receptive;
        fan_out = shape[0] * receptive;
    } else {
        throw ConfigError("xavier_init: shape must have rank 2 or 4");
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor<Scalar> t;
    t.shape.assign(shape.begin(), shape.end());
    t.data.resize(static_cast<std::size_t>(n));
    for (auto& x : t.data) x = static_cast<Scalar>(u(rng));
    return t;
}

template <class Scalar>
struct Parameter {
    RowMatrix<Scalar> value;
    RowMatrix<Scalar> grad;

    void resize(Eigen::Index rows, Eigen::Index cols)
    {
        value = RowMatrix<Scalar>::Zero(rows, cols);
        grad = RowMatrix<Scalar>::Zero(rows, cols);
    }
    void zero_grad() { grad.setZero(); }
};

// ---------------------------------------------------------------------------
// Convolution

inline Shape3 conv_output_shape(Shape3 in, int out_channels, int kernel, Padding pad)
{
    return {out_channels, in.height + pad.top + pad.bottom - kernel + 1, in.width + pad.left + pad.right - kernel + 1};
}

/// Unfolds one C x H x W sample into a (C*k*k) x (out_h*out_w) matrix; row
/// index is (c*k + ki)*k + kj.
template <class Scalar>
void im2col(const Scalar* input, Shape3 in, int kernel, Padding pad, Scalar* col)
{
    const Shape3 out = conv_output_shape(in, 1, kernel, pad);
    const int oh = out.height, ow = out.width;
    for (int c = 0; c < in.channels; ++c) {
        const Scalar* plane = input + static_cast<Eigen::Index>(c) * in.plane();
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
                Scalar* row = col + ((static_cast<Eigen::Index>(c) * kernel + ki) * kernel + kj) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy + ki - pad.top;
                    Scalar* dst = row + static_cast<Eigen::Index>(oy) * ow;
                    if (iy < 0 || iy >= in.height) {
                        std::fill(dst, dst + ow, Scalar(0));
                        continue;
                    }
                    const Scalar* src = plane + static_cast<Eigen::Index>(iy) * in.width;
                    const int x0 = kj - pad.left;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox + x0;
                        dst[ox] = (ix >= 0 && ix < in.width) ? src[ix] : Scalar(0);
                    }
                }
            }
        }
    }
}

/// Adjoint of im2col: accumulates columns back into a C x H x W gradient.
template <class Scalar>
void col2im(const Scalar* col, Shape3 in, int kernel, Padding pad, Scalar* grad_input)
{
    const Shape3 out = conv_output_shape(in, 1, kernel, pad);
    const int oh = out.height, ow = out.width;
    for (int c = 0; c < in.channels; ++c) {
        Scalar* plane = grad_input + static_cast<Eigen::Index>(c) * in.plane();
        for (int ki = 0; ki < kernel; ++ki) {
            for (int kj = 0; kj < kernel; ++kj) {
                const Scalar* row = col + ((static_cast<Eigen::Index>(c) * kernel + ki) * kernel + kj) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy + ki - pad.top;
                    if (iy < 0 || iy >= in.height) continue;
                    Scalar* dst = plane + static_cast<Eigen::Index>(iy) * in.width;
                    const Scalar* src = row + static_cast<Eigen::Index>(oy) * ow;
                    const int x0 = kj - pad.left;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox + x0;
                        if (ix >= 0 && ix < in.width) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
}

/// Stride-1 2D cross-correlation with bias. Weights are out x (in*k*k).
template <class Scalar>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_channels, int out_channels, int kernel, Padding pad)
        : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), pad_(pad)
    {
        if (in_channels < 1 || out_channels < 1 || kernel < 1) throw ConfigError("invalid convolution geometry");
        weight.resize(out_channels, static_cast<Eigen::Index>(in_channels) * kernel * kernel);
        bias.resize(out_channels, 1);
    }

    int kernel() const { return kernel_; }
    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    Padding padding() const { return pad_; }

    Shape3 output_shape(Shape3 in) const
    {
        if (in.channels != in_channels_) throw ConfigError("convolution input channel mismatch");
        const Shape3 out = conv_output_shape(in, out_channels_, kernel_, pad_);
        if (out.height < 1 || out.width < 1) throw ConfigError("filter larger than padded input");
        return out;
    }

    void initialize(std::uint64_t seed)
    {
        const int shape[4] = {out_channels_, in_channels_, kernel_, kernel_};
        const auto t = xavier_init<Scalar>(shape, seed);
        std::copy(t.data.begin(), t.data.end(), weight.value.data());
        bias.value.setZero();
    }

    /// in: B x in.size(); out: B x output_shape(in).size().
    void forward(const RowMatrix<Scalar>& in, Shape3 shape, RowMatrix<Scalar>& out)
    {
        const Shape3 os = output_shape(shape);
        if (in.cols() != shape.size()) throw ConfigError("convolution input width mismatch");
        out.resize(in.rows(), os.size());
        col_.resize(weight.value.cols(), os.plane());
        for (Eigen::Index b = 0; b < in.rows(); ++b) {
            im2col(in.row(b).data(), shape, kernel_, pad_, col_.data());
            RowMap<Scalar> y(out.row(b).data(), out_channels_, os.plane());
            y.noalias() = weight.value * col_;
            y.colwise() += bias.value.col(0);
        }
    }

    /// Accumulates weight/bias gradients; writes the input gradient when grad_in is non-null.
    void backward(const RowMatrix<Scalar>& in, Shape3 shape, const RowMatrix<Scalar>& grad_out, RowMatrix<Scalar>* grad_in)
    {
        const Shape3 os = output_shape(shape);
        col_.resize(weight.value.cols(), os.plane());
        if (grad_in) grad_in->setZero(in.rows(), shape.size());
        for (Eigen::Index b = 0; b < in.rows(); ++b) {
            im2col(in.row(b).data(), shape, kernel_, pad_, col_.data());
            ConstRowMap<Scalar> dy(grad_out.row(b).data(), out_channels_, os.plane());
            weight.grad.noalias() += dy * col_.transpose();
            bias.grad.col(0) += dy.rowwise().sum();
            if (grad_in) {
                dcol_.noalias() = weight.value.transpose() * dy;
                col2im(dcol_.data(), shape, kernel_, pad_, grad_in->row(b).data());
            }
        }
    }

    Parameter<Scalar> weight;
    Parameter<Scalar> bias;

private:
    int in_channels_ = 0, out_channels_ = 0, kernel_ = 1;
    Padding pad_;
    RowMatrix<Scalar> col_, dcol_;
};

// ---------------------------------------------------------------------------
// Pooling, activation, dropout

inline Shape3 maxpool_output_shape(Shape3 in)
{
    return {in.channels, in.height / 2, in.width / 2};
}

/// 2x2 max pooling with stride 2; trailing odd rows/columns are dropped.
/// argmax receives, per output element, the flat input index of the winner
/// (first occurrence in row-major block order on ties).
template <class Scalar>
void maxpool_2x2_forward(const RowMatrix<Scalar>& in, Shape3 shape, RowMatrix<Scalar>& out, std::vector<std::int32_t>& argmax)
{
    if (shape.height < 2 || shape.width < 2) throw ConfigError("max pooling needs H, W >= 2");
    const Shape3 os = maxpool_output_shape(shape);
    out.resize(in.rows(), os.size());
    argmax.resize(static_cast<std::size_t>(in.rows() * os.size()));
    for (Eigen::Index b = 0; b < in.rows(); ++b) {
        const Scalar* x = in.row(b).data();
        Scalar* y = out.row(b).data();
        std::int32_t* a = argmax.data() + b * os.size();
        for (int c = 0; c < shape.channels; ++c) {
            for (int oy = 0; oy < os.height; ++oy) {
                for (int ox = 0; ox < os.width; ++ox) {
                    const std::int32_t base = static_cast<std::int32_t>((c * shape.height + 2 * oy) * shape.width + 2 * ox);
                    const std::int32_t cand[4] = {base, base + 1, base + shape.width, base + shape.width + 1};
                    std::int32_t best = cand[0];
                    for (int k = 1; k < 4; ++k)
                        if (x[cand[k]] > x[best]) best = cand[k];
                    const Eigen::Index o = (static_cast<Eigen::Index>(c) * os.height + oy) * os.width + ox;
                    y[o] = x[best];
                    a[o] = best;
                }
            }
        }
    }
}

template <class Scalar>
void maxpool_2x2_backward(const RowMatrix<Scalar>& grad_out, const std::vector<std::int32_t>& argmax, Shape3 in_shape,
                          RowMatrix<Scalar>& grad_in)
{
    grad_in.setZero(grad_out.rows(), in_shape.size());
    const Eigen::Index n = grad_out.cols();
    for (Eigen::Index b = 0; b < grad_out.rows(); ++b) {
        const std::int32_t* a = argmax.data() + b * n;
        for (Eigen::Index o = 0; o < n; ++o) grad_in(b, a[o]) += grad_out(b, o);
    }
}

template <class Scalar>
void relu_inplace(RowMatrix<Scalar>& x)
{
    x = x.cwiseMax(Scalar(0));
}

/// grad *= (activation > 0), with `activation` the ReLU output.
template <class Scalar>
void relu_backward_inplace(const RowMatrix<Scalar>& activation, RowMatrix<Scalar>& grad)
{
    grad = (activation.array() > Scalar(0)).select(grad, Scalar(0));
}

/// Inverted dropout: kept units are scaled by 1/(1-rate) so inference needs no mask.
template <class Scalar, class Rng>
void dropout_forward(RowMatrix<Scalar>& x, double rate, Rng& rng, RowMatrix<Scalar>& mask)
{
    mask.resize(x.rows(), x.cols());
    if (rate <= 0.0) {
        mask.setOnes();
        return;
    }
    std::bernoulli_distribution keep(1.0 - rate);
    const Scalar scale = static_cast<Scalar>(1.0 / (1.0 - rate));
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : Scalar(0);
    x.array() *= mask.array();
}

template <class Scalar>
void dropout_backward_inplace(const RowMatrix<Scalar>& mask, RowMatrix<Scalar>& grad)
{
    grad.array() *= mask.array();
}

// ---------------------------------------------------------------------------
// Dense and output

/// y = x W + b, W is in x out.
template <class Scalar>
class Dense {
public:
    Dense() = default;
    Dense(int in, int out)
    {
        if (in < 1 || out < 1) throw ConfigError("invalid dense layer size");
        weight.resize(in, out);
        bias.resize(1, out);
    }
    int in_features() const { return static_cast<int>(weight.value.rows()); }
    int out_features() const { return static_cast<int>(weight.value.cols()); }

    void initialize(std::uint64_t seed)
    {
        const int shape[2] = {in_features(), out_features()};
        const auto t = xavier_init<Scalar>(shape, seed);
        std::copy(t.data.begin(), t.data.end(), weight.value.data());
        bias.value.setZero();
    }

    void forward(const RowMatrix<Scalar>& in, RowMatrix<Scalar>& out) const
    {
        if (in.cols() != weight.value.rows()) throw ConfigError("dense input width mismatch");
        out.noalias() = in * weight.value;
        out.rowwise() += bias.value.row(0);
    }

    void backward(const RowMatrix<Scalar>& in, const RowMatrix<Scalar>& grad_out, RowMatrix<Scalar>* grad_in)
    {
        weight.grad.noalias() += in.transpose() * grad_out;
        bias.grad.row(0) += grad_out.colwise().sum();
        if (grad_in) grad_in->noalias() = grad_out * weight.value.transpose();
    }

    Parameter<Scalar> weight;
    Parameter<Scalar> bias;
};

template <class Scalar>
RowMatrix<Scalar> softmax_rows(const RowMatrix<Scalar>& logits)
{
    RowMatrix<Scalar> p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

/// Mean categorical cross-entropy of softmax(logits); writes d loss / d logits.
template <class Scalar>
Scalar softmax_cross_entropy(const RowMatrix<Scalar>& logits, std::span<const int> labels, RowMatrix<Scalar>* probabilities,
                             RowMatrix<Scalar>* grad_logits)
{
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) throw ConfigError("label count != batch size");
    const Eigen::Index n = logits.rows();
    RowMatrix<Scalar> shifted = logits.colwise() - logits.rowwise().maxCoeff();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> log_z = shifted.array().exp().rowwise().sum().log();
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || y >= logits.cols()) throw ConfigError("label outside [0, classes)");
        loss += log_z[i] - shifted(i, y);
    }
    RowMatrix<Scalar> p = (shifted.colwise() - log_z).array().exp();
    if (grad_logits) {
        *grad_logits = p;
        for (Eigen::Index i = 0; i < n; ++i) (*grad_logits)(i, labels[i]) -= Scalar(1);
        *grad_logits /= static_cast<Scalar>(n);
    }
    if (probabilities) *probabilities = std::move(p);
    return loss / static_cast<Scalar>(n);
}

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias correction folded into the step size.
template <class Scalar>
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    void step(const std::vector<Parameter<Scalar>*>& params)
    {
        if (m_.size() != params.size()) {
            m_.clear();
            v_.clear();
            for (auto* p : params) {
                m_.push_back(RowMatrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
                v_.push_back(RowMatrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
            }
        }
        ++t_;
        const double lr_t = config_.learning_rate * std::sqrt(1.0 - std::pow(config_.beta2, t_)) /
                            (1.0 - std::pow(config_.beta1, t_));
        const auto b1 = static_cast<Scalar>(config_.beta1), b2 = static_cast<Scalar>(config_.beta2);
        const auto lr = static_cast<Scalar>(lr_t), eps = static_cast<Scalar>(config_.epsilon);
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& g = params[k]->grad;
            m_[k] = b1 * m_[k] + (Scalar(1) - b1) * g;
            v_[k] = b2 * v_[k] + (Scalar(1) - b2) * g.cwiseProduct(g);
            params[k]->value.array() -= lr * m_[k].array() / (v_[k].array().sqrt() + eps);
        }
    }

    long long steps() const { return t_; }

private:
    AdamConfig config_;
    std::vector<RowMatrix<Scalar>> m_, v_;
    long long t_ = 0;
};

}  // namespace g2d::nn
