#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mia/rng.hpp"
#include "mia/tensor.hpp"

namespace mia {

enum class Mode { train, infer };

/// A learnable (or persisted) tensor. `l2` is the factor of the
/// l2 * ||value||^2 penalty attached to it; zero means unregularized.
template <typename T>
struct Param {
    std::string name;
    BasicTensor<T> value;
    BasicTensor<T> grad;
    bool trainable = true;
    double l2 = 0.0;
};

/// Samples Normal(0, sqrt(2 / fan_in)).
template <typename T>
BasicTensor<T> he_normal_init(Rng& rng, Shape shape, std::size_t fan_in);

// ---------------------------------------------------------------------------
// Functional forms. Input tensors are rank 5 (N, C, D, H, W) unless noted.
// ---------------------------------------------------------------------------

/// Zero-padded "same" 3x3x3 convolution, stride 1. w: (C_out, C_in, 3, 3, 3), b: (C_out).
template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> conv3d_backward_input(const BasicTensor<T>& grad_y, const BasicTensor<T>& w);
/// Accumulates into grad_w and grad_b.
template <typename T>
void conv3d_backward_params(const BasicTensor<T>& x, const BasicTensor<T>& grad_y, BasicTensor<T>& grad_w,
                            BasicTensor<T>& grad_b);

struct PoolIndex {
    Shape input_shape;
    std::vector<std::uint8_t> argmax;  // window-local offset 0..7 per output element
};

/// Non-overlapping 2x2x2 max pooling; odd trailing extents are dropped.
template <typename T>
std::pair<BasicTensor<T>, PoolIndex> maxpool3d_forward(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> maxpool3d_backward(const BasicTensor<T>& grad_y, const PoolIndex& index);
Shape maxpool3d_output_shape(const Shape& in);

template <typename T>
BasicTensor<T> global_avg_pool3d_forward(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> global_avg_pool3d_backward(const BasicTensor<T>& grad_y, const Shape& input_shape);

/// y = x W + b with x: (N, fan_in), W: (fan_in, fan_out), b: (fan_out).
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b);
template <typename T>
BasicTensor<T> dense_backward_input(const BasicTensor<T>& grad_y, const BasicTensor<T>& w);
template <typename T>
void dense_backward_params(const BasicTensor<T>& x, const BasicTensor<T>& grad_y, BasicTensor<T>& grad_w,
                           BasicTensor<T>& grad_b);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);
/// Gradient passes where x > 0; zero at x == 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x);

/// Row-wise softmax of (N, K) logits with max subtraction.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

// ---------------------------------------------------------------------------
// Layers. forward() in training mode caches what backward() needs; backward()
// consumes that cache, so each backward must follow exactly one forward.
// Inference-mode forward leaves no cache.
// ---------------------------------------------------------------------------

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string_view kind() const = 0;
    virtual const std::string& name() const = 0;
    virtual Shape output_shape(const Shape& in) const = 0;
    virtual BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) = 0;
    virtual BasicTensor<T> backward(const BasicTensor<T>& grad_y) = 0;
    virtual std::vector<Param<T>*> params() { return {}; }
    virtual bool has_state() const = 0;
};

template <typename T>
class Conv3dLayer final : public Layer<T> {
public:
    static constexpr double kBiasL2 = 0.01;

    Conv3dLayer(std::string name, std::size_t in_channels, std::size_t out_channels, double l2_weight,
                double l2_bias = kBiasL2);

    void init(Rng& rng);
    std::string_view kind() const override { return "conv3d"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    /// Adds 2*l2*param to the parameter gradients on top of the data term.
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
    bool has_state() const override { return cached_input_.has_value(); }

    std::size_t in_channels() const { return weight_.value.dim(1); }
    std::size_t out_channels() const { return weight_.value.dim(0); }
    double l2_weight() const { return weight_.l2; }
    double l2_bias() const { return bias_.l2; }
    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }

private:
    std::string name_;
    Param<T> weight_;
    Param<T> bias_;
    std::optional<BasicTensor<T>> cached_input_;
};

template <typename T>
class ReluLayer final : public Layer<T> {
public:
    explicit ReluLayer(std::string name) : name_(std::move(name)) {}
    std::string_view kind() const override { return "relu"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return in; }
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    bool has_state() const override { return cached_input_.has_value(); }

private:
    std::string name_;
    std::optional<BasicTensor<T>> cached_input_;
};

template <typename T>
class MaxPool3dLayer final : public Layer<T> {
public:
    explicit MaxPool3dLayer(std::string name) : name_(std::move(name)) {}
    std::string_view kind() const override { return "maxpool3d"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return maxpool3d_output_shape(in); }
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    bool has_state() const override { return index_.has_value(); }

private:
    std::string name_;
    std::optional<PoolIndex> index_;
};

struct BatchNormOptions {
    double momentum = 0.99;
    double epsilon = 1e-5;
};

/// Per-channel normalization over every axis except axis 1. Training mode
/// normalizes with batch statistics and updates the running statistics:
///   running <- momentum * running + (1 - momentum) * batch
/// When a channel has a single element per batch the batch variance is
/// undefined; the layer then normalizes with the running statistics and
/// leaves them untouched.
template <typename T>
class BatchNormLayer final : public Layer<T> {
public:
    BatchNormLayer(std::string name, std::size_t channels, BatchNormOptions options = {});

    std::string_view kind() const override { return "batchnorm"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    std::vector<Param<T>*> params() override { return {&gamma_, &beta_, &running_mean_, &running_var_}; }
    bool has_state() const override { return state_.has_value(); }

    std::size_t channels() const { return gamma_.value.size(); }
    const BatchNormOptions& options() const { return options_; }
    Param<T>& gamma() { return gamma_; }
    Param<T>& beta() { return beta_; }
    Param<T>& running_mean() { return running_mean_; }
    Param<T>& running_var() { return running_var_; }

private:
    struct State {
        BasicTensor<T> xhat;
        std::vector<T> inv_std;
        bool batch_stats = true;
    };

    std::string name_;
    BatchNormOptions options_;
    Param<T> gamma_;
    Param<T> beta_;
    Param<T> running_mean_;
    Param<T> running_var_;
    std::optional<State> state_;
};

/// Inverted elementwise dropout.
template <typename T>
class DropoutLayer final : public Layer<T> {
public:
    DropoutLayer(std::string name, double rate);
    std::string_view kind() const override { return "dropout"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override { return in; }
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    bool has_state() const override { return mask_.has_value(); }
    double rate() const { return rate_; }

private:
    std::string name_;
    double rate_;
    std::optional<std::vector<T>> mask_;  // 0 or 1/(1-rate)
};

template <typename T>
class GlobalAvgPool3dLayer final : public Layer<T> {
public:
    explicit GlobalAvgPool3dLayer(std::string name) : name_(std::move(name)) {}
    std::string_view kind() const override { return "global_avg_pool3d"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    bool has_state() const override { return input_shape_.has_value(); }

private:
    std::string name_;
    std::optional<Shape> input_shape_;
};

template <typename T>
class DenseLayer final : public Layer<T> {
public:
    DenseLayer(std::string name, std::size_t fan_in, std::size_t fan_out);

    void init(Rng& rng);
    std::string_view kind() const override { return "dense"; }
    const std::string& name() const override { return name_; }
    Shape output_shape(const Shape& in) const override;
    BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode, Rng& rng) override;
    BasicTensor<T> backward(const BasicTensor<T>& grad_y) override;
    std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
    bool has_state() const override { return cached_input_.has_value(); }

    std::size_t fan_in() const { return weight_.value.dim(0); }
    std::size_t fan_out() const { return weight_.value.dim(1); }
    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }

private:
    std::string name_;
    Param<T> weight_;
    Param<T> bias_;
    std::optional<BasicTensor<T>> cached_input_;
};

}  // namespace mia
