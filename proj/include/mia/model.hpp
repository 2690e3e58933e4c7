#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mia/layers.hpp"

namespace mia {

/// Spatial extents of a volume, depth first.
struct Dims {
    std::size_t d = 64;
    std::size_t h = 224;
    std::size_t w = 224;

    friend bool operator==(const Dims&, const Dims&) = default;
};

inline constexpr Dims kDefaultInputDims{64, 224, 224};

/// Parses "DxHxW", e.g. "64x224x224".
Dims parse_dims(std::string_view text);
std::string dims_str(const Dims& dims);

enum class Variant : std::uint8_t { detection = 0, severity = 1 };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct ConvBlockSpec {
    std::size_t filters = 0;
    double l2_weight = 0.0;
    bool batchnorm = true;
    bool dropout = true;
};

/// Declarative block stack. The two factory functions reproduce the
/// default detection (6 conv blocks) and severity (4 conv blocks) networks;
/// every field may be edited afterwards for reduced-size experiments.
struct ModelSpec {
    Variant variant = Variant::detection;
    std::vector<ConvBlockSpec> conv_blocks;
    std::vector<std::size_t> fc_units;
    std::size_t output_classes = 2;
    Dims input_dims = kDefaultInputDims;
    std::size_t input_channels = 1;
    double l2_bias = Conv3dLayer<float>::kBiasL2;
    double dropout_rate = 0.5;
    BatchNormOptions batchnorm;

    static ModelSpec detection(Dims dims = kDefaultInputDims);
    /// Conv blocks are conv + pool only unless `block_bn_dropout` is set.
    static ModelSpec severity(Dims dims = kDefaultInputDims, bool block_bn_dropout = false);

    /// Spatial dims after each conv block; throws std::invalid_argument when
    /// a pooling step would see an extent below 2.
    std::vector<Dims> pooling_trail() const;
    void validate() const;
};

struct LayerSummary {
    std::string name;
    std::string kind;
    Shape output_shape;  // for a batch of one
    std::size_t parameters = 0;
};

/// Sequential network: conv blocks (conv, relu, maxpool, [batchnorm], [dropout]),
/// global average pooling, dense blocks (dense, relu, dropout), then the
/// output dense layer. forward() appends softmax.
template <typename T>
class Model {
public:
    /// Builds the layer stack and draws initial weights from `rng`.
    Model(ModelSpec spec, Rng& rng);
    /// Builds the layer stack with zero weights (BN at identity).
    explicit Model(ModelSpec spec);

    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const ModelSpec& spec() const noexcept { return spec_; }

    BasicTensor<T> forward_logits(const BasicTensor<T>& batch, Mode mode, Rng& rng);
    BasicTensor<T> forward(const BasicTensor<T>& batch, Mode mode, Rng& rng);
    /// Inference-mode probabilities.
    BasicTensor<T> predict(const BasicTensor<T>& batch);

    /// Backpropagates d(loss)/d(logits) and accumulates parameter gradients,
    /// including the L2 penalty terms. Requires a preceding training forward.
    void backward(const BasicTensor<T>& grad_logits);
    void zero_grad();

    /// Every persisted tensor, including BN running statistics, in layer order.
    const std::vector<Param<T>*>& parameters() const noexcept { return params_; }
    std::vector<Param<T>*> trainable_parameters() const;
    Param<T>* find(std::string_view name) const;

    /// Sum over parameters of l2 * ||value||^2.
    double l2_penalty() const;
    std::size_t trainable_parameter_count() const;

    const std::vector<std::unique_ptr<Layer<T>>>& layers() const noexcept { return layers_; }
    std::vector<LayerSummary> summary() const;

private:
    void build();
    void check_input(const BasicTensor<T>& batch) const;

    ModelSpec spec_;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
    std::vector<Param<T>*> params_;
};

extern template class Model<float>;
extern template class Model<double>;

Model<float> build_detection_model(Rng& rng, Dims input_dims = kDefaultInputDims);
Model<float> build_severity_model(Rng& rng, Dims input_dims = kDefaultInputDims);

}  // namespace mia
