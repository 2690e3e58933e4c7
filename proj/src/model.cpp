#include "mia/model.hpp"

#include <charconv>
#include <stdexcept>

namespace mia {

Dims parse_dims(std::string_view text) {
    std::size_t v[3];
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 3; ++i) {
        auto [next, ec] = std::from_chars(p, end, v[i]);
        if (ec != std::errc() || v[i] == 0) throw std::invalid_argument("bad dims '" + std::string(text) + "'");
        p = next;
        if (i < 2) {
            if (p == end || (*p != 'x' && *p != 'X')) {
                throw std::invalid_argument("bad dims '" + std::string(text) + "', expected DxHxW");
            }
            ++p;
        }
    }
    if (p != end) throw std::invalid_argument("bad dims '" + std::string(text) + "', expected DxHxW");
    return {v[0], v[1], v[2]};
}

std::string dims_str(const Dims& d) {
    return std::to_string(d.d) + "x" + std::to_string(d.h) + "x" + std::to_string(d.w);
}

std::string_view variant_name(Variant v) { return v == Variant::detection ? "detection" : "severity"; }

Variant parse_variant(std::string_view name) {
    if (name == "detection") return Variant::detection;
    if (name == "severity") return Variant::severity;
    throw std::invalid_argument("unknown task '" + std::string(name) + "' (expected detection or severity)");
}

ModelSpec ModelSpec::detection(Dims dims) {
    ModelSpec s;
    s.variant = Variant::detection;
    s.conv_blocks = {{64, 0.01, true, true},  {64, 0.01, true, true},  {128, 0.05, true, true},
                     {128, 0.05, true, true}, {256, 0.05, true, true}, {256, 0.05, true, true}};
    s.fc_units = {1024, 512};
    s.output_classes = 2;
    s.input_dims = dims;
    return s;
}

ModelSpec ModelSpec::severity(Dims dims, bool block_bn_dropout) {
    ModelSpec s;
    s.variant = Variant::severity;
    s.conv_blocks = {{64, 0.05, block_bn_dropout, block_bn_dropout},
                     {64, 0.05, block_bn_dropout, block_bn_dropout},
                     {128, 0.10, block_bn_dropout, block_bn_dropout},
                     {256, 0.10, block_bn_dropout, block_bn_dropout}};
    s.fc_units = {1024, 512};
    s.output_classes = 4;
    s.input_dims = dims;
    return s;
}

std::vector<Dims> ModelSpec::pooling_trail() const {
    std::vector<Dims> trail;
    Dims cur = input_dims;
    for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
        if (cur.d < 2 || cur.h < 2 || cur.w < 2) {
            throw std::invalid_argument("pooling trail collapses at block " + std::to_string(i + 1) + ": input " +
                                        dims_str(cur) + " has an extent below 2");
        }
        cur = {cur.d / 2, cur.h / 2, cur.w / 2};
        trail.push_back(cur);
    }
    return trail;
}

void ModelSpec::validate() const {
    if (input_channels < 1) throw std::invalid_argument("model needs at least one input channel");
    if (output_classes < 2) throw std::invalid_argument("model needs at least two output classes");
    if (input_dims.d < 1 || input_dims.h < 1 || input_dims.w < 1) throw std::invalid_argument("empty input dims");
    for (const auto& b : conv_blocks) {
        if (b.filters < 1) throw std::invalid_argument("conv block with zero filters");
        if (b.l2_weight < 0) throw std::invalid_argument("negative L2 factor");
    }
    for (auto u : fc_units) {
        if (u < 1) throw std::invalid_argument("dense block with zero units");
    }
    if (!(dropout_rate >= 0 && dropout_rate < 1)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    pooling_trail();
}

template <typename T>
Model<T>::Model(ModelSpec spec) : spec_(std::move(spec)) {
    build();
}

template <typename T>
Model<T>::Model(ModelSpec spec, Rng& rng) : spec_(std::move(spec)) {
    build();
    for (auto& layer : layers_) {
        if (auto* conv = dynamic_cast<Conv3dLayer<T>*>(layer.get())) conv->init(rng);
        if (auto* dense = dynamic_cast<DenseLayer<T>*>(layer.get())) dense->init(rng);
    }
}

template <typename T>
void Model<T>::build() {
    spec_.validate();
    std::size_t channels = spec_.input_channels;
    for (std::size_t i = 0; i < spec_.conv_blocks.size(); ++i) {
        const auto& b = spec_.conv_blocks[i];
        const std::string p = "block" + std::to_string(i + 1);
        layers_.push_back(std::make_unique<Conv3dLayer<T>>(p + ".conv", channels, b.filters, b.l2_weight, spec_.l2_bias));
        layers_.push_back(std::make_unique<ReluLayer<T>>(p + ".relu"));
        layers_.push_back(std::make_unique<MaxPool3dLayer<T>>(p + ".pool"));
        if (b.batchnorm) layers_.push_back(std::make_unique<BatchNormLayer<T>>(p + ".bn", b.filters, spec_.batchnorm));
        if (b.dropout) layers_.push_back(std::make_unique<DropoutLayer<T>>(p + ".dropout", spec_.dropout_rate));
        channels = b.filters;
    }
    layers_.push_back(std::make_unique<GlobalAvgPool3dLayer<T>>("gap"));
    for (std::size_t j = 0; j < spec_.fc_units.size(); ++j) {
        const std::string p = "fc" + std::to_string(j + 1);
        layers_.push_back(std::make_unique<DenseLayer<T>>(p, channels, spec_.fc_units[j]));
        layers_.push_back(std::make_unique<ReluLayer<T>>(p + ".relu"));
        layers_.push_back(std::make_unique<DropoutLayer<T>>(p + ".dropout", spec_.dropout_rate));
        channels = spec_.fc_units[j];
    }
    layers_.push_back(std::make_unique<DenseLayer<T>>("out", channels, spec_.output_classes));
    for (auto& layer : layers_) {
        for (Param<T>* p : layer->params()) params_.push_back(p);
    }
}

template <typename T>
void Model<T>::check_input(const BasicTensor<T>& batch) const {
    const Shape expected{spec_.input_channels, spec_.input_dims.d, spec_.input_dims.h, spec_.input_dims.w};
    if (batch.rank() != 5 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
        throw std::invalid_argument("model expects input (N," + std::to_string(spec_.input_channels) + "," +
                                    std::to_string(spec_.input_dims.d) + "," + std::to_string(spec_.input_dims.h) +
                                    "," + std::to_string(spec_.input_dims.w) + "), got " +
                                    shape_str(batch.shape()));
    }
}

template <typename T>
BasicTensor<T> Model<T>::forward_logits(const BasicTensor<T>& batch, Mode mode, Rng& rng) {
    check_input(batch);
    BasicTensor<T> x = batch;
    for (auto& layer : layers_) x = layer->forward(x, mode, rng);
    return x;
}

template <typename T>
BasicTensor<T> Model<T>::forward(const BasicTensor<T>& batch, Mode mode, Rng& rng) {
    return softmax(forward_logits(batch, mode, rng));
}

template <typename T>
BasicTensor<T> Model<T>::predict(const BasicTensor<T>& batch) {
    Rng unused(0);
    return forward(batch, Mode::infer, unused);
}

template <typename T>
void Model<T>::backward(const BasicTensor<T>& grad_logits) {
    for (const auto& layer : layers_) {
        if (!layer->has_state()) throw std::logic_error("model backward requires a preceding training forward");
    }
    BasicTensor<T> g = grad_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

template <typename T>
void Model<T>::zero_grad() {
    for (Param<T>* p : params_) p->grad.fill(T(0));
}

template <typename T>
std::vector<Param<T>*> Model<T>::trainable_parameters() const {
    std::vector<Param<T>*> out;
    for (Param<T>* p : params_) {
        if (p->trainable) out.push_back(p);
    }
    return out;
}

template <typename T>
Param<T>* Model<T>::find(std::string_view name) const {
    for (Param<T>* p : params_) {
        if (p->name == name) return p;
    }
    return nullptr;
}

template <typename T>
double Model<T>::l2_penalty() const {
    double total = 0.0;
    for (const Param<T>* p : params_) {
        if (p->l2 == 0.0) continue;
        double sq = 0.0;
        for (T v : p->value.data()) sq += static_cast<double>(v) * v;
        total += p->l2 * sq;
    }
    return total;
}

template <typename T>
std::size_t Model<T>::trainable_parameter_count() const {
    std::size_t n = 0;
    for (const Param<T>* p : params_) {
        if (p->trainable) n += p->value.size();
    }
    return n;
}

template <typename T>
std::vector<LayerSummary> Model<T>::summary() const {
    std::vector<LayerSummary> out;
    Shape s{1, spec_.input_channels, spec_.input_dims.d, spec_.input_dims.h, spec_.input_dims.w};
    for (const auto& layer : layers_) {
        s = layer->output_shape(s);
        std::size_t n = 0;
        for (Param<T>* p : layer->params()) {
            if (p->trainable) n += p->value.size();
        }
        out.push_back({layer->name(), std::string(layer->kind()), s, n});
    }
    return out;
}

template class Model<float>;
template class Model<double>;

Model<float> build_detection_model(Rng& rng, Dims input_dims) {
    return Model<float>(ModelSpec::detection(input_dims), rng);
}

Model<float> build_severity_model(Rng& rng, Dims input_dims) {
    return Model<float>(ModelSpec::severity(input_dims), rng);
}

}  // namespace mia
