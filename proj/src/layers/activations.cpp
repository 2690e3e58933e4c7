#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mia/layers.hpp"

namespace mia {

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
    BasicTensor<T> y = x;
    for (auto& v : y.data()) v = v > T(0) ? v : T(0);
    return y;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_y, const BasicTensor<T>& x) {
    if (grad_y.shape() != x.shape()) throw std::invalid_argument("relu_backward: shape mismatch");
    BasicTensor<T> gx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T(0) ? grad_y[i] : T(0);
    return gx;
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
    if (logits.rank() != 2 || logits.dim(1) < 2) {
        throw std::invalid_argument("softmax: expected (N, K) logits with K >= 2, got " + shape_str(logits.shape()));
    }
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    BasicTensor<T> y(logits.shape());
    for (std::size_t i = 0; i < n; ++i) {
        const T* row = logits.raw() + i * k;
        T* out = y.raw() + i * k;
        const T m = *std::max_element(row, row + k);
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(row[j] - m));
        for (std::size_t j = 0; j < k; ++j) out[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - m)) / z);
    }
    return y;
}

template <typename T>
BasicTensor<T> ReluLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    if (mode == Mode::train) cached_input_ = x;
    else cached_input_.reset();
    return relu_forward(x);
}

template <typename T>
BasicTensor<T> ReluLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!cached_input_) throw std::logic_error(name_ + ": backward without a matching training forward");
    BasicTensor<T> x = std::move(*cached_input_);
    cached_input_.reset();
    return relu_backward(grad_y, x);
}

template <typename T>
DropoutLayer<T>::DropoutLayer(std::string name, double rate) : name_(std::move(name)), rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
}

template <typename T>
BasicTensor<T> DropoutLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng& rng) {
    if (mode == Mode::infer) {
        mask_.reset();
        return x;
    }
    std::vector<T> mask(x.size(), T(1));
    if (rate_ > 0.0) {
        const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
        for (auto& m : mask) m = rng.uniform01() < rate_ ? T(0) : keep_scale;
    }
    BasicTensor<T> y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= mask[i];
    mask_ = std::move(mask);
    return y;
}

template <typename T>
BasicTensor<T> DropoutLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!mask_) throw std::logic_error(name_ + ": backward without a matching training forward");
    std::vector<T> mask = std::move(*mask_);
    mask_.reset();
    if (mask.size() != grad_y.size()) throw std::invalid_argument(name_ + ": gradient size mismatch");
    BasicTensor<T> gx = grad_y;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= mask[i];
    return gx;
}

#define MIA_INSTANTIATE(T)                                                                  \
    template BasicTensor<T> relu_forward(const BasicTensor<T>&);                            \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);    \
    template BasicTensor<T> softmax(const BasicTensor<T>&);                                 \
    template class ReluLayer<T>;                                                            \
    template class DropoutLayer<T>;

MIA_INSTANTIATE(float)
MIA_INSTANTIATE(double)
#undef MIA_INSTANTIATE

}  // namespace mia
