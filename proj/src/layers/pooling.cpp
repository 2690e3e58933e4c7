#include <stdexcept>

#include "mia/layers.hpp"

namespace mia {

Shape maxpool3d_output_shape(const Shape& in) {
    if (in.size() != 5) throw std::invalid_argument("maxpool3d: expected rank-5 input, got " + shape_str(in));
    for (std::size_t a = 2; a < 5; ++a) {
        if (in[a] < 2) {
            throw std::invalid_argument("maxpool3d: spatial extent < 2 in input " + shape_str(in));
        }
    }
    return {in[0], in[1], in[2] / 2, in[3] / 2, in[4] / 2};
}

template <typename T>
std::pair<BasicTensor<T>, PoolIndex> maxpool3d_forward(const BasicTensor<T>& x) {
    const Shape os = maxpool3d_output_shape(x.shape());
    const std::size_t D = x.dim(2), H = x.dim(3), W = x.dim(4);
    const std::size_t od = os[2], oh = os[3], ow = os[4];
    BasicTensor<T> y(os);
    PoolIndex index{x.shape(), std::vector<std::uint8_t>(y.size())};
    const std::size_t channels = x.dim(0) * x.dim(1);
    std::size_t out = 0;
    for (std::size_t nc = 0; nc < channels; ++nc) {
        const T* xv = x.raw() + nc * D * H * W;
        for (std::size_t d = 0; d < od; ++d) {
            for (std::size_t h = 0; h < oh; ++h) {
                for (std::size_t w = 0; w < ow; ++w, ++out) {
                    std::uint8_t best_k = 0;
                    T best = xv[(2 * d) * H * W + (2 * h) * W + 2 * w];
                    // Row-major scan of the window; strict > keeps the first maximum.
                    for (std::uint8_t k = 1; k < 8; ++k) {
                        const std::size_t dd = 2 * d + (k >> 2), hh = 2 * h + ((k >> 1) & 1), ww = 2 * w + (k & 1);
                        const T v = xv[dd * H * W + hh * W + ww];
                        if (v > best) {
                            best = v;
                            best_k = k;
                        }
                    }
                    y[out] = best;
                    index.argmax[out] = best_k;
                }
            }
        }
    }
    return {std::move(y), std::move(index)};
}

template <typename T>
BasicTensor<T> maxpool3d_backward(const BasicTensor<T>& grad_y, const PoolIndex& index) {
    const Shape os = maxpool3d_output_shape(index.input_shape);
    if (grad_y.shape() != os || index.argmax.size() != grad_y.size()) {
        throw std::invalid_argument("maxpool3d_backward: gradient shape does not match pooling state");
    }
    const std::size_t D = index.input_shape[2], H = index.input_shape[3], W = index.input_shape[4];
    BasicTensor<T> gx(index.input_shape);
    const std::size_t channels = os[0] * os[1];
    std::size_t out = 0;
    for (std::size_t nc = 0; nc < channels; ++nc) {
        T* gv = gx.raw() + nc * D * H * W;
        for (std::size_t d = 0; d < os[2]; ++d) {
            for (std::size_t h = 0; h < os[3]; ++h) {
                for (std::size_t w = 0; w < os[4]; ++w, ++out) {
                    const std::uint8_t k = index.argmax[out];
                    const std::size_t dd = 2 * d + (k >> 2), hh = 2 * h + ((k >> 1) & 1), ww = 2 * w + (k & 1);
                    gv[dd * H * W + hh * W + ww] += grad_y[out];
                }
            }
        }
    }
    return gx;
}

template <typename T>
BasicTensor<T> global_avg_pool3d_forward(const BasicTensor<T>& x) {
    if (x.rank() != 5) throw std::invalid_argument("global_avg_pool3d: expected rank-5 input");
    const std::size_t channels = x.dim(0) * x.dim(1);
    const std::size_t vol = x.dim(2) * x.dim(3) * x.dim(4);
    BasicTensor<T> y({x.dim(0), x.dim(1)});
    for (std::size_t nc = 0; nc < channels; ++nc) {
        double s = 0.0;
        const T* xv = x.raw() + nc * vol;
        for (std::size_t i = 0; i < vol; ++i) s += xv[i];
        y[nc] = static_cast<T>(s / static_cast<double>(vol));
    }
    return y;
}

template <typename T>
BasicTensor<T> global_avg_pool3d_backward(const BasicTensor<T>& grad_y, const Shape& input_shape) {
    if (input_shape.size() != 5 || grad_y.shape() != Shape{input_shape[0], input_shape[1]}) {
        throw std::invalid_argument("global_avg_pool3d_backward: shape mismatch");
    }
    const std::size_t vol = input_shape[2] * input_shape[3] * input_shape[4];
    BasicTensor<T> gx(input_shape);
    const T inv = static_cast<T>(1.0 / static_cast<double>(vol));
    for (std::size_t nc = 0; nc < grad_y.size(); ++nc) {
        const T g = grad_y[nc] * inv;
        T* gv = gx.raw() + nc * vol;
        for (std::size_t i = 0; i < vol; ++i) gv[i] = g;
    }
    return gx;
}

template <typename T>
BasicTensor<T> MaxPool3dLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    auto [y, index] = maxpool3d_forward(x);
    if (mode == Mode::train) index_ = std::move(index);
    else index_.reset();
    return std::move(y);
}

template <typename T>
BasicTensor<T> MaxPool3dLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!index_) throw std::logic_error(name_ + ": backward without a matching training forward");
    PoolIndex index = std::move(*index_);
    index_.reset();
    return maxpool3d_backward(grad_y, index);
}

template <typename T>
Shape GlobalAvgPool3dLayer<T>::output_shape(const Shape& in) const {
    if (in.size() != 5) throw std::invalid_argument(name_ + ": expected rank-5 input");
    return {in[0], in[1]};
}

template <typename T>
BasicTensor<T> GlobalAvgPool3dLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    BasicTensor<T> y = global_avg_pool3d_forward(x);
    if (mode == Mode::train) input_shape_ = x.shape();
    else input_shape_.reset();
    return y;
}

template <typename T>
BasicTensor<T> GlobalAvgPool3dLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!input_shape_) throw std::logic_error(name_ + ": backward without a matching training forward");
    Shape s = std::move(*input_shape_);
    input_shape_.reset();
    return global_avg_pool3d_backward(grad_y, s);
}

#define MIA_INSTANTIATE(T)                                                                             \
    template std::pair<BasicTensor<T>, PoolIndex> maxpool3d_forward(const BasicTensor<T>&);            \
    template BasicTensor<T> maxpool3d_backward(const BasicTensor<T>&, const PoolIndex&);               \
    template BasicTensor<T> global_avg_pool3d_forward(const BasicTensor<T>&);                          \
    template BasicTensor<T> global_avg_pool3d_backward(const BasicTensor<T>&, const Shape&);           \
    template class MaxPool3dLayer<T>;                                                                  \
    template class GlobalAvgPool3dLayer<T>;

MIA_INSTANTIATE(float)
MIA_INSTANTIATE(double)
#undef MIA_INSTANTIATE

}  // namespace mia
