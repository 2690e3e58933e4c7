#include <algorithm>
#include <stdexcept>

#include "mia/kernels.hpp"
#include "mia/layers.hpp"

namespace mia {

namespace {
template <typename T>
void check_dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const char* what) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0)) {
        throw std::invalid_argument(std::string(what) + ": cannot multiply " + shape_str(x.shape()) + " by " +
                                    shape_str(w.shape()));
    }
}
}  // namespace

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
    check_dense(x, w, "dense_forward");
    const std::size_t n = x.dim(0), fin = w.dim(0), fout = w.dim(1);
    if (b.size() != fout) throw std::invalid_argument("dense_forward: bias length must equal fan_out");
    BasicTensor<T> y({n, fout});
    for (std::size_t i = 0; i < n; ++i) {
        T* yr = y.raw() + i * fout;
        std::copy(b.raw(), b.raw() + fout, yr);
        for (std::size_t k = 0; k < fin; ++k) kernels::axpy(x[i * fin + k], w.raw() + k * fout, yr, fout);
    }
    return y;
}

template <typename T>
BasicTensor<T> dense_backward_input(const BasicTensor<T>& grad_y, const BasicTensor<T>& w) {
    if (grad_y.rank() != 2 || w.rank() != 2 || grad_y.dim(1) != w.dim(1)) {
        throw std::invalid_argument("dense_backward_input: shape mismatch");
    }
    const std::size_t n = grad_y.dim(0), fin = w.dim(0), fout = w.dim(1);
    BasicTensor<T> gx({n, fin});
    for (std::size_t i = 0; i < n; ++i) {
        const T* gy = grad_y.raw() + i * fout;
        for (std::size_t k = 0; k < fin; ++k) gx[i * fin + k] = kernels::dot(w.raw() + k * fout, gy, fout);
    }
    return gx;
}

template <typename T>
void dense_backward_params(const BasicTensor<T>& x, const BasicTensor<T>& grad_y, BasicTensor<T>& grad_w,
                           BasicTensor<T>& grad_b) {
    check_dense(x, grad_w, "dense_backward_params");
    const std::size_t n = x.dim(0), fin = grad_w.dim(0), fout = grad_w.dim(1);
    if (grad_y.shape() != Shape{n, fout} || grad_b.size() != fout) {
        throw std::invalid_argument("dense_backward_params: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const T* gy = grad_y.raw() + i * fout;
        for (std::size_t k = 0; k < fin; ++k) kernels::axpy(x[i * fin + k], gy, grad_w.raw() + k * fout, fout);
        for (std::size_t j = 0; j < fout; ++j) grad_b[j] += gy[j];
    }
}

template <typename T>
DenseLayer<T>::DenseLayer(std::string name, std::size_t fan_in, std::size_t fan_out) : name_(std::move(name)) {
    const Shape ws{fan_in, fan_out};
    weight_ = Param<T>{name_ + ".weight", BasicTensor<T>(ws), BasicTensor<T>(ws), true, 0.0};
    bias_ = Param<T>{name_ + ".bias", BasicTensor<T>({fan_out}), BasicTensor<T>({fan_out}), true, 0.0};
}

template <typename T>
void DenseLayer<T>::init(Rng& rng) {
    weight_.value = he_normal_init<T>(rng, weight_.value.shape(), fan_in());
    bias_.value.fill(T(0));
}

template <typename T>
Shape DenseLayer<T>::output_shape(const Shape& in) const {
    if (in.size() != 2 || in[1] != fan_in()) {
        throw std::invalid_argument(name_ + ": expected (N, " + std::to_string(fan_in()) + ") input, got " +
                                    shape_str(in));
    }
    return {in[0], fan_out()};
}

template <typename T>
BasicTensor<T> DenseLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    BasicTensor<T> y = dense_forward(x, weight_.value, bias_.value);
    if (mode == Mode::train) cached_input_ = x;
    else cached_input_.reset();
    return y;
}

template <typename T>
BasicTensor<T> DenseLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!cached_input_) throw std::logic_error(name_ + ": backward without a matching training forward");
    BasicTensor<T> x = std::move(*cached_input_);
    cached_input_.reset();
    dense_backward_params(x, grad_y, weight_.grad, bias_.grad);
    return dense_backward_input(grad_y, weight_.value);
}

#define MIA_INSTANTIATE(T)                                                                                   \
    template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> dense_backward_input(const BasicTensor<T>&, const BasicTensor<T>&);              \
    template void dense_backward_params(const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>&,       \
                                        BasicTensor<T>&);                                                    \
    template class DenseLayer<T>;

MIA_INSTANTIATE(float)
MIA_INSTANTIATE(double)
#undef MIA_INSTANTIATE

}  // namespace mia
