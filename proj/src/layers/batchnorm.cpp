#include <cmath>
#include <stdexcept>

#include "mia/layers.hpp"

namespace mia {

template <typename T>
BatchNormLayer<T>::BatchNormLayer(std::string name, std::size_t channels, BatchNormOptions options)
    : name_(std::move(name)), options_(options) {
    if (!(options.epsilon > 0.0)) throw std::invalid_argument("batchnorm epsilon must be positive");
    if (!(options.momentum >= 0.0 && options.momentum <= 1.0)) {
        throw std::invalid_argument("batchnorm momentum must be in [0, 1]");
    }
    const Shape s{channels};
    gamma_ = Param<T>{name_ + ".gamma", BasicTensor<T>(s, T(1)), BasicTensor<T>(s), true, 0.0};
    beta_ = Param<T>{name_ + ".beta", BasicTensor<T>(s), BasicTensor<T>(s), true, 0.0};
    running_mean_ = Param<T>{name_ + ".running_mean", BasicTensor<T>(s), BasicTensor<T>(s), false, 0.0};
    running_var_ = Param<T>{name_ + ".running_var", BasicTensor<T>(s, T(1)), BasicTensor<T>(s), false, 0.0};
}

template <typename T>
Shape BatchNormLayer<T>::output_shape(const Shape& in) const {
    if (in.size() < 2 || in[1] != channels()) {
        throw std::invalid_argument(name_ + ": expected " + std::to_string(channels()) + " channels on axis 1, got " +
                                    shape_str(in));
    }
    return in;
}

template <typename T>
BasicTensor<T> BatchNormLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    output_shape(x.shape());
    const std::size_t n = x.dim(0), c = channels();
    const std::size_t inner = x.size() / (n * c);
    const std::size_t count = n * inner;
    const bool batch_stats = mode == Mode::train && count > 1;

    std::vector<T> mean(c), inv_std(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double mu, var;
        if (batch_stats) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const T* xv = x.raw() + (i * c + ch) * inner;
                for (std::size_t j = 0; j < inner; ++j) s += xv[j];
            }
            mu = s / static_cast<double>(count);
            double ss = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const T* xv = x.raw() + (i * c + ch) * inner;
                for (std::size_t j = 0; j < inner; ++j) {
                    const double dlt = xv[j] - mu;
                    ss += dlt * dlt;
                }
            }
            var = ss / static_cast<double>(count);
            const double m = options_.momentum;
            running_mean_.value[ch] = static_cast<T>(m * running_mean_.value[ch] + (1.0 - m) * mu);
            running_var_.value[ch] = static_cast<T>(m * running_var_.value[ch] + (1.0 - m) * var);
        } else {
            mu = running_mean_.value[ch];
            var = running_var_.value[ch];
        }
        mean[ch] = static_cast<T>(mu);
        inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + options_.epsilon));
    }

    BasicTensor<T> xhat(x.shape());
    BasicTensor<T> y(x.shape());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (i * c + ch) * inner;
            const T g = gamma_.value[ch], b = beta_.value[ch];
            for (std::size_t j = 0; j < inner; ++j) {
                const T h = (x[base + j] - mean[ch]) * inv_std[ch];
                xhat[base + j] = h;
                y[base + j] = g * h + b;
            }
        }
    }
    if (mode == Mode::train) state_ = State{std::move(xhat), std::move(inv_std), batch_stats};
    else state_.reset();
    return y;
}

template <typename T>
BasicTensor<T> BatchNormLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!state_) throw std::logic_error(name_ + ": backward requires a training-mode forward");
    State st = std::move(*state_);
    state_.reset();
    if (grad_y.shape() != st.xhat.shape()) throw std::invalid_argument(name_ + ": gradient shape mismatch");

    const std::size_t n = grad_y.dim(0), c = channels();
    const std::size_t inner = grad_y.size() / (n * c);
    const double count = static_cast<double>(n * inner);
    BasicTensor<T> gx(grad_y.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * inner;
            for (std::size_t j = 0; j < inner; ++j) {
                sum_g += grad_y[base + j];
                sum_gh += static_cast<double>(grad_y[base + j]) * st.xhat[base + j];
            }
        }
        gamma_.grad[ch] += static_cast<T>(sum_gh);
        beta_.grad[ch] += static_cast<T>(sum_g);

        const double g = gamma_.value[ch];
        const double is = st.inv_std[ch];
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (i * c + ch) * inner;
            for (std::size_t j = 0; j < inner; ++j) {
                if (st.batch_stats) {
                    // d/dx of gamma * (x - mean) / sqrt(var + eps) through the batch mean and variance.
                    const double v = count * grad_y[base + j] - sum_g - st.xhat[base + j] * sum_gh;
                    gx[base + j] = static_cast<T>(g * is * v / count);
                } else {
                    gx[base + j] = static_cast<T>(g * is * grad_y[base + j]);
                }
            }
        }
    }
    return gx;
}

template class BatchNormLayer<float>;
template class BatchNormLayer<double>;

}  // namespace mia
