#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mia/kernels.hpp"
#include "mia/layers.hpp"

namespace mia {

namespace {

constexpr std::size_t kK = 3;

struct Geometry {
    std::size_t n, c, d, h, w;
};

Geometry geometry5(const Shape& s, const char* what) {
    if (s.size() != 5) {
        throw std::invalid_argument(std::string(what) + ": expected rank-5 (N,C,D,H,W) tensor, got " + shape_str(s));
    }
    return {s[0], s[1], s[2], s[3], s[4]};
}

void check_weights(const Shape& ws, std::size_t c_in, const char* what) {
    if (ws.size() != 5 || ws[2] != kK || ws[3] != kK || ws[4] != kK) {
        throw std::invalid_argument(std::string(what) + ": weights must be (C_out, C_in, 3, 3, 3), got " +
                                    shape_str(ws));
    }
    if (ws[1] != c_in) {
        throw std::invalid_argument(std::string(what) + ": input has " + std::to_string(c_in) +
                                    " channels, weights expect " + std::to_string(ws[1]));
    }
}

// Valid output range [lo, hi) along one axis for tap offset `off` in {-1,0,1}
// under zero padding: the input index o + off must lie inside [0, extent).
struct Span {
    std::size_t lo, hi;
};

inline Span tap_span(std::size_t extent, int off) {
    const std::size_t lo = off < 0 ? 1 : 0;
    const std::size_t hi = off > 0 ? extent - 1 : extent;
    return {std::min(lo, hi), hi};
}

}  // namespace

template <typename T>
BasicTensor<T> conv3d_forward(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
    const Geometry g = geometry5(x.shape(), "conv3d_forward");
    check_weights(w.shape(), g.c, "conv3d_forward");
    const std::size_t c_out = w.dim(0);
    if (b.size() != c_out) throw std::invalid_argument("conv3d_forward: bias length must equal C_out");

    BasicTensor<T> y({g.n, c_out, g.d, g.h, g.w});
    const std::size_t plane = g.h * g.w;
    const std::size_t vol = g.d * plane;
    for (std::size_t n = 0; n < g.n; ++n) {
        for (std::size_t co = 0; co < c_out; ++co) {
            T* yv = y.raw() + (n * c_out + co) * vol;
            std::fill(yv, yv + vol, b[co]);
            for (std::size_t ci = 0; ci < g.c; ++ci) {
                const T* xv = x.raw() + (n * g.c + ci) * vol;
                const T* wk = w.raw() + (co * g.c + ci) * kK * kK * kK;
                for (std::size_t kd = 0; kd < kK; ++kd) {
                    const int od = static_cast<int>(kd) - 1;
                    const Span sd = tap_span(g.d, od);
                    for (std::size_t kh = 0; kh < kK; ++kh) {
                        const int oh = static_cast<int>(kh) - 1;
                        const Span sh = tap_span(g.h, oh);
                        for (std::size_t kw = 0; kw < kK; ++kw) {
                            const int ow = static_cast<int>(kw) - 1;
                            const Span sw = tap_span(g.w, ow);
                            const T tap = wk[(kd * kK + kh) * kK + kw];
                            const std::size_t len = sw.hi - sw.lo;
                            if (len == 0) continue;
                            for (std::size_t d = sd.lo; d < sd.hi; ++d) {
                                for (std::size_t h = sh.lo; h < sh.hi; ++h) {
                                    const T* src = xv + (d + od) * plane + (h + oh) * g.w + (sw.lo + ow);
                                    T* dst = yv + d * plane + h * g.w + sw.lo;
                                    kernels::axpy(tap, src, dst, len);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
BasicTensor<T> conv3d_backward_input(const BasicTensor<T>& grad_y, const BasicTensor<T>& w) {
    const Geometry g = geometry5(grad_y.shape(), "conv3d_backward_input");
    if (w.rank() != 5 || w.dim(0) != g.c) {
        throw std::invalid_argument("conv3d_backward_input: gradient channels do not match weights");
    }
    const std::size_t c_in = w.dim(1);
    check_weights(w.shape(), c_in, "conv3d_backward_input");

    BasicTensor<T> gx({g.n, c_in, g.d, g.h, g.w});
    const std::size_t plane = g.h * g.w;
    const std::size_t vol = g.d * plane;
    for (std::size_t n = 0; n < g.n; ++n) {
        for (std::size_t co = 0; co < g.c; ++co) {
            const T* gy = grad_y.raw() + (n * g.c + co) * vol;
            for (std::size_t ci = 0; ci < c_in; ++ci) {
                T* gxv = gx.raw() + (n * c_in + ci) * vol;
                const T* wk = w.raw() + (co * c_in + ci) * kK * kK * kK;
                for (std::size_t kd = 0; kd < kK; ++kd) {
                    const int od = static_cast<int>(kd) - 1;
                    const Span sd = tap_span(g.d, od);
                    for (std::size_t kh = 0; kh < kK; ++kh) {
                        const int oh = static_cast<int>(kh) - 1;
                        const Span sh = tap_span(g.h, oh);
                        for (std::size_t kw = 0; kw < kK; ++kw) {
                            const int ow = static_cast<int>(kw) - 1;
                            const Span sw = tap_span(g.w, ow);
                            const T tap = wk[(kd * kK + kh) * kK + kw];
                            const std::size_t len = sw.hi - sw.lo;
                            if (len == 0) continue;
                            for (std::size_t d = sd.lo; d < sd.hi; ++d) {
                                for (std::size_t h = sh.lo; h < sh.hi; ++h) {
                                    const T* src = gy + d * plane + h * g.w + sw.lo;
                                    T* dst = gxv + (d + od) * plane + (h + oh) * g.w + (sw.lo + ow);
                                    kernels::axpy(tap, src, dst, len);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return gx;
}

template <typename T>
void conv3d_backward_params(const BasicTensor<T>& x, const BasicTensor<T>& grad_y, BasicTensor<T>& grad_w,
                            BasicTensor<T>& grad_b) {
    const Geometry g = geometry5(x.shape(), "conv3d_backward_params");
    const Geometry gy = geometry5(grad_y.shape(), "conv3d_backward_params");
    if (gy.n != g.n || gy.d != g.d || gy.h != g.h || gy.w != g.w) {
        throw std::invalid_argument("conv3d_backward_params: input and gradient shapes disagree");
    }
    check_weights(grad_w.shape(), g.c, "conv3d_backward_params");
    if (grad_w.dim(0) != gy.c || grad_b.size() != gy.c) {
        throw std::invalid_argument("conv3d_backward_params: gradient buffers do not match C_out");
    }
    const std::size_t c_out = gy.c;
    const std::size_t plane = g.h * g.w;
    const std::size_t vol = g.d * plane;
    for (std::size_t n = 0; n < g.n; ++n) {
        for (std::size_t co = 0; co < c_out; ++co) {
            const T* gyv = grad_y.raw() + (n * c_out + co) * vol;
            grad_b[co] += kernels::sum(gyv, vol);
            for (std::size_t ci = 0; ci < g.c; ++ci) {
                const T* xv = x.raw() + (n * g.c + ci) * vol;
                T* gw = grad_w.raw() + (co * g.c + ci) * kK * kK * kK;
                for (std::size_t kd = 0; kd < kK; ++kd) {
                    const int od = static_cast<int>(kd) - 1;
                    const Span sd = tap_span(g.d, od);
                    for (std::size_t kh = 0; kh < kK; ++kh) {
                        const int oh = static_cast<int>(kh) - 1;
                        const Span sh = tap_span(g.h, oh);
                        for (std::size_t kw = 0; kw < kK; ++kw) {
                            const int ow = static_cast<int>(kw) - 1;
                            const Span sw = tap_span(g.w, ow);
                            const std::size_t len = sw.hi - sw.lo;
                            if (len == 0) continue;
                            double acc = 0.0;
                            for (std::size_t d = sd.lo; d < sd.hi; ++d) {
                                for (std::size_t h = sh.lo; h < sh.hi; ++h) {
                                    const T* a = gyv + d * plane + h * g.w + sw.lo;
                                    const T* src = xv + (d + od) * plane + (h + oh) * g.w + (sw.lo + ow);
                                    acc += static_cast<double>(kernels::dot(a, src, len));
                                }
                            }
                            gw[(kd * kK + kh) * kK + kw] += static_cast<T>(acc);
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
BasicTensor<T> he_normal_init(Rng& rng, Shape shape, std::size_t fan_in) {
    if (fan_in < 1) throw std::invalid_argument("he_normal_init: fan_in must be >= 1");
    BasicTensor<T> t(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data()) v = static_cast<T>(rng.normal(0.0, stddev));
    return t;
}

template <typename T>
Conv3dLayer<T>::Conv3dLayer(std::string name, std::size_t in_channels, std::size_t out_channels,
                            double l2_weight, double l2_bias)
    : name_(std::move(name)) {
    if (l2_weight < 0 || l2_bias < 0) throw std::invalid_argument("conv3d: L2 factors must be nonnegative");
    const Shape ws{out_channels, in_channels, kK, kK, kK};
    weight_ = Param<T>{name_ + ".weight", BasicTensor<T>(ws), BasicTensor<T>(ws), true, l2_weight};
    bias_ = Param<T>{name_ + ".bias", BasicTensor<T>({out_channels}), BasicTensor<T>({out_channels}), true, l2_bias};
}

template <typename T>
void Conv3dLayer<T>::init(Rng& rng) {
    weight_.value = he_normal_init<T>(rng, weight_.value.shape(), in_channels() * kK * kK * kK);
    bias_.value.fill(T(0));
}

template <typename T>
Shape Conv3dLayer<T>::output_shape(const Shape& in) const {
    const Geometry g = geometry5(in, name_.c_str());
    if (g.c != in_channels()) throw std::invalid_argument(name_ + ": channel mismatch");
    return {g.n, out_channels(), g.d, g.h, g.w};
}

template <typename T>
BasicTensor<T> Conv3dLayer<T>::forward(const BasicTensor<T>& x, Mode mode, Rng&) {
    BasicTensor<T> y = conv3d_forward(x, weight_.value, bias_.value);
    if (mode == Mode::train) cached_input_ = x;
    else cached_input_.reset();
    return y;
}

template <typename T>
BasicTensor<T> Conv3dLayer<T>::backward(const BasicTensor<T>& grad_y) {
    if (!cached_input_) throw std::logic_error(name_ + ": backward without a matching training forward");
    BasicTensor<T> x = std::move(*cached_input_);
    cached_input_.reset();
    conv3d_backward_params(x, grad_y, weight_.grad, bias_.grad);
    for (Param<T>* p : {&weight_, &bias_}) {
        if (p->l2 == 0.0) continue;
        const T k = static_cast<T>(2.0 * p->l2);
        for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += k * p->value[i];
    }
    return conv3d_backward_input(grad_y, weight_.value);
}

#define MIA_INSTANTIATE(T)                                                                                  \
    template BasicTensor<T> conv3d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
    template BasicTensor<T> conv3d_backward_input(const BasicTensor<T>&, const BasicTensor<T>&);            \
    template void conv3d_backward_params(const BasicTensor<T>&, const BasicTensor<T>&, BasicTensor<T>&,     \
                                         BasicTensor<T>&);                                                  \
    template BasicTensor<T> he_normal_init<T>(Rng&, Shape, std::size_t);                                    \
    template class Conv3dLayer<T>;

MIA_INSTANTIATE(float)
MIA_INSTANTIATE(double)
#undef MIA_INSTANTIATE

}  // namespace mia
