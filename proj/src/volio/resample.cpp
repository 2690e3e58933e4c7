#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mia/volio.hpp"

namespace mia {

namespace {

// Natural spline on unit spacing: M[0] = M[n-1] = 0 and
//   M[i-1] + 4 M[i] + M[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]),  0 < i < n-1,
// solved with the Thomas algorithm. The elimination factors depend only on n.
std::vector<double> thomas_factors(std::size_t n) {
    std::vector<double> cp(n >= 3 ? n - 2 : 0);
    for (std::size_t i = 0; i < cp.size(); ++i) cp[i] = 1.0 / (4.0 - (i ? cp[i - 1] : 0.0));
    return cp;
}

void solve_second_derivatives(const double* y, std::size_t n, const std::vector<double>& cp, std::vector<double>& dp,
                              std::vector<double>& second) {
    second.assign(n, 0.0);
    if (n < 3) return;
    const std::size_t k = n - 2;
    dp.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
        dp[i] = (rhs - (i ? dp[i - 1] : 0.0)) * cp[i];
    }
    second[k] = dp[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) second[i + 1] = dp[i] - cp[i] * second[i + 2];
}

inline double eval_spline(const double* y, const std::vector<double>& second, std::size_t n, double t) {
    t = std::clamp(t, 0.0, static_cast<double>(n - 1));
    std::size_t i = static_cast<std::size_t>(std::floor(t));
    if (i >= n - 1) i = n - 2;
    const double b = t - static_cast<double>(i), a = 1.0 - b;
    return a * y[i] + b * y[i + 1] + ((a * a * a - a) * second[i] + (b * b * b - b) * second[i + 1]) / 6.0;
}

class SplineLine {
public:
    SplineLine(std::size_t n, std::size_t m) : n_(n), cp_(thomas_factors(n)), positions_(m) {
        const double ratio = static_cast<double>(n) / static_cast<double>(m);
        for (std::size_t j = 0; j < m; ++j) positions_[j] = (static_cast<double>(j) + 0.5) * ratio - 0.5;
    }

    void run(const double* y, double* out) {
        if (n_ == 1) {
            std::fill(out, out + positions_.size(), y[0]);
            return;
        }
        solve_second_derivatives(y, n_, cp_, dp_, second_);
        for (std::size_t j = 0; j < positions_.size(); ++j) out[j] = eval_spline(y, second_, n_, positions_[j]);
    }

private:
    std::size_t n_;
    std::vector<double> cp_;
    std::vector<double> dp_;
    std::vector<double> second_;
    std::vector<double> positions_;
};

// Resamples axis `axis` of a (D, H, W) grid held in doubles.
std::vector<double> resample_axis(const std::vector<double>& in, std::size_t (&dims)[3], int axis, std::size_t m) {
    const std::size_t n = dims[axis];
    std::size_t out_dims[3] = {dims[0], dims[1], dims[2]};
    out_dims[axis] = m;
    if (n == m) return in;

    const std::size_t in_stride = axis == 0 ? dims[1] * dims[2] : axis == 1 ? dims[2] : 1;
    const std::size_t out_stride = axis == 0 ? out_dims[1] * out_dims[2] : axis == 1 ? out_dims[2] : 1;
    std::vector<double> out(out_dims[0] * out_dims[1] * out_dims[2]);
    SplineLine line(n, m);
    std::vector<double> src(n), dst(m);

    // Iterate over every line orthogonal to `axis`.
    const std::size_t outer = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
    const std::size_t inner = axis == 0 ? dims[1] * dims[2] : axis == 1 ? dims[2] : 1;
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t q = 0; q < inner; ++q) {
            const std::size_t in_base = o * n * inner + q;
            const std::size_t out_base = o * m * inner + q;
            for (std::size_t i = 0; i < n; ++i) src[i] = in[in_base + i * in_stride];
            line.run(src.data(), dst.data());
            for (std::size_t j = 0; j < m; ++j) out[out_base + j * out_stride] = dst[j];
        }
    }
    dims[axis] = m;
    return out;
}

}  // namespace

std::vector<double> spline_sample(const std::vector<double>& values, const std::vector<double>& positions) {
    if (values.size() < 2) throw std::invalid_argument("spline_sample needs at least two values");
    const std::size_t n = values.size();
    std::vector<double> dp, second;
    solve_second_derivatives(values.data(), n, thomas_factors(n), dp, second);
    std::vector<double> out(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) out[j] = eval_spline(values.data(), second, n, positions[j]);
    return out;
}

Tensor resample_cubic(const Tensor& vol, Dims target, bool clamp255) {
    if (vol.rank() != 3) throw std::invalid_argument("resample expects a (D,H,W) volume, got " + shape_str(vol.shape()));
    if (target.d == 0 || target.h == 0 || target.w == 0) throw std::invalid_argument("resample target has a zero extent");
    std::size_t dims[3] = {vol.dim(0), vol.dim(1), vol.dim(2)};
    const std::size_t want[3] = {target.d, target.h, target.w};
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 2 && want[a] != dims[a]) {
            throw std::invalid_argument("cannot resample a degenerate axis of extent " + std::to_string(dims[a]));
        }
    }
    std::vector<double> buf(vol.data().begin(), vol.data().end());
    for (int a : {2, 1, 0}) buf = resample_axis(buf, dims, a, want[a]);
    Tensor out({target.d, target.h, target.w});
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double v = clamp255 ? std::clamp(buf[i], 0.0, 255.0) : buf[i];
        out[i] = static_cast<float>(v);
    }
    return out;
}

Volume resample_volume(const Volume& vol, Dims target) {
    Volume out;
    const bool clamp = vol.scale == IntensityScale::raw255;
    out.voxels = resample_cubic(vol.voxels, target, clamp);
    if (!clamp) {
        for (auto& v : out.voxels.data()) v = std::clamp(v, 0.0f, 1.0f);
    }
    out.scale = vol.scale;
    out.source_id = vol.source_id;
    return out;
}

}  // namespace mia
