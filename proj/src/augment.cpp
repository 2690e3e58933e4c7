#include "mia/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mia/format.hpp"

namespace mia {

namespace {

struct VolDims {
    std::size_t d, h, w;
};

VolDims vol_dims(const Tensor& vol) {
    if (vol.rank() != 3) throw std::invalid_argument("augmentation expects a (D,H,W) volume, got " + shape_str(vol.shape()));
    return {vol.dim(0), vol.dim(1), vol.dim(2)};
}

void clamp255(Tensor& t) {
    for (auto& v : t.data()) v = std::clamp(v, 0.0f, 255.0f);
}

void check_range(const char* what, const Range& r, double v) {
    if (!r.contains(v)) {
        throw std::invalid_argument(std::string(what) + " " + format_double(v) + " outside [" + format_double(r.lo) +
                                    ", " + format_double(r.hi) + "]");
    }
}

// Half-sample symmetric extension: ... c b a | a b c ... c | c b a ...
inline std::size_t mirror(std::ptrdiff_t i, std::size_t n) {
    const auto period = static_cast<std::ptrdiff_t>(2 * n);
    std::ptrdiff_t m = i % period;
    if (m < 0) m += period;
    if (m >= static_cast<std::ptrdiff_t>(n)) m = period - 1 - m;
    return static_cast<std::size_t>(m);
}

}  // namespace

void AugmentConfig::validate() const {
    for (const Range* r : {&noise_std, &blur_std, &rotation_deg, &gamma}) {
        if (!(r->lo <= r->hi)) throw std::invalid_argument("augmentation range is not ordered");
    }
    if (noise_std.lo < 0 || blur_std.lo < 0) throw std::invalid_argument("augmentation std ranges must be nonnegative");
    if (gamma.lo <= 0) throw std::invalid_argument("gamma range must be positive");
    if (cutout_max < 0) throw std::invalid_argument("cutout_max must be nonnegative");
    if (!(cutout_frac > 0 && cutout_frac <= 1)) throw std::invalid_argument("cutout_frac must be in (0, 1]");
    if (!(gate_rate >= 0 && gate_rate <= 1)) throw std::invalid_argument("gate_rate must be in [0, 1]");
}

std::string_view aug_op_name(AugOp op) {
    switch (op) {
        case AugOp::noise: return "noise";
        case AugOp::blur: return "blur";
        case AugOp::rotate: return "rotate";
        case AugOp::flip_v: return "flip_v";
        case AugOp::flip_h: return "flip_h";
        case AugOp::cutout: return "cutout";
        case AugOp::gamma: return "gamma";
    }
    return "unknown";
}

bool AugPlan::contains(AugOp op) const {
    return std::any_of(steps.begin(), steps.end(), [op](const AugStep& s) { return s.op == op; });
}

std::string AugPlan::describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const AugStep& s = steps[i];
        if (i) os << " -> ";
        os << aug_op_name(s.op);
        switch (s.op) {
            case AugOp::noise:
            case AugOp::blur:
            case AugOp::rotate:
            case AugOp::gamma: os << '(' << format_fixed(s.value, 3) << ')'; break;
            case AugOp::cutout: os << '(' << s.rects.size() << ')'; break;
            default: break;
        }
    }
    return os.str();
}

AugPlan plan_pipeline(Rng& rng, const AugmentConfig& cfg, std::size_t height, std::size_t width) {
    cfg.validate();
    std::vector<AugOp> ops;
    for (AugOp op : {AugOp::noise, AugOp::blur, AugOp::flip_v, AugOp::flip_h, AugOp::gamma}) {
        if (rng.bernoulli(cfg.gate_rate)) ops.push_back(op);
    }
    for (auto [op, enabled] : {std::pair{AugOp::rotate, cfg.rotation_enabled}, std::pair{AugOp::cutout, cfg.cutout_enabled}}) {
        if (!enabled) continue;
        if (!cfg.gate_rotation_cutout || rng.bernoulli(cfg.gate_rate)) ops.push_back(op);
    }
    rng.shuffle(std::span<AugOp>(ops));

    AugPlan plan;
    for (AugOp op : ops) {
        AugStep s;
        s.op = op;
        switch (op) {
            case AugOp::noise:
                s.value = rng.uniform(cfg.noise_std.lo, cfg.noise_std.hi);
                s.noise_seed = rng.next_u64();
                break;
            case AugOp::blur: s.value = rng.uniform(cfg.blur_std.lo, cfg.blur_std.hi); break;
            case AugOp::rotate: s.value = rng.uniform(cfg.rotation_deg.lo, cfg.rotation_deg.hi); break;
            case AugOp::gamma: s.value = rng.uniform(cfg.gamma.lo, cfg.gamma.hi); break;
            case AugOp::cutout: s.rects = draw_cutout(rng, height, width, cfg); break;
            case AugOp::flip_v:
            case AugOp::flip_h: break;
        }
        plan.steps.push_back(std::move(s));
    }
    return plan;
}

Tensor apply_plan(const Tensor& vol, const AugPlan& plan, const AugmentConfig& cfg) {
    vol_dims(vol);
    Tensor out = vol;
    for (const AugStep& s : plan.steps) {
        switch (s.op) {
            case AugOp::noise: {
                Rng noise_rng(s.noise_seed);
                out = add_gaussian_noise(out, noise_rng, s.value, cfg);
                break;
            }
            case AugOp::blur: out = gaussian_blur(out, s.value, cfg); break;
            case AugOp::rotate: out = rotate_inplane(out, s.value); break;
            case AugOp::flip_v: out = flip(out, FlipAxis::vertical); break;
            case AugOp::flip_h: out = flip(out, FlipAxis::horizontal); break;
            case AugOp::cutout: out = apply_cutout(out, s.rects, cfg.cutout_fill); break;
            case AugOp::gamma: out = gamma_contrast(out, s.value, cfg); break;
        }
    }
    clamp255(out);
    return out;
}

Tensor apply_pipeline(const Tensor& vol, Rng& rng, const AugmentConfig& cfg) {
    const VolDims g = vol_dims(vol);
    return apply_plan(vol, plan_pipeline(rng, cfg, g.h, g.w), cfg);
}

Tensor add_gaussian_noise(const Tensor& vol, Rng& rng, double stddev, const AugmentConfig& cfg) {
    vol_dims(vol);
    check_range("noise std", cfg.noise_std, stddev);
    Tensor out = vol;
    if (stddev == 0.0) return out;
    for (auto& v : out.data()) v = static_cast<float>(v + rng.normal(0.0, stddev));
    clamp255(out);
    return out;
}

std::vector<double> gaussian_kernel(double stddev) {
    if (!(stddev >= 0)) throw std::invalid_argument("blur std must be nonnegative");
    if (stddev == 0.0) return {1.0};
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * stddev));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double s = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-static_cast<double>(i * i) / (2.0 * stddev * stddev));
        k[static_cast<std::size_t>(i + radius)] = v;
        s += v;
    }
    for (auto& v : k) v /= s;
    return k;
}

Tensor gaussian_blur(const Tensor& vol, double stddev, const AugmentConfig& cfg) {
    const VolDims g = vol_dims(vol);
    check_range("blur std", cfg.blur_std, stddev);
    if (stddev == 0.0) return vol;
    const std::vector<double> k = gaussian_kernel(stddev);
    const auto radius = static_cast<std::ptrdiff_t>(k.size() / 2);
    Tensor out(vol.shape());
    std::vector<double> tmp(g.h * g.w);
    for (std::size_t d = 0; d < g.d; ++d) {
        const float* src = vol.raw() + d * g.h * g.w;
        float* dst = out.raw() + d * g.h * g.w;
        // along W
        for (std::size_t y = 0; y < g.h; ++y) {
            for (std::size_t x = 0; x < g.w; ++x) {
                double acc = 0.0;
                for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                    acc += k[static_cast<std::size_t>(t + radius)] *
                           src[y * g.w + mirror(static_cast<std::ptrdiff_t>(x) + t, g.w)];
                }
                tmp[y * g.w + x] = acc;
            }
        }
        // along H
        for (std::size_t y = 0; y < g.h; ++y) {
            for (std::size_t x = 0; x < g.w; ++x) {
                double acc = 0.0;
                for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                    acc += k[static_cast<std::size_t>(t + radius)] *
                           tmp[mirror(static_cast<std::ptrdiff_t>(y) + t, g.h) * g.w + x];
                }
                dst[y * g.w + x] = static_cast<float>(acc);
            }
        }
    }
    clamp255(out);
    return out;
}

Tensor rotate_inplane(const Tensor& vol, double angle_deg) {
    const VolDims g = vol_dims(vol);
    if (angle_deg == 0.0) return vol;
    const double theta = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cy = (static_cast<double>(g.h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(g.w) - 1.0) / 2.0;
    const auto H = static_cast<std::ptrdiff_t>(g.h), W = static_cast<std::ptrdiff_t>(g.w);

    Tensor out(vol.shape());
    for (std::size_t d = 0; d < g.d; ++d) {
        const float* src = vol.raw() + d * g.h * g.w;
        float* dst = out.raw() + d * g.h * g.w;
        auto sample = [&](std::ptrdiff_t y, std::ptrdiff_t x) -> double {
            if (y < 0 || y >= H || x < 0 || x >= W) return 0.0;
            return src[y * W + x];
        };
        for (std::size_t y = 0; y < g.h; ++y) {
            for (std::size_t x = 0; x < g.w; ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                const double sx = cx + c * dx + s * dy;
                const double sy = cy - s * dx + c * dy;
                const double fx0 = std::floor(sx), fy0 = std::floor(sy);
                const auto x0 = static_cast<std::ptrdiff_t>(fx0), y0 = static_cast<std::ptrdiff_t>(fy0);
                const double ax = sx - fx0, ay = sy - fy0;
                const double v = (1 - ay) * ((1 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                                 ay * ((1 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
                dst[y * g.w + x] = static_cast<float>(v);
            }
        }
    }
    clamp255(out);
    return out;
}

Tensor flip(const Tensor& vol, FlipAxis axis) {
    const VolDims g = vol_dims(vol);
    Tensor out(vol.shape());
    for (std::size_t d = 0; d < g.d; ++d) {
        for (std::size_t y = 0; y < g.h; ++y) {
            for (std::size_t x = 0; x < g.w; ++x) {
                const std::size_t sy = axis == FlipAxis::vertical ? g.h - 1 - y : y;
                const std::size_t sx = axis == FlipAxis::horizontal ? g.w - 1 - x : x;
                out[(d * g.h + y) * g.w + x] = vol[(d * g.h + sy) * g.w + sx];
            }
        }
    }
    return out;
}

std::vector<CutoutRect> draw_cutout(Rng& rng, std::size_t height, std::size_t width, const AugmentConfig& cfg) {
    const auto n = rng.uniform_int(0, cfg.cutout_max);
    const std::size_t rh = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.cutout_frac * height)));
    const std::size_t rw = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cfg.cutout_frac * width)));
    std::vector<CutoutRect> rects;
    for (std::int64_t i = 0; i < n; ++i) {
        CutoutRect r;
        r.h = rh;
        r.w = rw;
        r.y = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(height - rh)));
        r.x = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(width - rw)));
        rects.push_back(r);
    }
    return rects;
}

Tensor apply_cutout(const Tensor& vol, const std::vector<CutoutRect>& rects, double fill) {
    const VolDims g = vol_dims(vol);
    Tensor out = vol;
    const auto f = static_cast<float>(std::clamp(fill, 0.0, 255.0));
    for (const auto& r : rects) {
        if (r.y + r.h > g.h || r.x + r.w > g.w) throw std::invalid_argument("cutout rectangle outside the slice");
        for (std::size_t d = 0; d < g.d; ++d) {
            for (std::size_t y = r.y; y < r.y + r.h; ++y) {
                float* row = out.raw() + (d * g.h + y) * g.w;
                std::fill(row + r.x, row + r.x + r.w, f);
            }
        }
    }
    return out;
}

Tensor cutout(const Tensor& vol, Rng& rng, const AugmentConfig& cfg) {
    const VolDims g = vol_dims(vol);
    return apply_cutout(vol, draw_cutout(rng, g.h, g.w, cfg), cfg.cutout_fill);
}

Tensor gamma_contrast(const Tensor& vol, double gamma, const AugmentConfig& cfg) {
    vol_dims(vol);
    check_range("gamma", cfg.gamma, gamma);
    Tensor out = vol;
    if (gamma == 1.0) return out;
    for (auto& v : out.data()) {
        const double u = std::clamp(static_cast<double>(v), 0.0, 255.0) / 255.0;
        v = static_cast<float>(255.0 * std::pow(u, gamma));
    }
    clamp255(out);
    return out;
}

}  // namespace mia
