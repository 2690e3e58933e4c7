#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mia/rng.hpp"
#include "mia/tensor.hpp"

namespace mia {

struct Range {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Augmentation bounds on the raw 0-255 intensity scale.
struct AugmentConfig {
    Range noise_std{0.0, 20.0};
    Range blur_std{0.0, 2.0};
    Range rotation_deg{-30.0, 30.0};
    int cutout_max = 4;  // rectangle count drawn from {0..cutout_max}
    double cutout_frac = 0.20;
    double cutout_fill = 128.0;
    Range gamma{0.5, 2.0};
    /// Probability of including each of noise, blur, vertical flip,
    /// horizontal flip and gamma (gated independently).
    double gate_rate = 0.5;
    bool rotation_enabled = true;
    bool cutout_enabled = true;
    /// Gate rotation and cutout at `gate_rate` instead of always applying them.
    bool gate_rotation_cutout = false;

    void validate() const;
};

enum class AugOp : std::uint8_t { noise, blur, rotate, flip_v, flip_h, cutout, gamma };

std::string_view aug_op_name(AugOp op);

struct CutoutRect {
    std::size_t y = 0, x = 0, h = 0, w = 0;
};

struct AugStep {
    AugOp op;
    double value = 0.0;            // std, angle in degrees, or gamma
    std::uint64_t noise_seed = 0;  // noise only
    std::vector<CutoutRect> rects; // cutout only
};

/// The randomized choices of one pipeline draw, in application order.
struct AugPlan {
    std::vector<AugStep> steps;

    bool contains(AugOp op) const;
    std::string describe() const;
};

/// Draws gates, a uniformly random order, and each selected op's parameter.
AugPlan plan_pipeline(Rng& rng, const AugmentConfig& cfg, std::size_t height, std::size_t width);
/// Applies a plan to a (D, H, W) volume; the result is clamped to [0, 255].
Tensor apply_plan(const Tensor& vol, const AugPlan& plan, const AugmentConfig& cfg = {});
Tensor apply_pipeline(const Tensor& vol, Rng& rng, const AugmentConfig& cfg = {});

// Individual operations on (D, H, W) volumes in [0, 255]. Parameters are drawn
// once per volume by the caller; every slice gets the same transform.

Tensor add_gaussian_noise(const Tensor& vol, Rng& rng, double stddev, const AugmentConfig& cfg = {});
/// Separable per-slice Gaussian blur, kernel radius ceil(3 std), mirrored edges.
Tensor gaussian_blur(const Tensor& vol, double stddev, const AugmentConfig& cfg = {});
/// Normalized 1-D kernel used by gaussian_blur (length 2 * radius + 1).
std::vector<double> gaussian_kernel(double stddev);
/// Rotation about each slice's center with bilinear sampling and zero fill.
/// Positive angles turn clockwise as displayed (row 0 at the top).
Tensor rotate_inplane(const Tensor& vol, double angle_deg);

enum class FlipAxis { vertical, horizontal };
Tensor flip(const Tensor& vol, FlipAxis axis);

std::vector<CutoutRect> draw_cutout(Rng& rng, std::size_t height, std::size_t width, const AugmentConfig& cfg = {});
Tensor apply_cutout(const Tensor& vol, const std::vector<CutoutRect>& rects, double fill = 128.0);
Tensor cutout(const Tensor& vol, Rng& rng, const AugmentConfig& cfg = {});

/// v <- 255 (v / 255)^gamma
Tensor gamma_contrast(const Tensor& vol, double gamma, const AugmentConfig& cfg = {});

}  // namespace mia
