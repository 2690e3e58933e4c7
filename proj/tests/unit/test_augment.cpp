#include <doctest.h>

#include <cmath>
#include <map>

#include "mia/augment.hpp"
#include "oracles.hpp"

using namespace mia;
using namespace mia::testing;

namespace {

Tensor random_volume(Rng& rng, std::size_t d, std::size_t h, std::size_t w) {
    return random_tensor<float>(rng, {d, h, w}, 0.0, 255.0);
}

}  // namespace

TEST_CASE("gated ops fire at the configured rate") {
    AugmentConfig cfg;
    const int n = 10000;
    std::map<AugOp, int> hits;
    std::vector<double> noise, angle, gamma;
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng(5).derive(static_cast<std::uint64_t>(i));
        const AugPlan plan = plan_pipeline(rng, cfg, 32, 32);
        for (const auto& s : plan.steps) {
            ++hits[s.op];
            if (s.op == AugOp::noise) noise.push_back(s.value);
            if (s.op == AugOp::rotate) angle.push_back(s.value);
            if (s.op == AugOp::gamma) gamma.push_back(s.value);
        }
    }
    for (AugOp op : {AugOp::noise, AugOp::blur, AugOp::flip_v, AugOp::flip_h, AugOp::gamma}) {
        CAPTURE(aug_op_name(op));
        CHECK(std::abs(hits[op] / static_cast<double>(n) - 0.5) <= 0.02);
    }
    CHECK(hits[AugOp::rotate] == n);
    CHECK(hits[AugOp::cutout] == n);

    CHECK(ks_uniform(noise, 0, 20) < ks_bound(noise.size()));
    CHECK(ks_uniform(angle, -30, 30) < ks_bound(angle.size()));
    CHECK(ks_uniform(gamma, 0.5, 2.0) < ks_bound(gamma.size()));
    // A shifted range must be rejected by the same bound.
    CHECK(ks_uniform(gamma, 0.6, 2.1) > ks_bound(gamma.size()));
}

TEST_CASE("rotation and cutout can be gated too") {
    AugmentConfig cfg;
    cfg.gate_rotation_cutout = true;
    int rot = 0;
    for (int i = 0; i < 4000; ++i) {
        Rng rng = Rng(6).derive(static_cast<std::uint64_t>(i));
        rot += plan_pipeline(rng, cfg, 16, 16).contains(AugOp::rotate);
    }
    CHECK(std::abs(rot / 4000.0 - 0.5) <= 0.03);
    cfg.gate_rate = 0.0;
    Rng rng(1);
    CHECK(plan_pipeline(rng, cfg, 16, 16).steps.empty());
}

TEST_CASE("op order is uniformly shuffled") {
    AugmentConfig cfg;
    cfg.gate_rate = 1.0;
    int rotate_first = 0;
    const int n = 7000;
    for (int i = 0; i < n; ++i) {
        Rng rng = Rng(7).derive(static_cast<std::uint64_t>(i));
        const auto plan = plan_pipeline(rng, cfg, 16, 16);
        REQUIRE(plan.steps.size() == 7);
        rotate_first += plan.steps.front().op == AugOp::rotate;
    }
    CHECK(rotate_first / static_cast<double>(n) == doctest::Approx(1.0 / 7).epsilon(0.1));
}

TEST_CASE("identity parameters are exact") {
    Rng rng(2);
    const Tensor v = random_volume(rng, 3, 9, 11);
    CHECK(add_gaussian_noise(v, rng, 0.0) == v);
    CHECK(gaussian_blur(v, 0.0) == v);
    CHECK(rotate_inplane(v, 0.0) == v);
    CHECK(gamma_contrast(v, 1.0) == v);
    CHECK(apply_cutout(v, {}) == v);
    AugmentConfig none;
    none.cutout_max = 0;
    CHECK(cutout(v, rng, none) == v);
    CHECK(flip(flip(v, FlipAxis::vertical), FlipAxis::vertical) == v);
    CHECK(apply_plan(v, AugPlan{}) == v);
}

TEST_CASE("noise has the requested spread") {
    Rng rng(3);
    const Tensor v({4, 64, 64}, 128.0f);
    const Tensor out = add_gaussian_noise(v, rng, 10.0);
    double s = 0, ss = 0;
    for (float x : out.data()) {
        s += x - 128.0;
        ss += (x - 128.0) * (x - 128.0);
    }
    const double n = static_cast<double>(out.size());
    CHECK(s / n == doctest::Approx(0.0).epsilon(0.3));
    CHECK(std::sqrt(ss / n) == doctest::Approx(10.0).epsilon(0.02));
    CHECK_THROWS_AS(add_gaussian_noise(v, rng, 25.0), std::invalid_argument);
}

TEST_CASE("blur matches a direct 2-D Gaussian convolution") {
    Rng rng(4);
    const Tensor v = random_volume(rng, 2, 12, 10);
    const double sigma = 1.3;
    const Tensor out = gaussian_blur(v, sigma);
    const int r = static_cast<int>(std::ceil(3 * sigma));
    auto mirror = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -1 - i : 2 * n - 1 - i;
        return i;
    };
    double norm = 0;
    for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b) norm += std::exp(-(a * a + b * b) / (2 * sigma * sigma));
    for (int d = 0; d < 2; ++d)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 10; ++x) {
                double acc = 0;
                for (int a = -r; a <= r; ++a)
                    for (int b = -r; b <= r; ++b) {
                        acc += std::exp(-(a * a + b * b) / (2 * sigma * sigma)) *
                               v.at({static_cast<std::size_t>(d), static_cast<std::size_t>(mirror(y + a, 12)),
                                     static_cast<std::size_t>(mirror(x + b, 10))});
                    }
                CHECK(out.at({static_cast<std::size_t>(d), static_cast<std::size_t>(y), static_cast<std::size_t>(x)}) ==
                      doctest::Approx(acc / norm).epsilon(1e-5));
            }
    const auto k = gaussian_kernel(sigma);
    CHECK(k.size() == 2 * 4 + 1);
}

TEST_CASE("quarter turn is a clockwise permutation") {
    Rng rng(5);
    const Tensor v = random_volume(rng, 2, 7, 7);
    const Tensor out = rotate_inplane(v, 90.0);
    for (std::size_t d = 0; d < 2; ++d)
        for (std::size_t y = 0; y < 7; ++y)
            for (std::size_t x = 0; x < 7; ++x) {
                // Clockwise: source row 6 - x, column y.
                CHECK(out.at({d, y, x}) == doctest::Approx(v.at({d, 6 - x, y})).epsilon(1e-5));
            }
    CHECK(rotate_inplane(rotate_inplane(v, 90.0), -90.0).at({0, 3, 3}) == doctest::Approx(v.at({0, 3, 3})));
}

TEST_CASE("flips mirror the in-plane axes") {
    const Tensor v({1, 2, 3}, {0, 1, 2, 3, 4, 5});
    CHECK(flip(v, FlipAxis::vertical) == Tensor({1, 2, 3}, {3, 4, 5, 0, 1, 2}));
    CHECK(flip(v, FlipAxis::horizontal) == Tensor({1, 2, 3}, {2, 1, 0, 5, 4, 3}));
}

TEST_CASE("cutout rectangles have the configured size and fill every slice") {
    Rng rng(6);
    AugmentConfig cfg;
    const Tensor v({3, 20, 30}, 10.0f);
    for (int trial = 0; trial < 50; ++trial) {
        const auto rects = draw_cutout(rng, 20, 30, cfg);
        CHECK(rects.size() <= 4);
        const Tensor out = apply_cutout(v, rects, 128.0);
        for (const auto& r : rects) {
            CHECK(r.h == 4);
            CHECK(r.w == 6);
            CHECK(r.y + r.h <= 20);
            CHECK(r.x + r.w <= 30);
            for (std::size_t d = 0; d < 3; ++d) CHECK(out.at({d, r.y, r.x}) == 128.0f);
        }
        if (rects.size() == 1) {
            std::size_t filled = 0;
            for (float x : out.data()) filled += x == 128.0f;
            CHECK(filled == 3 * 4 * 6);
        }
    }
    CHECK_THROWS_AS(apply_cutout(v, {CutoutRect{18, 0, 4, 4}}), std::invalid_argument);
}

TEST_CASE("gamma contrast is the power law on the 0-255 scale") {
    const Tensor v({1, 1, 3}, {0.0f, 63.75f, 255.0f});
    const Tensor out = gamma_contrast(v, 2.0);
    CHECK(out[0] == 0.0f);
    CHECK(out[1] == doctest::Approx(255.0 * 0.0625));
    CHECK(out[2] == doctest::Approx(255.0));
    CHECK_THROWS_AS(gamma_contrast(v, 3.0), std::invalid_argument);
}

TEST_CASE("pipelines are reproducible and stay in range") {
    Rng src(8);
    const Tensor v = random_volume(src, 4, 16, 16);
    Rng a(99), b(99);
    const Tensor x = apply_pipeline(v, a);
    CHECK(x == apply_pipeline(v, b));
    for (float f : x.data()) {
        CHECK(f >= 0.0f);
        CHECK(f <= 255.0f);
    }
    Rng c(99);
    const AugPlan plan = plan_pipeline(c, {}, 16, 16);
    CHECK(apply_plan(v, plan) == x);
    CHECK_FALSE(plan.describe().empty());
}

TEST_CASE("configuration validation") {
    AugmentConfig cfg;
    cfg.gamma = {0.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.gate_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(flip(Tensor({2, 2}), FlipAxis::vertical), std::invalid_argument);
}
