#include <algorithm>
#include <cmath>
#include <numbers>

#include "mia/rng.hpp"
#include "mia/volio.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {

struct Blob {
    double cd, ch, cw;  // centre, voxel coordinates
    double rd, rh, rw;  // semi-axes
    double amplitude;
};

void add_background(Tensor& v, Rng& rng) {
    const std::size_t D = v.dim(0), H = v.dim(1), W = v.dim(2);
    const double base = rng.uniform(55.0, 75.0);
    struct Wave {
        double fd, fh, fw, phase, amp;
    };
    Wave waves[3];
    for (auto& w : waves) {
        w = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5),
             rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(4.0, 10.0)};
    }
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t x = 0; x < W; ++x) {
                const double zd = static_cast<double>(d) / static_cast<double>(D);
                const double zh = static_cast<double>(h) / static_cast<double>(H);
                const double zw = static_cast<double>(x) / static_cast<double>(W);
                double val = base;
                for (const auto& w : waves) {
                    val += w.amp * std::sin(2.0 * std::numbers::pi * (w.fd * zd + w.fh * zh + w.fw * zw) + w.phase);
                }
                v.at({d, h, x}) = static_cast<float>(val);
            }
        }
    }
}

void add_blob(Tensor& v, const Blob& b) {
    const std::size_t D = v.dim(0), H = v.dim(1), W = v.dim(2);
    for (std::size_t d = 0; d < D; ++d) {
        const double ed = (static_cast<double>(d) - b.cd) / b.rd;
        if (std::abs(ed) >= 1.0) continue;
        for (std::size_t h = 0; h < H; ++h) {
            const double eh = (static_cast<double>(h) - b.ch) / b.rh;
            for (std::size_t x = 0; x < W; ++x) {
                const double ew = (static_cast<double>(x) - b.cw) / b.rw;
                const double r2 = ed * ed + eh * eh + ew * ew;
                if (r2 >= 1.0) continue;
                // Soft edge so the blob stays smooth.
                v.at({d, h, x}) += static_cast<float>(b.amplitude * (1.0 - r2 * r2));
            }
        }
    }
}

Blob draw_blob(Rng& rng, Dims dims, double size_scale) {
    auto axis = [&](std::size_t n) { return std::max(1.0, size_scale * static_cast<double>(n) * rng.uniform(0.12, 0.2)); };
    Blob b{};
    b.rd = axis(dims.d);
    b.rh = axis(dims.h);
    b.rw = axis(dims.w);
    b.cd = rng.uniform(0.2, 0.8) * static_cast<double>(dims.d - 1);
    b.ch = rng.uniform(0.2, 0.8) * static_cast<double>(dims.h - 1);
    b.cw = rng.uniform(0.2, 0.8) * static_cast<double>(dims.w - 1);
    b.amplitude = rng.uniform(90.0, 130.0);
    return b;
}

Volume synth_volume(Rng rng, Dims dims, Variant variant, std::size_t label_index) {
    Volume vol;
    vol.voxels = Tensor({dims.d, dims.h, dims.w});
    add_background(vol.voxels, rng);
    std::int64_t lo = 0, hi = 0;
    double scale = 1.0;
    if (variant == Variant::detection) {
        if (label_index == 1) lo = 1, hi = 5;
    } else {
        lo = static_cast<std::int64_t>(label_index) + 1;
        hi = lo + 1;
        scale = 0.7 + 0.2 * static_cast<double>(label_index);
    }
    const auto count = hi > 0 ? rng.uniform_int(lo, hi) : 0;
    for (std::int64_t i = 0; i < count; ++i) add_blob(vol.voxels, draw_blob(rng, dims, scale));
    for (auto& x : vol.voxels.data()) x = std::clamp(x, 0.0f, 255.0f);
    return vol;
}

std::string sample_id(Split split, std::size_t label_index, std::size_t i) {
    std::string n = std::to_string(i);
    if (n.size() < 4) n.insert(0, 4 - n.size(), '0');
    return std::string(split_name(split)) + "-c" + std::to_string(label_index) + "-" + n;
}

}  // namespace

SyntheticDataset generate_synthetic_dataset(std::size_t n_per_class, Dims dims, std::uint64_t seed, Variant variant,
                                            Split split) {
    if (dims.d == 0 || dims.h == 0 || dims.w == 0) throw std::invalid_argument("synthetic dims must be positive");
    SyntheticDataset out;
    out.index.split = split;
    out.index.labels = label_space(variant);
    const Rng root = Rng(seed).derive(split_name(split));
    for (std::size_t c = 0; c < out.index.labels.size(); ++c) {
        const Rng class_rng = root.derive(static_cast<std::uint64_t>(c));
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::string id = sample_id(split, c, i);
            Volume v = synth_volume(class_rng.derive(static_cast<std::uint64_t>(i)), dims, variant, c);
            v.source_id = id;
            Sample s;
            s.path = fs::path(std::string(split_name(split))) / out.index.labels[c] / (id + ".miav");
            s.label = out.index.labels[c];
            s.label_index = c;
            out.index.samples.push_back(std::move(s));
            out.volumes.push_back(std::move(v));
        }
    }
    return out;
}

fs::path write_synthetic_dataset(const fs::path& out, std::size_t n_per_class, std::size_t n_validation_per_class,
                                 Dims dims, std::uint64_t seed, Variant variant) {
    std::vector<IndexEntry> entries;
    for (auto [split, n] : {std::pair{Split::train, n_per_class}, std::pair{Split::validation, n_validation_per_class}}) {
        const auto ds = generate_synthetic_dataset(n, dims, seed, variant, split);
        for (std::size_t k = 0; k < ds.volumes.size(); ++k) {
            const fs::path rel = ds.index.samples[k].path;
            fs::create_directories((out / rel).parent_path());
            write_miav(ds.volumes[k], out / rel);
            entries.push_back({rel, ds.index.samples[k].label});
        }
    }
    const fs::path index_path = out / "index.tsv";
    write_index(index_path, entries);
    return index_path;
}

}  // namespace mia
