// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "mia/augment.hpp"
#include "mia/checkpoint.hpp"
#include "mia/format.hpp"
#include "mia/kernels.hpp"
#include "mia/trainer.hpp"
#include "mini.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace mia;
using namespace mia::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Notes {
public:
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass_ = false;
            if (failures_++ < 4) add("FAILED " + what);
        }
    }
    void add(const std::string& s) { text_ += (text_.empty() ? "" : "; ") + s; }
    Outcome done() const {
        return {pass_, failures_ > 4 ? text_ + "; +" + std::to_string(failures_ - 4) + " more failures" : text_};
    }

private:
    bool pass_ = true;
    int failures_ = 0;
    std::string text_;
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- 1 --------------------------------------------------------------------------

template <typename T>
double worst_layer_rel(int instances, double h, std::uint64_t base_seed) {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        Rng rng = Rng(base_seed).derive(static_cast<std::uint64_t>(i));
        const std::size_t ci = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const std::size_t co = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const std::uint64_t fs_ = rng.next_u64();

        Conv3dLayer<T> conv("conv", ci, co, rng.uniform(0.0, 0.1));
        conv.init(rng);
        worst = std::max(worst, layer_gradcheck(conv, random_tensor<T>(rng, {2, ci, 3, 4, 4}), rng, fs_, h).rel());

        ReluLayer<T> relu("relu");
        worst = std::max(worst, layer_gradcheck(relu, random_away_from_zero<T>(rng, {2, 2, 2, 3, 3}, 0.1), rng, fs_, h).rel());

        MaxPool3dLayer<T> pool("pool");
        worst = std::max(worst, layer_gradcheck(pool, random_distinct<T>(rng, {2, 2, 4, 4, 5}, 0.05), rng, fs_, h).rel());

        BatchNormLayer<T> bn("bn", 3);
        for (auto& v : bn.gamma().value.data()) v = static_cast<T>(rng.uniform(0.5, 1.5));
        for (auto& v : bn.beta().value.data()) v = static_cast<T>(rng.uniform(-0.5, 0.5));
        worst = std::max(worst, layer_gradcheck(bn, random_tensor<T>(rng, {2, 3, 2, 3, 3}), rng, fs_, h).rel());

        DropoutLayer<T> drop("drop", 0.5);
        worst = std::max(worst, layer_gradcheck(drop, random_tensor<T>(rng, {3, 2, 2, 2, 2}), rng, fs_, h).rel());

        GlobalAvgPool3dLayer<T> gap("gap");
        worst = std::max(worst, layer_gradcheck(gap, random_tensor<T>(rng, {3, 2, 2, 3, 2}), rng, fs_, h).rel());

        DenseLayer<T> dense("fc", 6, 4);
        dense.init(rng);
        worst = std::max(worst, layer_gradcheck(dense, random_tensor<T>(rng, {3, 6}), rng, fs_, h).rel());
    }
    return worst;
}

template <typename T>
double worst_model_rel(int instances, double h) {
    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const Variant v = i % 2 ? Variant::severity : Variant::detection;
        worst = std::max(worst, model_gradcheck<T>(gradient_miniature(v), 1000 + static_cast<std::uint64_t>(i), h).rel());
    }
    return worst;
}

Outcome gradient_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    Notes n;
    const int instances = 20;
    const double lf = worst_layer_rel<float>(instances, 1e-2, 1);
    const double ld = worst_layer_rel<double>(instances, 1e-5, 2);
    const double mf = worst_model_rel<float>(instances, 1e-3);
    const double md = worst_model_rel<double>(instances, 1e-5);
    n.require(lf < 1e-3, "32-bit layers rel " + sci(lf));
    n.require(ld < 1e-5, "64-bit layers rel " + sci(ld));
    n.require(mf < 1e-3, "32-bit model rel " + sci(mf));
    n.require(md < 1e-5, "64-bit model rel " + sci(md));
    const double s = seconds_since(t0);
    n.require(s < 120.0, "runtime under 2 min");
    n.add("7 layers + model x " + std::to_string(instances) + " instances; worst rel: layers f32 " + sci(lf) + ", f64 " +
          sci(ld) + "; model f32 " + sci(mf) + ", f64 " + sci(md));
    return n.done();
}

// --- 2 --------------------------------------------------------------------------

Outcome conv_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Notes n;
    Rng rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::size_t b = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const std::size_t ci = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const std::size_t co = static_cast<std::size_t>(rng.uniform_int(1, 4));
        const Shape xs{b, ci, static_cast<std::size_t>(rng.uniform_int(1, 6)), static_cast<std::size_t>(rng.uniform_int(1, 8)),
                       static_cast<std::size_t>(rng.uniform_int(1, 11))};
        const Tensor x = random_tensor<float>(rng, xs);
        const Tensor w = random_tensor<float>(rng, {co, ci, 3, 3, 3});
        const Tensor bias = random_tensor<float>(rng, {co});
        const Tensor got = conv3d_forward(x, w, bias);
        const Tensor want = naive_conv3d(x, w, bias);
        if (got.shape() != want.shape()) {
            n.require(false, "shape " + shape_str(got.shape()));
            continue;
        }
        for (std::size_t k = 0; k < got.size(); ++k) worst = std::max(worst, static_cast<double>(std::abs(got[k] - want[k])));
    }
    n.require(worst <= 1e-5, "max abs diff " + sci(worst));
    const double s = seconds_since(t0);
    n.require(s < 60.0, "runtime under 1 min");
    n.add("50 shapes, kernels " + std::string(kernels::isa_name(kernels::active_isa())) + ", max abs diff " + sci(worst));
    return n.done();
}

// --- 3 --------------------------------------------------------------------------

Outcome architecture_audit() {
    Notes n;
    auto filters = [](const ModelSpec& s) {
        std::vector<std::size_t> f;
        for (const auto& b : s.conv_blocks) f.push_back(b.filters);
        return f;
    };
    auto l2 = [](const ModelSpec& s) {
        std::vector<double> v;
        for (const auto& b : s.conv_blocks) v.push_back(b.l2_weight);
        return v;
    };
    Model<float> det(ModelSpec::detection());
    const Model<float> sev(ModelSpec::severity());
    const ModelSpec& d = det.spec();
    const ModelSpec& s = sev.spec();
    n.require(filters(d) == std::vector<std::size_t>{64, 64, 128, 128, 256, 256}, "detection filters");
    n.require(l2(d) == std::vector<double>{0.01, 0.01, 0.05, 0.05, 0.05, 0.05}, "detection L2");
    n.require(filters(s) == std::vector<std::size_t>{64, 64, 128, 256}, "severity filters");
    n.require(l2(s) == std::vector<double>{0.05, 0.05, 0.10, 0.10}, "severity L2");
    n.require(d.fc_units == std::vector<std::size_t>{1024, 512}, "detection FC");
    n.require(s.fc_units == std::vector<std::size_t>{1024, 512}, "severity FC");
    n.require(d.output_classes == 2 && s.output_classes == 4, "output classes");

    // Layer-by-layer: each conv's L2 factor, each dense width.
    std::vector<double> conv_l2;
    std::vector<std::size_t> dense_out;
    for (auto* p : det.parameters()) {
        if (p->name.ends_with("conv.weight")) conv_l2.push_back(p->l2);
        if (p->name.ends_with(".weight") && p->value.rank() == 2) dense_out.push_back(p->value.dim(1));
    }
    n.require(conv_l2 == l2(d), "built conv L2 factors");
    n.require(dense_out == std::vector<std::size_t>{1024, 512, 2}, "built dense widths");

    const auto trail = d.pooling_trail();
    n.require(trail.size() == 6 && trail.back() == Dims{1, 3, 3}, "detection pooling trail ends at (1,3,3)");
    std::string t;
    for (const auto& dm : trail) t += (t.empty() ? "" : " -> ") + dims_str(dm);
    n.add("trail " + t + "; params " + std::to_string(det.trainable_parameter_count()) + " / " +
          std::to_string(sev.trainable_parameter_count()));
    return n.done();
}

// --- 4 --------------------------------------------------------------------------

Outcome overfit_smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    Notes n;
    const TrainData data = overfit_data();
    const TrainConfig cfg = overfit_config();
    TrainResult r = train(cfg, data);
    const double s = seconds_since(t0);
    const double best = r.log.best_metric;
    const EvalReport check = evaluate(r.model, data.train, data.labels);
    n.require(best == 1.0, "training macro F1 reached 1.0 (best " + format_fixed(best, 4) + ")");
    n.require(check.macro_f1 == 1.0, "restored model scores 1.0 on the training set");
    n.require(r.log.epochs.size() <= 200, "within 200 epochs");
    n.require(s < 600.0, "wall time under 10 min");
    n.add("20/class 16x32x32, F1 1.0 at epoch " + std::to_string(r.log.best_epoch) + ", " + format_fixed(s, 1) + " s");
    return n.done();
}

// --- 5 --------------------------------------------------------------------------

std::string expected_log(int epochs, const std::function<double(int)>& metric, const std::function<std::string(int)>& lr,
                         int best_epoch, const std::string& best, const std::string& reason) {
    std::ostringstream os;
    os << "epoch\ttrain_loss\tval_loss\tval_macro_f1\tlr\n";
    for (int e = 1; e <= epochs; ++e) os << e << "\t0.5\t0.75\t" << format_double(metric(e)) << '\t' << lr(e) << '\n';
    os << "# best_epoch = " << best_epoch << "\n# best_val_macro_f1 = " << best << "\n# stop_reason = " << reason << '\n';
    return os.str();
}

std::string run_script(const TrainConfig& cfg, const std::function<double(int)>& metric, int limit) {
    EpochController ctl(cfg);
    for (int e = 1; e <= limit; ++e) {
        if (ctl.end_epoch({e, 0.5, 0.75, metric(e)})) break;
    }
    return ctl.log().to_tsv(false);
}

Outcome control_state_machines() {
    Notes n;
    // Best at epoch 1 then flat: halvings after exactly 20 stale epochs.
    auto flat = [](int e) { return e == 1 ? 0.5 : 0.25; };
    auto flat_lr = [](int e) -> std::string {
        if (e <= 21) return "1e-04";
        if (e <= 41) return "5e-05";
        if (e <= 61) return "2.5e-05";
        if (e <= 81) return "1.25e-05";
        return "6.25e-06";
    };
    const auto det = TrainConfig::defaults(Variant::detection);
    const auto sev = TrainConfig::defaults(Variant::severity);
    n.require(run_script(det, flat, 2000) == expected_log(81, flat, flat_lr, 1, "0.5", "patience"),
              "detection stops at best+80");
    n.require(run_script(sev, flat, 2000) == expected_log(51, flat, flat_lr, 1, "0.5", "patience"),
              "severity stops at best+50");

    // Late best at epoch 30: the wait restarts there.
    auto late = [](int e) { return e == 30 ? 0.9 : (e < 30 ? 0.01 * e : 0.1); };
    auto late_lr = [](int e) -> std::string {
        if (e <= 50) return "1e-04";
        if (e <= 70) return "5e-05";
        if (e <= 90) return "2.5e-05";
        return "1.25e-05";
    };
    n.require(run_script(det, late, 2000) == expected_log(110, late, late_lr, 30, "0.9", "patience"),
              "detection late best stops at 110");

    // Always improving: the epoch cap decides.
    auto rising = [](int e) { return e / 4096.0; };
    auto const_lr = [](int) -> std::string { return "1e-04"; };
    n.require(run_script(det, rising, 2000) == expected_log(500, rising, const_lr, 500, format_double(500 / 4096.0), "max_epochs"),
              "detection stops at epoch 500");
    n.require(run_script(sev, rising, 2000) == expected_log(1000, rising, const_lr, 1000, format_double(1000 / 4096.0), "max_epochs"),
              "severity stops at epoch 1000");
    n.add("lr 1e-04 -> 5e-05 -> 2.5e-05; stops at 81/51 (best+80/+50), 110 (late best), 500/1000 (cap); run logs byte-equal");
    return n.done();
}

// --- 6 --------------------------------------------------------------------------

Outcome augmentation_statistics() {
    Notes n;
    const AugmentConfig cfg;
    const int pipelines = 10000;
    std::map<AugOp, int> hits;
    std::vector<double> noise, angle, gamma;
    int noise_checked = 0;
    double worst_noise_dev = 0.0;
    const Tensor flat({16, 32, 32}, 128.0f);
    for (int i = 0; i < pipelines; ++i) {
        Rng rng = Rng(66).derive(static_cast<std::uint64_t>(i));
        const AugPlan plan = plan_pipeline(rng, cfg, 16, 16);
        for (const auto& s : plan.steps) {
            ++hits[s.op];
            if (s.op == AugOp::noise) {
                noise.push_back(s.value);
                if (noise_checked < 300) {
                    // Realized spread of the applied noise on a flat volume.
                    Rng nr(s.noise_seed);
                    const Tensor out = add_gaussian_noise(flat, nr, s.value, cfg);
                    double ss = 0;
                    for (float v : out.data()) ss += (v - 128.0) * (v - 128.0);
                    const double est = std::sqrt(ss / static_cast<double>(out.size()));
                    worst_noise_dev = std::max(worst_noise_dev, std::abs(est - s.value) / (s.value + 1.0));
                    ++noise_checked;
                }
            }
            if (s.op == AugOp::rotate) angle.push_back(s.value);
            if (s.op == AugOp::gamma) gamma.push_back(s.value);
        }
    }
    std::string rates;
    for (AugOp op : {AugOp::noise, AugOp::blur, AugOp::flip_v, AugOp::flip_h, AugOp::gamma}) {
        const double r = hits[op] / static_cast<double>(pipelines);
        n.require(std::abs(r - 0.5) <= 0.02, std::string(aug_op_name(op)) + " rate " + format_fixed(r, 4));
        rates += std::string(rates.empty() ? "" : " ") + std::string(aug_op_name(op)) + "=" + format_fixed(r, 3);
    }
    n.require(hits[AugOp::rotate] == pipelines && hits[AugOp::cutout] == pipelines, "rotation and cutout always applied");
    const double kn = ks_uniform(noise, cfg.noise_std.lo, cfg.noise_std.hi);
    const double ka = ks_uniform(angle, cfg.rotation_deg.lo, cfg.rotation_deg.hi);
    const double kg = ks_uniform(gamma, cfg.gamma.lo, cfg.gamma.hi);
    n.require(kn < ks_bound(noise.size()), "noise std K-S " + sci(kn));
    n.require(ka < ks_bound(angle.size()), "angle K-S " + sci(ka));
    n.require(kg < ks_bound(gamma.size()), "gamma K-S " + sci(kg));
    n.require(worst_noise_dev < 0.05, "realized noise spread");

    Rng rng(7);
    const Tensor v = random_tensor<float>(rng, {4, 12, 12}, 0, 255);
    auto single = [&](AugOp op, double value) {
        AugPlan p;
        AugStep s;
        s.op = op;
        s.value = value;
        s.noise_seed = 5;
        p.steps.push_back(s);
        return apply_plan(v, p, cfg);
    };
    n.require(single(AugOp::noise, 0.0) == v, "noise std 0 identity");
    n.require(single(AugOp::rotate, 0.0) == v, "angle 0 identity");
    n.require(single(AugOp::gamma, 1.0) == v, "gamma 1 identity");
    n.require(single(AugOp::blur, 0.0) == v, "blur std 0 identity");
    n.require(single(AugOp::cutout, 0.0) == v, "0 cutout rectangles identity");

    n.add("10^4 pipelines; rates " + rates + "; K-S noise " + sci(kn) + ", angle " + sci(ka) + ", gamma " + sci(kg) +
          " (bound " + sci(ks_bound(angle.size())) + "); identities exact");
    return n.done();
}

// --- 7 --------------------------------------------------------------------------

Outcome determinism() {
    Notes n;
    TempDir tmp("mia-accept");
    const auto tr = generate_synthetic_dataset(4, {16, 32, 32}, 17, Variant::detection, Split::train);
    const auto va = generate_synthetic_dataset(2, {16, 32, 32}, 17, Variant::detection, Split::validation);
    const TrainData data = from_synthetic(tr, va);
    TrainConfig cfg = mini_config();
    cfg.max_epochs = 4;
    cfg.seed = 99;
    const TrainResult a = train(cfg, data);
    const TrainResult b = train(cfg, data);
    n.require(a.log.to_tsv(false) == b.log.to_tsv(false), "run logs identical");
    n.require(encode_checkpoint(a.checkpoint) == encode_checkpoint(b.checkpoint), "checkpoints identical");

    // MIAV round trips.
    Rng rng(70);
    int miav = 0;
    for (int i = 0; i < 50; ++i) {
        Volume v;
        v.voxels = random_tensor<float>(rng,
                                        {static_cast<std::size_t>(rng.uniform_int(1, 8)), static_cast<std::size_t>(rng.uniform_int(1, 12)),
                                         static_cast<std::size_t>(rng.uniform_int(1, 12))},
                                        -1e3, 1e3);
        const fs::path p = tmp / ("v" + std::to_string(i) + ".miav");
        write_miav(v, p);
        const Volume back = read_miav(p);
        miav += back.voxels.shape() == v.voxels.shape() &&
                std::memcmp(back.voxels.raw(), v.voxels.raw(), v.voxels.size() * sizeof(float)) == 0;
    }
    n.require(miav == 50, "MIAV round trips");

    // Checkpoint round trip through a file.
    write_checkpoint(tmp / "ck.miac", a.checkpoint);
    const Checkpoint back = read_checkpoint(tmp / "ck.miac");
    n.require(encode_checkpoint(back) == encode_checkpoint(a.checkpoint), "checkpoint bytes");
    Model<float> m1 = model_from_checkpoint(a.checkpoint);
    Model<float> m2 = model_from_checkpoint(back);
    bool same = true;
    for (std::size_t i = 0; i < m1.parameters().size(); ++i) same = same && m1.parameters()[i]->value == m2.parameters()[i]->value;
    n.require(same, "restored weights");
    const Tensor x = random_tensor<float>(rng, {2, 1, 16, 32, 32}, 0, 1);
    n.require(m1.predict(x) == m2.predict(x), "restored predictions");
    n.add("2 runs x " + std::to_string(a.log.epochs.size()) + " epochs bit-identical; 50 MIAV + checkpoint round trips bit-exact");
    return n.done();
}

// --- 8 --------------------------------------------------------------------------

Outcome resampler() {
    Notes n;
    Rng rng(80);
    const Tensor v = random_tensor<float>(rng, {9, 14, 11}, 0, 255);
    const Tensor id = resample_cubic(v, {9, 14, 11});
    double id_dev = 0;
    for (std::size_t i = 0; i < v.size(); ++i) id_dev = std::max(id_dev, static_cast<double>(std::abs(id[i] - v[i])));
    n.require(id_dev < 1e-3, "identity deviation " + sci(id_dev));

    Tensor ramp({8, 24, 40});
    for (std::size_t d = 0; d < 8; ++d)
        for (std::size_t y = 0; y < 24; ++y)
            for (std::size_t x = 0; x < 40; ++x) ramp.at({d, y, x}) = static_cast<float>(5 + 4 * x + 3 * y + 2 * d);
    const Tensor half = resample_cubic(ramp, {4, 12, 20});
    double ramp_dev = 0;
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t y = 0; y < 12; ++y)
            for (std::size_t x = 0; x < 20; ++x) {
                const double want = 5 + 4 * (2.0 * x + 0.5) + 3 * (2.0 * y + 0.5) + 2 * (2.0 * d + 0.5);
                ramp_dev = std::max(ramp_dev, std::abs(half.at({d, y, x}) - want));
            }
    n.require(ramp_dev < 1e-3, "ramp deviation " + sci(ramp_dev));

    // Preprocess a mixed tree to the default input size.
    TempDir tmp("mia-accept");
    const std::size_t depths[] = {50, 31, 120, 7};
    int k = 0;
    for (const char* split : {"train", "validation"}) {
        for (const char* label : {"covid", "non-covid"}) {
            const fs::path dir = tmp / "in" / split / label;
            fs::create_directories(dir);
            Volume s;
            s.voxels = random_tensor<float>(rng, {depths[k++], 40, 48}, 0, 255);
            if (k % 2) {
                write_miav(s, dir / "scan.miav");
            } else {
                fs::create_directories(dir / "scan");
                for (std::size_t d = 0; d < s.voxels.dim(0); ++d) {
                    Tensor slice({40, 48});
                    std::copy(s.voxels.raw() + d * 40 * 48, s.voxels.raw() + (d + 1) * 40 * 48, slice.raw());
                    write_pgm(dir / "scan" / ("s" + std::to_string(d) + ".pgm"), slice);
                }
            }
        }
    }
    const fs::path idx = preprocess_dataset(tmp / "in", tmp / "out", kDefaultInputDims, 2);
    std::size_t ok = 0, total = 0;
    for (Split sp : {Split::train, Split::validation}) {
        for (const auto& s : load_index(idx, sp, Variant::detection).samples) {
            ++total;
            ok += read_miav(s.path).dims() == kDefaultInputDims;
        }
    }
    n.require(total == 4 && ok == total, "preprocessed dims");
    n.add("identity " + sci(id_dev) + ", 2x ramp " + sci(ramp_dev) + ", " + std::to_string(ok) + "/" + std::to_string(total) +
          " preprocessed volumes at " + dims_str(kDefaultInputDims));
    return n.done();
}

// --- 9 --------------------------------------------------------------------------

Outcome metrics_oracle() {
    Notes n;
    Rng rng(90);
    int agree = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t k = static_cast<std::size_t>(rng.uniform_int(2, 4));
        const std::size_t len = static_cast<std::size_t>(rng.uniform_int(1, 80));
        std::vector<std::size_t> truth(len), pred(len);
        ConfusionMatrix cm(k);
        for (std::size_t i = 0; i < len; ++i) {
            truth[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
            pred[i] = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
            cm.add(truth[i], pred[i]);
        }
        agree += macro_f1(cm) == brute_force_macro_f1(truth, pred, k);
    }
    n.require(agree == 1000, "brute-force agreement " + std::to_string(agree) + "/1000");

    ConfusionMatrix cm(2);
    cm.add(0, 0, 8);
    cm.add(0, 1, 2);
    cm.add(1, 0, 3);
    cm.add(1, 1, 7);
    const double f = macro_f1(cm);
    const double dev = std::abs(f - 0.7493);
    n.require(std::abs(f - (16.0 / 21 + 14.0 / 19) / 2) < 1e-15, "class F1 16/21 and 14/19");
    n.require(dev <= 5e-5, "[[8,2],[3,7]] gives " + format_fixed(f, 6) + " = (16/21 + 14/19)/2, |x - 0.7493| = " + sci(dev) +
                               " > 5e-05; the exact value rounds to 0.7494");
    n.add("1000/1000 exact agreement; [[8,2],[3,7]] -> " + format_fixed(f, 6));
    return n.done();
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"gradient suite", gradient_suite},
        {"convolution oracle", conv_oracle},
        {"architecture audit", architecture_audit},
        {"overfit smoke train", overfit_smoke},
        {"control state machines", control_state_machines},
        {"augmentation statistics", augmentation_statistics},
        {"determinism", determinism},
        {"resampler", resampler},
        {"metrics oracle", metrics_oracle},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("criterion %d %s  %s  (%s; %.1f s)\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
