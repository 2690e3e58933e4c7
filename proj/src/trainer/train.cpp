#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>
#include <numeric>

#include "binio.hpp"
#include "mia/format.hpp"
#include "mia/trainer.hpp"

namespace mia {

namespace fs = std::filesystem;

// --- run log ------------------------------------------------------------------

std::string RunLog::to_tsv(bool with_wall_time) const {
    std::string out = "epoch\ttrain_loss\tval_loss\tval_macro_f1\tlr";
    out += with_wall_time ? "\twall_s\n" : "\n";
    for (const auto& r : epochs) {
        out += std::to_string(r.epoch) + '\t' + format_double(r.train_loss) + '\t' + format_double(r.val_loss) + '\t' +
               format_double(r.val_macro_f1) + '\t' + format_double(r.lr);
        if (with_wall_time) out += '\t' + format_fixed(r.wall_seconds, 3);
        out += '\n';
    }
    out += "# best_epoch = " + std::to_string(best_epoch) + "\n";
    out += "# best_val_macro_f1 = " + format_double(best_metric) + "\n";
    out += "# stop_reason = " + stop_reason + "\n";
    return out;
}

EpochController::EpochController(const TrainConfig& cfg)
    : scheduler_(cfg.initial_lr, cfg.scheduler_factor, cfg.scheduler_patience),
      stopper_(cfg.early_stop_patience, cfg.max_epochs),
      patience_(cfg.early_stop_patience),
      stop_at_(cfg.stop_at_metric) {}

bool EpochController::end_epoch(EpochRecord record, const ParamList& snapshot_params) {
    if (record.epoch != next_epoch()) {
        throw std::logic_error("epoch " + std::to_string(record.epoch) + " recorded out of order");
    }
    record.lr = scheduler_.lr();
    log_.epochs.push_back(record);
    const bool stop = stopper_.update(record.epoch, record.val_macro_f1, snapshot_params) == StopDecision::stop;
    log_.best_epoch = stopper_.best_epoch();
    log_.best_metric = stopper_.best();
    if (stop_at_ && record.val_macro_f1 >= *stop_at_) {
        log_.stop_reason = "target_metric";
        return true;
    }
    if (stop) {
        log_.stop_reason = stopper_.wait() >= patience_ ? "patience" : "max_epochs";
        return true;
    }
    scheduler_.update(record.val_macro_f1);
    return false;
}

// --- data -----------------------------------------------------------------------

LabeledVolumes load_split(const DatasetIndex& index, Dims dims) {
    LabeledVolumes out;
    for (const auto& s : index.samples) {
        Volume v = load_volume(s.path);
        if (v.dims() != dims) v = resample_volume(v, dims);
        out.volumes.push_back(std::move(v.voxels));
        out.targets.push_back(s.label_index);
        out.ids.push_back(s.path.generic_string());
    }
    return out;
}

TrainData load_train_data(const fs::path& index_path, Variant variant, Dims dims) {
    TrainData data;
    data.labels = label_space(variant);
    data.train = load_split(load_index(index_path, Split::train, variant), dims);
    data.validation = load_split(load_index(index_path, Split::validation, variant), dims);
    return data;
}

TrainData from_synthetic(const SyntheticDataset& train, const SyntheticDataset& validation) {
    auto convert = [](const SyntheticDataset& ds) {
        LabeledVolumes out;
        for (std::size_t i = 0; i < ds.volumes.size(); ++i) {
            out.volumes.push_back(ds.volumes[i].voxels);
            out.targets.push_back(ds.index.samples[i].label_index);
            out.ids.push_back(ds.index.samples[i].path.generic_string());
        }
        return out;
    };
    if (train.index.labels != validation.index.labels) throw std::invalid_argument("train and validation label spaces differ");
    return {train.index.labels, convert(train), convert(validation)};
}

namespace {

Tensor make_batch(const LabeledVolumes& data, std::span<const std::size_t> indices,
                  const std::function<Tensor(std::size_t)>& fetch) {
    const Tensor& first = data.volumes[indices[0]];
    Tensor batch({indices.size(), 1, first.dim(0), first.dim(1), first.dim(2)});
    const std::size_t n = first.size();
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const Tensor v = fetch(indices[b]);
        float* dst = batch.raw() + b * n;
        for (std::size_t i = 0; i < n; ++i) dst[i] = v[i] / 255.0f;
    }
    return batch;
}

void check_split(const LabeledVolumes& split, const char* name, Dims dims, std::size_t classes) {
    if (split.volumes.empty()) throw std::invalid_argument(std::string("the ") + name + " split is empty");
    if (split.targets.size() != split.volumes.size()) throw std::invalid_argument("targets and volumes differ in count");
    const Shape want{dims.d, dims.h, dims.w};
    for (std::size_t i = 0; i < split.volumes.size(); ++i) {
        if (split.volumes[i].shape() != want) {
            throw std::invalid_argument(std::string(name) + " volume " + std::to_string(i) + " is " +
                                        shape_str(split.volumes[i].shape()) + ", model input is " + dims_str(dims));
        }
        if (split.targets[i] >= classes) throw std::invalid_argument("target index out of range");
    }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg) {
    if (cfg.optimizer == OptimizerKind::radam) {
        RAdamOptions o;
        o.lr = cfg.initial_lr;
        return std::make_unique<RAdam>(o);
    }
    return std::make_unique<SgdMomentum>(SgdOptions{cfg.initial_lr, cfg.momentum});
}

std::vector<std::size_t> class_counts(const LabeledVolumes& d, std::size_t classes) {
    std::vector<std::size_t> counts(classes, 0);
    for (std::size_t t : d.targets) ++counts[t];
    return counts;
}

}  // namespace

// --- training -----------------------------------------------------------------

TrainResult train(const TrainConfig& cfg, const TrainData& data, const EpochCallback& on_epoch) {
    cfg.validate();
    const ModelSpec spec = cfg.model_spec();
    const std::size_t K = spec.output_classes;
    if (data.labels.size() != K) {
        throw std::invalid_argument("dataset has " + std::to_string(data.labels.size()) + " classes, the " +
                                    std::string(variant_name(cfg.task)) + " model has " + std::to_string(K));
    }
    check_split(data.train, "train", cfg.input_dims, K);
    check_split(data.validation, "validation", cfg.input_dims, K);

    const Rng root(cfg.seed);
    Rng init_rng = root.derive("init");
    Model<float> model(spec, init_rng);
    auto optimizer = make_optimizer(cfg);
    const ClassWeights weights = cfg.class_weights == ClassWeightMode::balanced
                                     ? class_weights_from_counts(class_counts(data.train, K))
                                     : ClassWeights::uniform(K);
    const ParamList trainable = model.trainable_parameters();
    const ParamList all = model.parameters();

    EpochController ctl(cfg);
    const std::size_t n = data.train.volumes.size();
    std::vector<std::size_t> order(n);

    for (bool stop = false; !stop;) {
        const int epoch = ctl.next_epoch();
        const auto t0 = std::chrono::steady_clock::now();
        optimizer->set_lr(ctl.lr());

        // Each epoch restarts from the identity order so the permutation
        // depends only on (seed, epoch).
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle_rng = root.derive("shuffle").derive(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        Rng dropout_rng = root.derive("dropout").derive(static_cast<std::uint64_t>(epoch));
        const Rng aug_root = root.derive("augment").derive(static_cast<std::uint64_t>(epoch));
        auto fetch = [&](std::size_t idx) {
            if (!cfg.augment) return data.train.volumes[idx];
            Rng r = aug_root.derive(static_cast<std::uint64_t>(idx));
            return apply_pipeline(data.train.volumes[idx], r, cfg.augmentation);
        };

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::span<const std::size_t> idx(order.data() + start, std::min(cfg.batch_size, n - start));
            const Tensor batch = make_batch(data.train, idx, fetch);
            std::vector<std::size_t> targets;
            for (std::size_t i : idx) targets.push_back(data.train.targets[i]);

            const Tensor probs = model.forward(batch, Mode::train, dropout_rng);
            const auto cce = weighted_cce(probs, one_hot<float>(targets, K), weights);
            loss_sum += (cce.loss + model.l2_penalty()) * static_cast<double>(idx.size());
            model.zero_grad();
            model.backward(cce.grad_logits);
            optimizer->step(trainable);
        }

        const EvalReport val = evaluate(model, data.validation, data.labels, cfg.batch_size, weights);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.val_loss = val.loss;
        rec.val_macro_f1 = val.macro_f1;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        stop = ctl.end_epoch(rec, all);
        if (on_epoch) on_epoch(ctl.log().epochs.back());
    }

    if (ctl.stopper().has_snapshot()) ctl.stopper().restore(all);
    Checkpoint ckpt = checkpoint_from_model(model);
    for (auto& t : optimizer->state(trainable)) ckpt.tensors.push_back(std::move(t));
    return {std::move(model), ctl.log(), std::move(ckpt)};
}

void save_run(const fs::path& out_dir, const TrainConfig& cfg, const TrainResult& result) {
    fs::create_directories(out_dir);
    write_checkpoint(out_dir / "checkpoint.miac", result.checkpoint);
    const std::string log = result.log.to_tsv(true);
    binio::write_file(out_dir / "runlog.tsv", std::vector<char>(log.begin(), log.end()));
    const std::string conf = format_train_config(cfg);
    binio::write_file(out_dir / "config.txt", std::vector<char>(conf.begin(), conf.end()));
}

// --- evaluation and prediction ------------------------------------------------

EvalReport evaluate(Model<float>& model, const LabeledVolumes& data, const std::vector<std::string>& labels,
                    std::size_t batch_size, const ClassWeights& weights) {
    const std::size_t K = model.spec().output_classes;
    if (labels.size() != K) throw LabelSpaceError("model predicts " + std::to_string(K) + " classes, data has " +
                                                  std::to_string(labels.size()));
    check_split(data, "evaluation", model.spec().input_dims, K);
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    const ClassWeights w = weights.size() ? weights : ClassWeights::uniform(K);
    if (w.size() != K) throw std::invalid_argument("class weight count does not match the model");

    ConfusionMatrix cm(K);
    double loss_sum = 0.0;
    std::vector<std::size_t> all(data.volumes.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto fetch = [&](std::size_t i) { return data.volumes[i]; };
    for (std::size_t start = 0; start < all.size(); start += batch_size) {
        const std::span<const std::size_t> idx(all.data() + start, std::min(batch_size, all.size() - start));
        const Tensor probs = model.predict(make_batch(data, idx, fetch));
        std::vector<std::size_t> targets(data.targets.begin() + static_cast<std::ptrdiff_t>(start),
                                         data.targets.begin() + static_cast<std::ptrdiff_t>(start + idx.size()));
        loss_sum += weighted_cce(probs, one_hot<float>(targets, K), w).loss * static_cast<double>(idx.size());
        const auto pred = argmax_rows(probs);
        for (std::size_t b = 0; b < idx.size(); ++b) cm.add(targets[b], pred[b]);
    }
    const double loss = loss_sum / static_cast<double>(all.size()) + model.l2_penalty();
    return make_report(cm, loss, labels);
}

EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const fs::path& index_path, Split split) {
    Model<float> model = model_from_checkpoint(ckpt);
    const auto labels = label_space(ckpt.variant);
    if (labels.size() != model.spec().output_classes) {
        throw LabelSpaceError("checkpoint output layer has " + std::to_string(model.spec().output_classes) +
                              " classes but its task '" + std::string(variant_name(ckpt.variant)) + "' has " +
                              std::to_string(labels.size()));
    }
    for (const auto& e : read_index_entries(index_path)) {
        if (std::find(labels.begin(), labels.end(), e.label) == labels.end()) {
            throw LabelSpaceError("index label '" + e.label + "' is not a class of the " +
                                  std::string(variant_name(ckpt.variant)) + " checkpoint");
        }
    }
    const DatasetIndex index = load_index(index_path, split, ckpt.variant);
    if (index.samples.empty()) {
        throw std::invalid_argument("index has no " + std::string(split_name(split)) + " samples");
    }
    return evaluate(model, load_split(index, model.spec().input_dims), labels);
}

Prediction predict(Model<float>& model, const Volume& vol) {
    const Dims dims = model.spec().input_dims;
    Volume v = vol.dims() == dims ? vol : resample_volume(vol, dims);
    v = normalize(std::move(v));
    const Tensor batch = v.voxels.reshaped({1, 1, dims.d, dims.h, dims.w});
    const Tensor probs = model.predict(batch);
    Prediction p;
    p.class_index = argmax_rows(probs)[0];
    for (float q : probs.data()) p.probabilities.push_back(q);
    p.label = label_space(model.spec().variant).at(p.class_index);
    return p;
}

std::string format_prediction(const Prediction& p, const std::vector<std::string>& labels) {
    std::string out = "class = " + p.label + "\nclass_index = " + std::to_string(p.class_index) + "\n";
    for (std::size_t c = 0; c < p.probabilities.size(); ++c) {
        out += "p." + labels.at(c) + " = " + format_double(p.probabilities[c]) + "\n";
    }
    return out;
}

}  // namespace mia
