#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mia/augment.hpp"
#include "mia/checkpoint.hpp"
#include "mia/losses.hpp"
#include "mia/model.hpp"
#include "mia/optim.hpp"
#include "mia/volio.hpp"

namespace mia {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checkpoint classes and dataset labels disagree.
class LabelSpaceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class OptimizerKind { radam, sgd_momentum };
enum class ClassWeightMode { none, balanced };

std::string_view optimizer_name(OptimizerKind k);
std::string_view class_weight_mode_name(ClassWeightMode m);

struct TrainConfig {
    Variant task = Variant::detection;
    std::size_t batch_size = 5;
    OptimizerKind optimizer = OptimizerKind::radam;
    double initial_lr = 1e-4;
    double momentum = 0.9;  // sgd_momentum only
    double scheduler_factor = 0.5;
    int scheduler_patience = 20;
    int early_stop_patience = 80;
    int max_epochs = 500;
    /// Stop as soon as validation macro F1 reaches this value.
    std::optional<double> stop_at_metric;
    bool augment = true;
    AugmentConfig augmentation;
    ClassWeightMode class_weights = ClassWeightMode::balanced;
    std::uint64_t seed = 0;

    // Architecture; defaults to the standard network for `task`.
    Dims input_dims = kDefaultInputDims;
    std::optional<std::vector<std::size_t>> conv_filters;
    std::optional<std::vector<double>> conv_l2;
    std::optional<std::vector<std::size_t>> fc_units;
    std::optional<bool> block_batchnorm;
    std::optional<bool> block_dropout;
    std::optional<double> dropout_rate;

    static TrainConfig defaults(Variant task);
    ModelSpec model_spec() const;
    void validate() const;
};

/// Flat `key = value` lines; '#' starts a comment. `task` is applied first so
/// its defaults can be overridden by the remaining keys. Unknown keys, repeated
/// keys and malformed values raise ConfigError.
TrainConfig parse_train_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);
std::string format_train_config(const TrainConfig& cfg);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_macro_f1 = 0.0;
    double lr = 0.0;  // rate used during this epoch
    double wall_seconds = 0.0;
};

struct RunLog {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_metric = 0.0;
    std::string stop_reason;

    /// Tab-separated table plus `# key = value` trailer lines. Floats use the
    /// shortest round-trip decimal form; the wall-time column is omitted when
    /// `with_wall_time` is false.
    std::string to_tsv(bool with_wall_time = true) const;
};

/// Per-epoch control flow shared by training and scripted tests: record the
/// epoch, run the early-stop check, then update the scheduler.
class EpochController {
public:
    explicit EpochController(const TrainConfig& cfg);

    /// Returns true when training should stop after this epoch.
    bool end_epoch(EpochRecord record, const ParamList& snapshot_params = {});

    double lr() const noexcept { return scheduler_.lr(); }
    int next_epoch() const noexcept { return static_cast<int>(log_.epochs.size()) + 1; }
    const RunLog& log() const noexcept { return log_; }
    const EarlyStopper& stopper() const noexcept { return stopper_; }
    const PlateauScheduler& scheduler() const noexcept { return scheduler_; }

private:
    PlateauScheduler scheduler_;
    EarlyStopper stopper_;
    int patience_;
    std::optional<double> stop_at_;
    RunLog log_;
};

/// Volumes at the network input size, intensities 0-255.
struct LabeledVolumes {
    std::vector<Tensor> volumes;
    std::vector<std::size_t> targets;
    std::vector<std::string> ids;
};

struct TrainData {
    std::vector<std::string> labels;
    LabeledVolumes train;
    LabeledVolumes validation;
};

/// Loads one split of an index, resampling every volume to `dims`.
LabeledVolumes load_split(const DatasetIndex& index, Dims dims);
TrainData load_train_data(const std::filesystem::path& index_path, Variant variant, Dims dims);
TrainData from_synthetic(const SyntheticDataset& train, const SyntheticDataset& validation);

struct TrainResult {
    Model<float> model;
    RunLog log;
    Checkpoint checkpoint;  // best weights plus optimizer state
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const TrainConfig& cfg, const TrainData& data, const EpochCallback& on_epoch = {});

/// Writes `checkpoint.miac`, `runlog.tsv` and `config.txt` under `out_dir`.
void save_run(const std::filesystem::path& out_dir, const TrainConfig& cfg, const TrainResult& result);

/// Inference-mode pass over `data`; the loss uses `weights` (uniform if empty).
EvalReport evaluate(Model<float>& model, const LabeledVolumes& data, const std::vector<std::string>& labels,
                    std::size_t batch_size = 5, const ClassWeights& weights = {});
/// Loads `split` from an index and evaluates a checkpoint on it. Throws before
/// producing any report when the checkpoint and index label spaces differ.
EvalReport evaluate_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& index_path, Split split);

struct Prediction {
    std::size_t class_index = 0;
    std::string label;
    std::vector<double> probabilities;
};

/// Resample to the model input size, scale to [0, 1], forward, argmax (ties
/// go to the lower class index).
Prediction predict(Model<float>& model, const Volume& vol);
std::string format_prediction(const Prediction& p, const std::vector<std::string>& labels);

struct PreprocessItem {
    std::filesystem::path source;  // slice directory or MIAV file
    std::filesystem::path relative_output;
    std::string label;
};

/// Scans `<in>/<split>/<class>/<scan>` entries (slice directories or .miav
/// files) in natural order.
std::vector<PreprocessItem> scan_dataset_tree(const std::filesystem::path& in);

/// Resamples every item to `dims` and writes `<out>/<split>/<class>/<scan>.miav`
/// plus `<out>/index.tsv`. At most `jobs` samples are processed at once; the
/// output does not depend on `jobs`. Returns the index path.
std::filesystem::path preprocess_dataset(const std::filesystem::path& in, const std::filesystem::path& out, Dims dims,
                                         std::size_t jobs);

}  // namespace mia
