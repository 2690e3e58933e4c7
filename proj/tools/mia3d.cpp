// mia3d: command-line front end for training, evaluation and data preparation.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>

#include "mia/augment.hpp"
#include "mia/checkpoint.hpp"
#include "mia/format.hpp"
#include "mia/kernels.hpp"
#include "mia/trainer.hpp"
#include "mia/volio.hpp"

namespace fs = std::filesystem;
using namespace mia;

namespace {

std::string one_line(std::string s) {
    for (char& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

int fail(std::string_view category, const std::string& message) {
    std::cerr << "error: " << category << ": " << one_line(message) << '\n';
    return 1;
}

std::string slice_name(std::size_t d) {
    std::string n = std::to_string(d);
    if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
    return "slice_" + n + ".pgm";
}

void write_slices(const Tensor& vol, const fs::path& dir) {
    fs::create_directories(dir);
    const std::size_t h = vol.dim(1), w = vol.dim(2);
    for (std::size_t d = 0; d < vol.dim(0); ++d) {
        Tensor slice({h, w});
        std::copy(vol.raw() + d * h * w, vol.raw() + (d + 1) * h * w, slice.raw());
        write_pgm(dir / slice_name(d), slice);
    }
}

struct Args {
    fs::path config, data, out, checkpoint, input, in;
    std::string split = "validation";
    std::string dims;
    std::string task = "detection";
    std::uint64_t seed = 0;
    std::size_t per_class = 10;
    std::size_t val_per_class = 0;
    std::size_t jobs = 1;
    bool quiet = false;
    bool no_reference = false;
};

int run_train(const Args& a) {
    TrainConfig cfg = load_train_config(a.config);
    const TrainData data = load_train_data(a.data, cfg.task, cfg.input_dims);
    std::cout << "training " << variant_name(cfg.task) << " model: " << data.train.volumes.size() << " train / "
              << data.validation.volumes.size() << " validation volumes, kernels " << kernels::isa_name(kernels::active_isa()) << '\n';
    auto report = [&](const EpochRecord& r) {
        if (a.quiet) return;
        std::cout << "epoch " << r.epoch << "  train_loss " << format_fixed(r.train_loss, 5) << "  val_loss "
                  << format_fixed(r.val_loss, 5) << "  val_macro_f1 " << format_fixed(r.val_macro_f1, 4) << "  lr "
                  << format_double(r.lr) << "  " << format_fixed(r.wall_seconds, 2) << "s" << std::endl;
    };
    const TrainResult result = train(cfg, data, report);
    save_run(a.out, cfg, result);
    std::cout << "best_epoch = " << result.log.best_epoch << "\nbest_val_macro_f1 = "
              << format_double(result.log.best_metric) << "\nstop_reason = " << result.log.stop_reason
              << "\ncheckpoint = " << (a.out / "checkpoint.miac").string() << '\n';
    return 0;
}

int run_evaluate(const Args& a) {
    const Checkpoint ckpt = read_checkpoint(a.checkpoint);
    const EvalReport report = evaluate_checkpoint(ckpt, a.data, parse_split(a.split));
    std::cout << report.to_text(!a.no_reference);
    return 0;
}

int run_predict(const Args& a) {
    const Checkpoint ckpt = read_checkpoint(a.checkpoint);
    Model<float> model = model_from_checkpoint(ckpt);
    const Prediction p = predict(model, load_volume(a.input));
    std::cout << format_prediction(p, label_space(ckpt.variant));
    return 0;
}

int run_preprocess(const Args& a) {
    const Dims dims = a.dims.empty() ? kDefaultInputDims : parse_dims(a.dims);
    const fs::path index = preprocess_dataset(a.in, a.out, dims, a.jobs);
    std::cout << "index = " << index.string() << '\n';
    return 0;
}

int run_augment_preview(const Args& a) {
    const Volume vol = load_volume(a.input);
    Rng rng(a.seed);
    const AugmentConfig cfg;
    const AugPlan plan = plan_pipeline(rng, cfg, vol.voxels.dim(1), vol.voxels.dim(2));
    const Tensor after = apply_plan(vol.voxels, plan, cfg);
    write_slices(vol.voxels, a.out / "before");
    write_slices(after, a.out / "after");
    std::cout << "plan = " << plan.describe() << '\n';
    return 0;
}

int run_synth(const Args& a) {
    const Dims dims = a.dims.empty() ? Dims{16, 32, 32} : parse_dims(a.dims);
    const std::size_t val = a.val_per_class ? a.val_per_class : std::max<std::size_t>(1, a.per_class / 2);
    const fs::path index = write_synthetic_dataset(a.out, a.per_class, val, dims, a.seed, parse_variant(a.task));
    std::cout << "index = " << index.string() << '\n';
    return 0;
}

int run_summary(const Args& a) {
    const Variant v = parse_variant(a.task);
    const Dims dims = a.dims.empty() ? kDefaultInputDims : parse_dims(a.dims);
    const Model<float> model(v == Variant::detection ? ModelSpec::detection(dims) : ModelSpec::severity(dims));
    for (const auto& l : model.summary()) {
        std::cout << l.name << '\t' << l.kind << '\t' << shape_str(l.output_shape) << '\t' << l.parameters << '\n';
    }
    std::cout << "trainable_parameters = " << model.trainable_parameter_count() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D CNN training and inference for chest CT volumes"};
    app.require_subcommand(1);
    Args a;

    auto* train_cmd = app.add_subcommand("train", "Train a model from a config file and a dataset index");
    train_cmd->add_option("--config", a.config, "Config file (key = value)")->required();
    train_cmd->add_option("--data", a.data, "Dataset index (path<TAB>label)")->required();
    train_cmd->add_option("--out", a.out, "Output directory")->required();
    train_cmd->add_flag("--quiet", a.quiet, "Do not print per-epoch lines");

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on one split of an index");
    eval_cmd->add_option("--checkpoint", a.checkpoint)->required();
    eval_cmd->add_option("--data", a.data)->required();
    eval_cmd->add_option("--split", a.split, "train or validation")->capture_default_str();
    eval_cmd->add_flag("--no-reference", a.no_reference, "Omit the reference footer");

    auto* predict_cmd = app.add_subcommand("predict", "Classify one volume");
    predict_cmd->add_option("--checkpoint", a.checkpoint)->required();
    predict_cmd->add_option("--input", a.input, "MIAV file or slice directory")->required();

    auto* pre_cmd = app.add_subcommand("preprocess", "Resample a <split>/<class>/<scan> tree to MIAV volumes");
    pre_cmd->add_option("--in", a.in)->required();
    pre_cmd->add_option("--out", a.out)->required();
    pre_cmd->add_option("--dims", a.dims, "Target DxHxW (default 64x224x224)");
    pre_cmd->add_option("--jobs", a.jobs, "Samples processed concurrently")->check(CLI::PositiveNumber);

    auto* aug_cmd = app.add_subcommand("augment-preview", "Write PGM slices before and after one augmentation draw");
    aug_cmd->add_option("--input", a.input)->required();
    aug_cmd->add_option("--seed", a.seed)->required();
    aug_cmd->add_option("--out", a.out)->required();

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with an index");
    synth_cmd->add_option("--per-class", a.per_class, "Training volumes per class")->required();
    synth_cmd->add_option("--val-per-class", a.val_per_class, "Validation volumes per class (default per-class/2)");
    synth_cmd->add_option("--dims", a.dims, "DxHxW (default 16x32x32)");
    synth_cmd->add_option("--seed", a.seed)->required();
    synth_cmd->add_option("--task", a.task, "detection or severity")->capture_default_str();
    synth_cmd->add_option("--out", a.out)->required();

    auto* summary_cmd = app.add_subcommand("summary", "Print the layer table of a default architecture");
    summary_cmd->add_option("--task", a.task, "detection or severity")->capture_default_str();
    summary_cmd->add_option("--dims", a.dims, "Input DxHxW (default 64x224x224)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << one_line(e.what()) << '\n';
        return 2;
    }

    try {
        if (*train_cmd) return run_train(a);
        if (*eval_cmd) return run_evaluate(a);
        if (*predict_cmd) return run_predict(a);
        if (*pre_cmd) return run_preprocess(a);
        if (*aug_cmd) return run_augment_preview(a);
        if (*synth_cmd) return run_synth(a);
        if (*summary_cmd) return run_summary(a);
    } catch (const ConfigError& e) {
        return fail("config", e.what());
    } catch (const LabelSpaceError& e) {
        return fail("label-space", e.what());
    } catch (const FormatError& e) {
        return fail("format", e.what());
    } catch (const IoError& e) {
        return fail("io", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail("io", e.what());
    } catch (const std::invalid_argument& e) {
        return fail("invalid-argument", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}
