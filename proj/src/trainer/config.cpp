#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "mia/format.hpp"
#include "mia/trainer.hpp"

namespace mia {

std::string_view optimizer_name(OptimizerKind k) { return k == OptimizerKind::radam ? "radam" : "sgd_momentum"; }

std::string_view class_weight_mode_name(ClassWeightMode m) { return m == ClassWeightMode::none ? "none" : "balanced"; }

TrainConfig TrainConfig::defaults(Variant task) {
    TrainConfig c;
    c.task = task;
    if (task == Variant::severity) {
        c.optimizer = OptimizerKind::sgd_momentum;
        c.early_stop_patience = 50;
        c.max_epochs = 1000;
    }
    return c;
}

ModelSpec TrainConfig::model_spec() const {
    ModelSpec s = task == Variant::detection ? ModelSpec::detection(input_dims) : ModelSpec::severity(input_dims);
    if (conv_filters) {
        std::vector<ConvBlockSpec> blocks;
        for (std::size_t i = 0; i < conv_filters->size(); ++i) {
            ConvBlockSpec b = i < s.conv_blocks.size() ? s.conv_blocks[i] : s.conv_blocks.back();
            b.filters = (*conv_filters)[i];
            blocks.push_back(b);
        }
        s.conv_blocks = std::move(blocks);
    }
    if (conv_l2) {
        if (conv_l2->size() != 1 && conv_l2->size() != s.conv_blocks.size()) {
            throw ConfigError("conv_l2 needs 1 or " + std::to_string(s.conv_blocks.size()) + " values, got " +
                              std::to_string(conv_l2->size()));
        }
        for (std::size_t i = 0; i < s.conv_blocks.size(); ++i) {
            s.conv_blocks[i].l2_weight = (*conv_l2)[conv_l2->size() == 1 ? 0 : i];
        }
    }
    for (auto& b : s.conv_blocks) {
        if (block_batchnorm) b.batchnorm = *block_batchnorm;
        if (block_dropout) b.dropout = *block_dropout;
    }
    if (fc_units) s.fc_units = *fc_units;
    if (dropout_rate) s.dropout_rate = *dropout_rate;
    return s;
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(initial_lr > 0.0)) throw ConfigError("lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
    if (!(scheduler_factor > 0.0 && scheduler_factor < 1.0)) throw ConfigError("scheduler_factor must be in (0, 1)");
    if (scheduler_patience < 1) throw ConfigError("scheduler_patience must be at least 1");
    if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be at least 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    try {
        augmentation.validate();
        model_spec().validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("invalid value '" + value + "' for '" + key + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

template <typename I>
I to_int(const std::string& key, const std::string& v) {
    I out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "off" || v == "0" || v == "no") return false;
    bad_value(key, v, "true or false");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

template <typename F>
auto to_list(const std::string& key, const std::string& v, F conv) {
    std::vector<decltype(conv(key, v))> out;
    for (const auto& item : split_list(v)) out.push_back(conv(key, item));
    if (out.empty()) bad_value(key, v, "a comma-separated list");
    return out;
}

std::string join(const auto& values, auto fmt) {
    std::string out;
    for (const auto& v : values) out += (out.empty() ? "" : ",") + fmt(v);
    return out;
}

using Setter = void (*)(TrainConfig&, const std::string&, const std::string&);

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = to_int<std::size_t>(k, v); }},
        {"optimizer",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             if (v == "radam") c.optimizer = OptimizerKind::radam;
             else if (v == "sgd_momentum") c.optimizer = OptimizerKind::sgd_momentum;
             else bad_value(k, v, "radam or sgd_momentum");
         }},
        {"lr", [](TrainConfig& c, const std::string& k, const std::string& v) { c.initial_lr = to_double(k, v); }},
        {"momentum", [](TrainConfig& c, const std::string& k, const std::string& v) { c.momentum = to_double(k, v); }},
        {"scheduler_factor", [](TrainConfig& c, const std::string& k, const std::string& v) { c.scheduler_factor = to_double(k, v); }},
        {"scheduler_patience", [](TrainConfig& c, const std::string& k, const std::string& v) { c.scheduler_patience = to_int<int>(k, v); }},
        {"early_stop_patience", [](TrainConfig& c, const std::string& k, const std::string& v) { c.early_stop_patience = to_int<int>(k, v); }},
        {"max_epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.max_epochs = to_int<int>(k, v); }},
        {"stop_at_metric", [](TrainConfig& c, const std::string& k, const std::string& v) { c.stop_at_metric = to_double(k, v); }},
        {"augment", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augment = to_bool(k, v); }},
        {"augment_gate_rate", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augmentation.gate_rate = to_double(k, v); }},
        {"augment_gate_rotation_cutout",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.augmentation.gate_rotation_cutout = to_bool(k, v); }},
        {"augment_rotation", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augmentation.rotation_enabled = to_bool(k, v); }},
        {"augment_cutout", [](TrainConfig& c, const std::string& k, const std::string& v) { c.augmentation.cutout_enabled = to_bool(k, v); }},
        {"class_weights",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             if (v == "balanced") c.class_weights = ClassWeightMode::balanced;
             else if (v == "none") c.class_weights = ClassWeightMode::none;
             else bad_value(k, v, "balanced or none");
         }},
        {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = to_int<std::uint64_t>(k, v); }},
        {"input_dims",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             try {
                 c.input_dims = parse_dims(v);
             } catch (const std::invalid_argument&) {
                 bad_value(k, v, "DxHxW");
             }
         }},
        {"conv_filters",
         [](TrainConfig& c, const std::string& k, const std::string& v) { c.conv_filters = to_list(k, v, to_int<std::size_t>); }},
        {"conv_l2", [](TrainConfig& c, const std::string& k, const std::string& v) { c.conv_l2 = to_list(k, v, to_double); }},
        {"fc_units", [](TrainConfig& c, const std::string& k, const std::string& v) {
             c.fc_units = v == "none" ? std::vector<std::size_t>{} : to_list(k, v, to_int<std::size_t>);
         }},
        {"block_batchnorm", [](TrainConfig& c, const std::string& k, const std::string& v) { c.block_batchnorm = to_bool(k, v); }},
        {"block_dropout", [](TrainConfig& c, const std::string& k, const std::string& v) { c.block_dropout = to_bool(k, v); }},
        {"dropout_rate", [](TrainConfig& c, const std::string& k, const std::string& v) { c.dropout_rate = to_double(k, v); }},
    };
    return table;
}

}  // namespace

TrainConfig parse_train_config(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> pairs;
    std::map<std::string, std::size_t, std::less<>> line_of;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected `key = value`");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": missing key");
        if (key != "task" && !setters().count(key)) {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!line_of.emplace(key, lineno).second) {
            throw ConfigError("line " + std::to_string(lineno) + ": '" + key + "' already set on line " +
                              std::to_string(line_of[key]));
        }
        pairs.emplace_back(std::move(key), std::move(value));
    }

    TrainConfig cfg;
    for (const auto& [k, v] : pairs) {
        if (k != "task") continue;
        try {
            cfg = TrainConfig::defaults(parse_variant(v));
        } catch (const std::invalid_argument&) {
            bad_value(k, v, "detection or severity");
        }
    }
    for (const auto& [k, v] : pairs) {
        if (k != "task") setters().find(k)->second(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_train_config(ss.str());
}

std::string format_train_config(const TrainConfig& c) {
    auto num = [](double v) { return format_double(v); };
    auto uint = [](std::size_t v) { return std::to_string(v); };
    auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
    std::string out;
    auto put = [&](std::string_view k, const std::string& v) { out += std::string(k) + " = " + v + "\n"; };
    put("task", std::string(variant_name(c.task)));
    put("batch_size", uint(c.batch_size));
    put("optimizer", std::string(optimizer_name(c.optimizer)));
    put("lr", num(c.initial_lr));
    put("momentum", num(c.momentum));
    put("scheduler_factor", num(c.scheduler_factor));
    put("scheduler_patience", std::to_string(c.scheduler_patience));
    put("early_stop_patience", std::to_string(c.early_stop_patience));
    put("max_epochs", std::to_string(c.max_epochs));
    if (c.stop_at_metric) put("stop_at_metric", num(*c.stop_at_metric));
    put("augment", flag(c.augment));
    put("augment_gate_rate", num(c.augmentation.gate_rate));
    put("augment_gate_rotation_cutout", flag(c.augmentation.gate_rotation_cutout));
    put("augment_rotation", flag(c.augmentation.rotation_enabled));
    put("augment_cutout", flag(c.augmentation.cutout_enabled));
    put("class_weights", std::string(class_weight_mode_name(c.class_weights)));
    put("seed", std::to_string(c.seed));
    put("input_dims", dims_str(c.input_dims));
    if (c.conv_filters) put("conv_filters", join(*c.conv_filters, uint));
    if (c.conv_l2) put("conv_l2", join(*c.conv_l2, num));
    if (c.fc_units) put("fc_units", c.fc_units->empty() ? std::string("none") : join(*c.fc_units, uint));
    if (c.block_batchnorm) put("block_batchnorm", flag(*c.block_batchnorm));
    if (c.block_dropout) put("block_dropout", flag(*c.block_dropout));
    if (c.dropout_rate) put("dropout_rate", num(*c.dropout_rate));
    return out;
}

}  // namespace mia
