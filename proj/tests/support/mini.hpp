#pragma once

#include "mia/trainer.hpp"

namespace mia::testing {

/// Three-block detection network small enough to train on 16x32x32 volumes
/// in seconds per epoch.
inline TrainConfig mini_config(Dims dims = {16, 32, 32}) {
    TrainConfig c = TrainConfig::defaults(Variant::detection);
    c.input_dims = dims;
    c.conv_filters = std::vector<std::size_t>{8, 16, 32};
    c.conv_l2 = std::vector<double>{0.001};
    c.fc_units = std::vector<std::size_t>{32};
    return c;
}

/// Overfit smoke setup: no dropout, no augmentation, larger step, and the
/// training set doubles as the validation set.
inline TrainConfig overfit_config() {
    TrainConfig c = mini_config();
    c.dropout_rate = 0.0;
    c.initial_lr = 1e-3;
    c.augment = false;
    c.max_epochs = 200;
    c.stop_at_metric = 1.0;
    c.seed = 1;
    return c;
}

inline TrainData overfit_data() {
    const auto tr = generate_synthetic_dataset(20, {16, 32, 32}, 7, Variant::detection, Split::train);
    return from_synthetic(tr, tr);
}

}  // namespace mia::testing
