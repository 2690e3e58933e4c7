#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mia/errors.hpp"
#include "mia/model.hpp"
#include "mia/tensor.hpp"

namespace mia {

struct NamedTensor {
    std::string name;
    Tensor value;

    friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

/// Checkpoint file, little-endian:
///   "MIAC" | version u32 | variant u8 | count u32 |
///   count x { name_len u16 | name bytes | rank u8 | extents u32 x rank | f32 payload }
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    Variant variant = Variant::detection;
    std::vector<NamedTensor> tensors;

    const Tensor* find(std::string_view name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

std::vector<char> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<char>& bytes);

/// Model parameters plus `meta.*` tensors holding the spec fields that are not
/// recoverable from parameter shapes (input dims, L2 factors, block flags).
Checkpoint checkpoint_from_model(const Model<float>& model);
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace mia
