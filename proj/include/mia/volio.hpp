#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mia/errors.hpp"
#include "mia/model.hpp"
#include "mia/tensor.hpp"

namespace mia {

enum class IntensityScale : std::uint8_t { raw255, normalized01 };

/// A CT scan as a (D, H, W) voxel grid.
struct Volume {
    Tensor voxels;
    IntensityScale scale = IntensityScale::raw255;
    std::string source_id;

    Dims dims() const { return {voxels.dim(0), voxels.dim(1), voxels.dim(2)}; }
};

// --- slice images -----------------------------------------------------------

/// Reads a binary (P5) or ASCII (P2) PGM as an (H, W) tensor mapped to [0, 255].
Tensor read_pgm(const std::filesystem::path& path);
/// Writes an (H, W) tensor as an 8-bit P5 PGM, rounding and clamping to [0, 255].
void write_pgm(const std::filesystem::path& path, const Tensor& slice);

/// Filename order where digit runs compare numerically ("2" < "10").
bool natural_less(std::string_view a, std::string_view b);

/// Stacks every non-hidden file of `dir` (natural filename order) along depth.
Volume load_slice_stack(const std::filesystem::path& dir);

// --- resampling -------------------------------------------------------------

/// Separable natural cubic-spline interpolation of a (D, H, W) tensor.
/// Destination index j samples source coordinate (j + 0.5) * n / m - 0.5,
/// clamped to [0, n - 1]. Output is clamped to [0, 255].
Tensor resample_cubic(const Tensor& vol, Dims target, bool clamp255 = true);
Volume resample_volume(const Volume& vol, Dims target = kDefaultInputDims);

/// Natural cubic spline through (i, values[i]) sampled at `positions`.
std::vector<double> spline_sample(const std::vector<double>& values, const std::vector<double>& positions);

// --- MIAV binary volume format ------------------------------------------------

/// "MIAV" | version u32 (1) | dtype u8 (0 = f32) | D, H, W u32 | D*H*W f32,
/// little-endian.
void write_miav(const Volume& vol, const std::filesystem::path& path);
Volume read_miav(const std::filesystem::path& path);
std::vector<char> encode_miav(const Volume& vol);
Volume decode_miav(const std::vector<char>& bytes, std::string source_id = {});

/// A MIAV file or a slice-stack directory.
Volume load_volume(const std::filesystem::path& path);
/// Divides raw 0-255 intensities by 255.
Volume normalize(Volume vol);

// --- dataset index ----------------------------------------------------------

enum class Split { train, validation };
std::string_view split_name(Split s);
Split parse_split(std::string_view name);

std::vector<std::string> label_space(Variant variant);

struct Sample {
    std::filesystem::path path;
    std::string label;
    std::size_t label_index = 0;
};

struct DatasetIndex {
    Split split = Split::train;
    std::vector<std::string> labels;  // label space, index = class id
    std::vector<Sample> samples;

    std::vector<std::size_t> class_counts() const;
};

struct IndexEntry {
    std::filesystem::path path;  // as written in the file
    std::string label;
};

/// One `path<TAB>label` line per sample, UTF-8.
void write_index(const std::filesystem::path& path, const std::vector<IndexEntry>& entries);
std::vector<IndexEntry> read_index_entries(const std::filesystem::path& path);

/// Loads the entries of `split` from an index file. The split of an entry is
/// the first path component named `train`, `validation` or `val`; relative
/// paths resolve against the index file's directory. Labels outside the
/// variant's label space are rejected.
DatasetIndex load_index(const std::filesystem::path& index_path, Split split, Variant variant);

// --- synthetic data -----------------------------------------------------------

struct SyntheticDataset {
    DatasetIndex index;
    std::vector<Volume> volumes;  // parallel to index.samples, raw255
};

/// Smooth low-frequency backgrounds; abnormal classes add bright ellipsoidal
/// blobs (1-5 for detection; count and size grow with severity class).
/// Fully determined by (seed, split).
SyntheticDataset generate_synthetic_dataset(std::size_t n_per_class, Dims dims, std::uint64_t seed,
                                            Variant variant = Variant::detection, Split split = Split::train);

/// Writes `<out>/<split>/<label>/<id>.miav` for both splits and `<out>/index.tsv`.
/// Returns the index path.
std::filesystem::path write_synthetic_dataset(const std::filesystem::path& out, std::size_t n_per_class,
                                              std::size_t n_validation_per_class, Dims dims, std::uint64_t seed,
                                              Variant variant = Variant::detection);

}  // namespace mia
