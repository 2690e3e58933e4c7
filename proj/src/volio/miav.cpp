#include <limits>

#include "binio.hpp"
#include "mia/volio.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {
constexpr std::string_view kMagic = "MIAV";
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;
}  // namespace

std::vector<char> encode_miav(const Volume& vol) {
    if (vol.voxels.rank() != 3) throw std::invalid_argument("MIAV volumes must be (D,H,W)");
    binio::Writer w;
    w.bytes(kMagic);
    w.put<std::uint32_t>(kVersion);
    w.put<std::uint8_t>(kDtypeF32);
    for (std::size_t a = 0; a < 3; ++a) {
        if (vol.voxels.dim(a) > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("extent too large");
        w.put<std::uint32_t>(static_cast<std::uint32_t>(vol.voxels.dim(a)));
    }
    w.floats(vol.voxels.raw(), vol.voxels.size());
    return std::move(w.buffer());
}

Volume decode_miav(const std::vector<char>& bytes, std::string source_id) {
    binio::Reader r(bytes, "MIAV");
    if (!r.has(4) || r.bytes(4) != kMagic) throw FormatError(FormatError::Kind::bad_magic, "not a MIAV file");
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) {
        throw FormatError(FormatError::Kind::version_mismatch, "unsupported MIAV version " + std::to_string(version));
    }
    const auto dtype = r.get<std::uint8_t>();
    if (dtype != kDtypeF32) throw FormatError(FormatError::Kind::invalid, "unsupported MIAV dtype " + std::to_string(dtype));
    Shape shape(3);
    for (auto& e : shape) {
        e = r.get<std::uint32_t>();
        if (e == 0) throw FormatError(FormatError::Kind::invalid, "MIAV volume has a zero extent");
    }
    const std::size_t numel = shape[0] * shape[1] * shape[2];
    if (numel > r.remaining() / sizeof(float) || r.remaining() != numel * sizeof(float)) {
        if (numel > r.remaining() / sizeof(float)) {
            throw FormatError(FormatError::Kind::truncated, "MIAV: header declares " + std::to_string(numel) +
                                                                " voxels but the file is shorter");
        }
        throw FormatError(FormatError::Kind::invalid, "MIAV file has trailing bytes");
    }
    std::vector<float> data(numel);
    r.floats(data.data(), numel);
    Volume vol;
    vol.voxels = Tensor(std::move(shape), std::move(data));
    vol.source_id = std::move(source_id);
    return vol;
}

void write_miav(const Volume& vol, const fs::path& path) { binio::write_file(path, encode_miav(vol)); }

Volume read_miav(const fs::path& path) { return decode_miav(binio::read_file(path), path.stem().string()); }

Volume load_volume(const fs::path& path) {
    if (fs::is_directory(path)) return load_slice_stack(path);
    if (!fs::exists(path)) throw IoError("volume '" + path.string() + "' does not exist");
    return read_miav(path);
}

Volume normalize(Volume vol) {
    if (vol.scale == IntensityScale::normalized01) return vol;
    for (auto& v : vol.voxels.data()) v /= 255.0f;
    vol.scale = IntensityScale::normalized01;
    return vol;
}

}  // namespace mia
