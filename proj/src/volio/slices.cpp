#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "mia/volio.hpp"

namespace mia {

namespace fs = std::filesystem;

namespace {

class PgmParser {
public:
    PgmParser(const std::vector<char>& bytes, std::string what) : b_(bytes), what_(std::move(what)) {}

    std::size_t pos() const { return pos_; }

    // Whitespace and '#' comments precede every header token.
    std::size_t number() {
        skip();
        if (pos_ >= b_.size() || !std::isdigit(static_cast<unsigned char>(b_[pos_]))) fail("malformed header");
        std::size_t v = 0;
        while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
            v = v * 10 + static_cast<std::size_t>(b_[pos_] - '0');
            if (v > 1u << 30) fail("header value too large");
            ++pos_;
        }
        return v;
    }

    void single_whitespace() {
        if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_]))) fail("malformed header");
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw IoError("undecodable image '" + what_ + "': " + msg); }

private:
    void skip() {
        while (pos_ < b_.size()) {
            const char c = b_[pos_];
            if (c == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<char>& b_;
    std::string what_;
    std::size_t pos_ = 0;
};

}  // namespace

Tensor read_pgm(const fs::path& path) {
    std::vector<char> bytes;
    try {
        bytes = binio::read_file(path);
    } catch (const IoError&) {
        throw IoError("cannot read image '" + path.string() + "'");
    }
    PgmParser p(bytes, path.string());
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
        p.fail("not a PGM (P5/P2) file");
    }
    const bool binary = bytes[1] == '5';
    std::vector<char> rest(bytes.begin() + 2, bytes.end());
    PgmParser hdr(rest, path.string());
    const std::size_t w = hdr.number(), h = hdr.number(), maxval = hdr.number();
    if (w == 0 || h == 0) hdr.fail("zero image dimension");
    if (maxval == 0 || maxval > 65535) hdr.fail("invalid maxval");
    Tensor img({h, w});
    const double scale = 255.0 / static_cast<double>(maxval);
    if (binary) {
        hdr.single_whitespace();
        const std::size_t bpp = maxval < 256 ? 1 : 2;
        const std::size_t start = hdr.pos();
        if (rest.size() - start < w * h * bpp) hdr.fail("truncated pixel data");
        const auto* px = reinterpret_cast<const unsigned char*>(rest.data() + start);
        for (std::size_t i = 0; i < w * h; ++i) {
            const std::size_t v = bpp == 1 ? px[i] : (static_cast<std::size_t>(px[2 * i]) << 8) | px[2 * i + 1];
            if (v > maxval) hdr.fail("pixel exceeds maxval");
            img[i] = static_cast<float>(static_cast<double>(v) * scale);
        }
    } else {
        for (std::size_t i = 0; i < w * h; ++i) {
            const std::size_t v = hdr.number();
            if (v > maxval) hdr.fail("pixel exceeds maxval");
            img[i] = static_cast<float>(static_cast<double>(v) * scale);
        }
    }
    return img;
}

void write_pgm(const fs::path& path, const Tensor& slice) {
    if (slice.rank() != 2) throw std::invalid_argument("write_pgm expects an (H, W) tensor");
    binio::Writer w;
    w.bytes("P5\n" + std::to_string(slice.dim(1)) + " " + std::to_string(slice.dim(0)) + "\n255\n");
    for (float v : slice.data()) {
        const auto px = static_cast<unsigned char>(std::lround(std::clamp(static_cast<double>(v), 0.0, 255.0)));
        w.put<unsigned char>(px);
    }
    binio::write_file(path, w.buffer());
}

bool natural_less(std::string_view a, std::string_view b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
        const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
        if (da && db) {
            std::size_t ie = i, je = j;
            while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
            while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
            std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
            while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
            while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
            if (na.size() != nb.size()) return na.size() < nb.size();
            if (na != nb) return na < nb;
            i = ie;
            j = je;
        } else {
            if (a[i] != b[j]) return a[i] < b[j];
            ++i;
            ++j;
        }
    }
    if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
    return a < b;
}

Volume load_slice_stack(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("slice directory '" + dir.string() + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || name.empty() || name[0] == '.') continue;
        files.push_back(entry.path());
    }
    if (files.empty()) throw IoError("slice directory '" + dir.string() + "' is empty");
    std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
        return natural_less(a.filename().string(), b.filename().string());
    });

    std::vector<Tensor> slices;
    slices.reserve(files.size());
    for (const auto& f : files) {
        slices.push_back(read_pgm(f));
        if (slices.back().shape() != slices.front().shape()) {
            throw IoError("slice '" + f.filename().string() + "' is " + shape_str(slices.back().shape()) +
                          ", expected " + shape_str(slices.front().shape()));
        }
    }
    const std::size_t h = slices.front().dim(0), w = slices.front().dim(1);
    Volume vol;
    vol.voxels = Tensor({slices.size(), h, w});
    for (std::size_t d = 0; d < slices.size(); ++d) {
        std::copy(slices[d].raw(), slices[d].raw() + h * w, vol.voxels.raw() + d * h * w);
    }
    vol.source_id = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    return vol;
}

}  // namespace mia
