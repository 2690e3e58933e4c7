#pragma once

// Little-endian byte encoding shared by the checkpoint and MIAV formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "mia/errors.hpp"

namespace mia::binio {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
U to_little(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        U out;
        auto* src = reinterpret_cast<const unsigned char*>(&v);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t i = 0; i < sizeof(U); ++i) dst[i] = src[sizeof(U) - 1 - i];
        return out;
    } else {
        return v;
    }
}

class Writer {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    template <typename U>
    void put(U v) {
        static_assert(std::is_trivially_copyable_v<U>);
        v = to_little(v);
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(U));
    }

    void floats(const float* data, std::size_t n) {
        if constexpr (std::endian::native == std::endian::little) {
            const auto* p = reinterpret_cast<const char*>(data);
            buf_.insert(buf_.end(), p, p + n * sizeof(float));
        } else {
            for (std::size_t i = 0; i < n; ++i) put(std::bit_cast<std::uint32_t>(data[i]));
        }
    }

    std::vector<char>& buffer() { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    Reader(const std::vector<char>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

    bool has(std::size_t n) const { return buf_.size() - pos_ >= n; }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::string_view bytes(std::size_t n) {
        need(n);
        std::string_view v(buf_.data() + pos_, n);
        pos_ += n;
        return v;
    }

    template <typename U>
    U get() {
        need(sizeof(U));
        U v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return to_little(v);
    }

    void floats(float* out, std::size_t n) {
        need(n * sizeof(float));
        if constexpr (std::endian::native == std::endian::little) {
            std::memcpy(out, buf_.data() + pos_, n * sizeof(float));
            pos_ += n * sizeof(float);
        } else {
            for (std::size_t i = 0; i < n; ++i) out[i] = std::bit_cast<float>(get<std::uint32_t>());
        }
    }

private:
    void need(std::size_t n) const {
        if (!has(n)) throw FormatError(FormatError::Kind::truncated, what_ + ": truncated file");
    }

    const std::vector<char>& buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace mia::binio
