#pragma once

#include <stdexcept>
#include <string>

namespace mia {

/// Raised for malformed binary inputs (checkpoints and MIAV volumes).
class FormatError : public std::runtime_error {
public:
    enum class Kind { bad_magic, truncated, version_mismatch, invalid };

    FormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Filesystem or decoding failure on an input the caller pointed us at.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mia
