#include "mia/format.hpp"

#include <charconv>

namespace mia {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string format_fixed(double v, int digits) {
    char buf[128];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
    return std::string(buf, end);
}

}  // namespace mia
