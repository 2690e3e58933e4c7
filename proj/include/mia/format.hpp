#pragma once

#include <string>

namespace mia {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
/// Fixed notation with `digits` decimals.
std::string format_fixed(double v, int digits);

}  // namespace mia
