#pragma once

#include <string>

namespace netpe {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

} // namespace netpe
