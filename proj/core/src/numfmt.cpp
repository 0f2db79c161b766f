#include "netpe/numfmt.hpp"

#include <array>
#include <charconv>

namespace netpe {

std::string format_double(double value) {
    std::array<char, 32> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf.data(), end);
}

} // namespace netpe
