#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace nudgeq {

/// Shortest round-trip decimal form; "inf"/"-inf"; NaN becomes "NA".
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

} // namespace nudgeq
