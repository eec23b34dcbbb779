#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace manet {

// Shortest round-trip decimal form; "nan"/"inf" spelled out so CSV readers can parse them.
inline std::string fmt(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace manet
