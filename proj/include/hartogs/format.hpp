#pragma once

#include <charconv>
#include <string>

namespace hartogs {

// Shortest round-trip decimal form; used everywhere a double is printed so
// identical inputs give byte-identical files.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace hartogs
