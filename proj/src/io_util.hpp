#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <vector>

#include "lte/error.hpp"

namespace lte::io {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    double value = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("invalid number '" + s + "' in " + context);
    if (!std::isfinite(value))
        throw ValidationError("non-finite value '" + s + "' in " + context);
    return value;
}

inline long parse_long(const std::string& s, const std::string& context) {
    long value = 0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end)
        throw ValidationError("invalid integer '" + s + "' in " + context);
    return value;
}

} // namespace lte::io
