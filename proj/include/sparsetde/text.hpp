#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sparsetde/error.hpp"

namespace sparsetde {

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] inline std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, std::string_view context) {
    const std::string t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorCode::Parse, std::string(context) + ": not a number: '" + t + "'");
    }
    return v;
}

inline long long parse_integer(std::string_view s, std::string_view context) {
    const std::string t = trim(s);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorCode::Parse, std::string(context) + ": not an integer: '" + t + "'");
    }
    return v;
}

inline bool parse_flag(std::string_view s, std::string_view context) {
    const std::string t = trim(s);
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    throw Error(ErrorCode::Parse, std::string(context) + ": not a flag: '" + t + "'");
}

inline std::string line_context(std::size_t line) { return "line " + std::to_string(line); }

}  // namespace detail

}  // namespace sparsetde
