#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "confpinn/error.hpp"

namespace confpinn {

/// Shortest decimal string that parses back to exactly `value`.
inline std::string format_double(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) {
        throw NumericError("cannot format floating-point value");
    }
    return std::string(buf, end);
}

/// Strict parse of a complete token as a double.
inline double parse_double(std::string_view token)
{
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
        token.remove_prefix(1);
    }
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
        token.remove_suffix(1);
    }
    if (!token.empty() && token.front() == '+') {
        token.remove_prefix(1);
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
        throw ParseError("not a number: '" + std::string(token) + "'");
    }
    return value;
}

} // namespace confpinn
