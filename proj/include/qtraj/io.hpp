#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qtraj {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parsers; throw Error with `what` in the message on malformed input.
double parse_double(std::string_view text, std::string_view what);
std::int64_t parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace qtraj
