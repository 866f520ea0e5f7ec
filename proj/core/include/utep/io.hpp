#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace utep {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Strict parse of a full string; throws std::invalid_argument otherwise.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace utep
