#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sfmsemval {

// Shortest decimal string that parses back to exactly `value`.
std::string FormatDouble(double value);

// Integer with thousands separators, e.g. 272017 -> "272,017".
std::string FormatCount(std::int64_t value);

// `significant` significant digits, trailing zeros removed ("5.92302").
std::string FormatSignificant(double value, int significant);

std::vector<std::string_view> SplitWhitespace(std::string_view line);
std::string_view Trim(std::string_view text);

// Strict numeric parsing of a whole token; return false on any junk.
bool ParseDouble(std::string_view token, double* value);
bool ParseInt64(std::string_view token, std::int64_t* value);
bool ParseUInt64(std::string_view token, std::uint64_t* value);

}  // namespace sfmsemval
