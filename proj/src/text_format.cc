#include "sfmsemval/text_format.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

namespace sfmsemval {

std::string FormatDouble(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

std::string FormatCount(std::int64_t value) {
  std::string digits = std::to_string(value < 0 ? -value : value);
  std::string out;
  const int n = static_cast<int>(digits.size());
  for (int i = 0; i < n; ++i) {
    if (i > 0 && (n - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return value < 0 ? "-" + out : out;
}

std::string FormatSignificant(double value, int significant) {
  if (!std::isfinite(value)) return std::to_string(value);
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", significant, value);
  return buffer;
}

std::vector<std::string_view> SplitWhitespace(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

std::string_view Trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

namespace {

template <typename T>
bool ParseWhole(std::string_view token, T* value) {
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto result =
      std::from_chars(token.data(), token.data() + token.size(), *value);
  return result.ec == std::errc() && result.ptr == token.data() + token.size();
}

}  // namespace

bool ParseDouble(std::string_view token, double* value) {
  if (!ParseWhole(token, value)) return false;
  return std::isfinite(*value);
}

bool ParseInt64(std::string_view token, std::int64_t* value) {
  return ParseWhole(token, value);
}

bool ParseUInt64(std::string_view token, std::uint64_t* value) {
  if (!token.empty() && token.front() == '-') return false;
  return ParseWhole(token, value);
}

}  // namespace sfmsemval
