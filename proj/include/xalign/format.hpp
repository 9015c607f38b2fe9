#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace xalign {

// Locale-independent number formatting and parsing.

inline std::string format_fixed(double value, int precision) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                 std::chars_format::fixed, precision);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf.data(), end);
}

// Shortest representation that parses back to the identical double.
inline std::string format_exact(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf.data(), end);
}

enum class NumberParse { Ok, NotANumber, NonFinite };

inline NumberParse parse_double(std::string_view text, double& out) {
  if (text.empty()) return NumberParse::NotANumber;
  // from_chars rejects a leading '+', which some writers emit.
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  if (ec == std::errc::result_out_of_range) {
    // Underflow is a legitimate (denormal or zero) value; overflow is not.
    out = std::strtod(std::string(text).c_str(), nullptr);
    return std::isfinite(out) ? NumberParse::Ok : NumberParse::NonFinite;
  }
  if (ec != std::errc{} || ptr != text.data() + text.size()) return NumberParse::NotANumber;
  if (!std::isfinite(out)) return NumberParse::NonFinite;
  return NumberParse::Ok;
}

inline std::optional<long long> parse_integer(std::string_view text) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
  return value;
}

}  // namespace xalign
