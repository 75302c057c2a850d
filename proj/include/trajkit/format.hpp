#pragma once

#include <array>
#include <charconv>
#include <string>

namespace trajkit {

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace trajkit
