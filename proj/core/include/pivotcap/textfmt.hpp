#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace pivotcap {

// Shortest decimal form that parses back to the exact double. Rendered
// artifacts (configs, logs, reports) go through this so reruns are byte
// identical.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_hex16(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace pivotcap
