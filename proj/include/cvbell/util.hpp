#ifndef CVBELL_UTIL_HPP
#define CVBELL_UTIL_HPP

#include <charconv>
#include <cmath>
#include <string>

namespace cvbell {

// Shortest round-trip decimal form, locale-free; infinities serialize as
// "inf"/"-inf" (the ratio column contract).
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace cvbell

#endif
