#pragma once

#include <charconv>
#include <string>

namespace grud {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace grud
