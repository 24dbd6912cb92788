#pragma once

#include <charconv>
#include <string>

namespace stmix {

// Shortest decimal that round-trips the double exactly; fixed across runs.
inline std::string format_full(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace stmix
