#pragma once

#include <cstdio>
#include <string>

namespace blockade::detail {

// Shortest round-trippable-enough representation used by every CSV/JSON writer
// so identical inputs produce byte-identical files.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace blockade::detail
