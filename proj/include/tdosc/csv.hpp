#pragma once

// CSV formatting helpers.  Numbers are written with 17 significant digits so
// doubles survive a write/read round trip bit-exactly.

#include <cstdio>
#include <string>

namespace tdosc::csv {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace tdosc::csv
