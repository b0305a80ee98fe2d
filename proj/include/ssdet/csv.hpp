#pragma once

#include <cstdio>
#include <string>

namespace ssdet {

// Fixed-point formatting for CSV cells. snprintf with an explicit
// precision gives byte-identical output for identical doubles, which the
// determinism guarantees rely on.
inline std::string format_double(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

}  // namespace ssdet
