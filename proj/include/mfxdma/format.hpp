#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace mfxdma {

/// Shortest decimal rendering that parses back to the same double; used by
/// every CSV writer.
inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace mfxdma
