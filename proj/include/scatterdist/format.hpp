#pragma once

#include <fmt/format.h>

#include <span>
#include <string>

namespace scatterdist {

// 17 significant digits: enough to round-trip any double.
inline std::string fmt_exact(double v) { return fmt::format("{:.17g}", v); }

inline std::string fmt_exact_array(std::span<const double> values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fmt_exact(values[i]);
  }
  out += "]";
  return out;
}

}  // namespace scatterdist
