#include "scatterdist/grid.hpp"

#include <cmath>
#include <string>

#include "scatterdist/errors.hpp"

namespace scatterdist {

Grid::Grid(std::vector<double> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
      throw config_error("grid: values must be finite and > 0 (index " +
                         std::to_string(i) + ")");
    }
    if (i > 0 && !(values_[i] > values_[i - 1])) {
      throw config_error("grid: values must be strictly increasing (index " +
                         std::to_string(i) + ")");
    }
  }
}

Grid Grid::linspace_step(double min, double max, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw config_error("grid: step must be > 0");
  }
  if (!(min > 0.0) || !(max >= min) || !std::isfinite(max)) {
    throw config_error("grid: need 0 < min <= max");
  }
  const auto n =
      static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = min + static_cast<double>(i) * step;
  }
  return Grid(std::move(v));
}

}  // namespace scatterdist
