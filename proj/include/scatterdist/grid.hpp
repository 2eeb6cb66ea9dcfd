#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace scatterdist {

// Strictly increasing, strictly positive sample points. Constructing one from
// values that break either rule throws config_error.
class Grid {
public:
  Grid() = default;
  explicit Grid(std::vector<double> values);

  // min, min+step, ... up to max (inclusive, with a 1e-9*step slack against
  // accumulated rounding). Points are computed as min + i*step, not summed.
  static Grid linspace_step(double min, double max, double step);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  friend bool operator==(const Grid&, const Grid&) = default;

private:
  std::vector<double> values_;
};

// Scatterer sizes in micrometres (bead diameters).
struct SizeGrid : Grid {
  using Grid::Grid;
  SizeGrid(Grid g) : Grid(std::move(g)) {}
  friend bool operator==(const SizeGrid&, const SizeGrid&) = default;
};

// Analysis frequencies in MHz.
struct FrequencyGrid : Grid {
  using Grid::Grid;
  FrequencyGrid(Grid g) : Grid(std::move(g)) {}
  friend bool operator==(const FrequencyGrid&, const FrequencyGrid&) = default;
};

}  // namespace scatterdist
