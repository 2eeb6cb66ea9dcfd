#include "scatterdist/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace scatterdist::bessel {

namespace {

void check_args(int n_max, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("spherical bessel: x must be finite and > 0, got " +
                            std::to_string(x));
  }
  if (n_max < 0 || n_max > kMaxOrder) {
    throw std::domain_error("spherical bessel: order must lie in [0, " +
                            std::to_string(kMaxOrder) + "], got " +
                            std::to_string(n_max));
  }
}

constexpr double kRescaleAbove = 1e200;
constexpr double kRescaleBy = 1e-200;

}  // namespace

std::vector<double> spherical_j_array(int n_max, double x) {
  check_args(n_max, x);

  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;

  // Start index: far enough above both the order and the argument that the
  // dominant (y-like) solution has decayed out of the recurrence.
  const double top = std::max(static_cast<double>(n_max), x);
  const int start = static_cast<int>(std::ceil(top)) + 20 +
                    static_cast<int>(std::sqrt(40.0 * top));

  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  double above = 0.0;  // f_{k+1}
  double cur = 1.0;    // f_k
  double f1 = 0.0;
  for (int k = start; k >= 1; --k) {
    if (k <= n_max) out[static_cast<std::size_t>(k)] = cur;
    if (k == 1) f1 = cur;
    const double below = (2.0 * k + 1.0) / x * cur - above;
    above = cur;
    cur = below;
    if (std::abs(cur) > kRescaleAbove) {
      cur *= kRescaleBy;
      above *= kRescaleBy;
      f1 *= kRescaleBy;
      for (int m = std::min(k, n_max + 1); m <= n_max; ++m) {
        out[static_cast<std::size_t>(m)] *= kRescaleBy;
      }
    }
  }
  const double f0 = cur;
  out[0] = f0;

  // Normalize against whichever closed form is better conditioned. For small
  // x the closed form of j_1 cancels badly, but there |j_0| ~ 1 dominates.
  const bool use_j0 = x < 1.0 || std::abs(j0) >= std::abs(j1);
  const double scale = use_j0 ? j0 / f0 : j1 / f1;
  for (auto& v : out) v *= scale;
  out[0] = j0;
  if (n_max >= 1 && !use_j0) out[1] = j1;
  return out;
}

std::vector<double> spherical_y_array(int n_max, double x) {
  check_args(n_max, x);
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
  const double c = std::cos(x);
  const double s = std::sin(x);
  out[0] = -c / x;
  if (n_max >= 1) out[1] = -c / (x * x) - s / x;
  for (int k = 1; k < n_max; ++k) {
    out[static_cast<std::size_t>(k) + 1] =
        (2.0 * k + 1.0) / x * out[static_cast<std::size_t>(k)] -
        out[static_cast<std::size_t>(k) - 1];
  }
  return out;
}

double spherical_j(int n, double x) { return spherical_j_array(n, x).back(); }

double spherical_y(int n, double x) { return spherical_y_array(n, x).back(); }

}  // namespace scatterdist::bessel
