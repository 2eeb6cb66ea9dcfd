#include "scatterdist/faran.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "scatterdist/bessel.hpp"
#include "scatterdist/errors.hpp"

namespace scatterdist {

void AcousticMaterials::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw config_error(std::string("materials: ") + name + " must be > 0");
    }
  };
  positive(sphere_speed_mm_us, "sphere_speed_mm_us");
  positive(sphere_density_g_cm3, "sphere_density_g_cm3");
  positive(background_speed_mm_us, "background_speed_mm_us");
  positive(background_density_g_cm3, "background_density_g_cm3");
  if (!(sphere_poisson_ratio > 0.0 && sphere_poisson_ratio < 0.5)) {
    throw config_error("materials: sphere_poisson_ratio must lie in (0, 0.5)");
  }
}

double shear_speed(const AcousticMaterials& m) {
  const double nu = m.sphere_poisson_ratio;
  return m.sphere_speed_mm_us * std::sqrt((1.0 - 2.0 * nu) / (2.0 - 2.0 * nu));
}

namespace {

// Bessel values needed by the phase shifts at one (x, x_L, x_S) triple, for
// orders 0..n_max.
struct SeriesTables {
  std::vector<double> j_fluid, y_fluid, j_long, j_shear;

  SeriesTables(int n_max, double x, double x_long, double x_shear)
      : j_fluid(bessel::spherical_j_array(n_max + 1, x)),
        y_fluid(bessel::spherical_y_array(n_max + 1, x)),
        j_long(bessel::spherical_j_array(n_max + 1, x_long)),
        j_shear(bessel::spherical_j_array(n_max + 1, x_shear)) {}
};

// z f_n'(z) = n f_n(z) - z f_{n+1}(z)
inline double z_deriv(const std::vector<double>& f, int n, double z) {
  return n * f[static_cast<std::size_t>(n)] -
         z * f[static_cast<std::size_t>(n) + 1];
}

// sin(eta_n) exp(i eta_n) for one order.
//
// With tan(alpha) = -z j'/j written over a common denominator, Faran's
// tan(Phi_n) becomes P/Q with P, Q polynomial in the Bessel values, and
// tan(eta_n) = -N/D with N = P j_n(x) - Q x j_n'(x), D = P y_n(x) - Q x y_n'(x),
// so sin(eta) exp(i eta) = -N / (D + iN).
std::complex<double> partial_wave(const SeriesTables& t, int n, double x,
                                  double x_long, double x_shear,
                                  double density_ratio) {
  const auto idx = static_cast<std::size_t>(n);
  const double nd = static_cast<double>(n);
  const double l = nd * (nd + 1.0);
  const double half_xs2 = 0.5 * x_shear * x_shear;

  // Solid-side Bessel values, each set divided by its own magnitude: num and
  // den below are bilinear in the two sets, so only their ratio survives and
  // the scaling keeps tiny spheres from underflowing to 0/0.
  const double s_long = std::abs(t.j_long[idx]) > 0.0 ? std::abs(t.j_long[idx]) : 1.0;
  const double s_shear = std::abs(t.j_shear[idx]) > 0.0 ? std::abs(t.j_shear[idx]) : 1.0;
  const double jl = t.j_long[idx] / s_long;
  const double rl = x_long * t.j_long[idx + 1] / s_long;  // z j_{n+1}(z)
  const double js = t.j_shear[idx] / s_shear;
  const double rs = x_shear * t.j_shear[idx + 1] / s_shear;
  const double djl = nd * jl - rl;

  // The differences below are formed from z j_{n+1} directly; subtracting
  // z j_n' from j_n loses everything once ka is small.
  const double jl_minus_djl = (1.0 - nd) * jl + rl;                  // J1 - dJ1
  const double js_minus_djs = (1.0 - nd) * js + rs;                  // J2 - dJ2
  const double m_js_minus_djs = (nd * nd - 1.0 - half_xs2) * js + rs;  // M J2 - dJ2
  const double lead = (nd * nd - nd - half_xs2) * jl + 2.0 * rl;      // (L - h) J1 - 2 dJ1

  const double num = -djl * m_js_minus_djs - l * js * jl_minus_djl;
  const double den = lead * m_js_minus_djs - l * js_minus_djs * jl_minus_djl;

  // Fluid/solid coupling: tan(Phi_n) = p / q. The sign is pinned by the
  // small-sphere limit (compressibility and density contrast terms).
  double p = density_ratio * half_xs2 * num;
  double q = den;
  const double pq = std::max(std::abs(p), std::abs(q));
  if (pq > 0.0) {
    p /= pq;
    q /= pq;
  }

  const double big_n = p * t.j_fluid[idx] - q * z_deriv(t.j_fluid, n, x);
  const double big_d = p * t.y_fluid[idx] - q * z_deriv(t.y_fluid, n, x);
  // Fluid-side j_n(x) has underflowed: the phase shift is zero to working
  // precision.
  if (big_n == 0.0) return {0.0, 0.0};
  return -big_n / std::complex<double>(big_d, big_n);
}

}  // namespace

ScatteringEvaluation backscatter_cross_section(double size_um,
                                               double frequency_mhz,
                                               const AcousticMaterials& materials,
                                               std::optional<int> truncation,
                                               SizeConvention convention) {
  if (!(size_um > 0.0) || !std::isfinite(size_um)) {
    throw std::domain_error("backscatter_cross_section: size must be > 0");
  }
  if (!(frequency_mhz > 0.0) || !std::isfinite(frequency_mhz)) {
    throw std::domain_error("backscatter_cross_section: frequency must be > 0");
  }
  if (truncation && (*truncation < 1 || *truncation > kMaxSeriesOrder)) {
    throw std::domain_error("backscatter_cross_section: truncation must lie in [1, " +
                            std::to_string(kMaxSeriesOrder) + "]");
  }
  materials.validate();

  // SI from here on.
  const double radius_m =
      (convention == SizeConvention::diameter ? 0.5 : 1.0) * size_um * 1e-6;
  const double omega = 2.0 * std::numbers::pi * frequency_mhz * 1e6;
  const double k = omega / (materials.background_speed_mm_us * 1e3);
  const double k_long = omega / (materials.sphere_speed_mm_us * 1e3);
  const double k_shear = omega / (shear_speed(materials) * 1e3);
  const double x = k * radius_m;
  const double x_long = k_long * radius_m;
  const double x_shear = k_shear * radius_m;
  const double density_ratio =
      materials.background_density_g_cm3 / materials.sphere_density_g_cm3;

  const int min_order = static_cast<int>(std::ceil(x)) + 10;
  int table_order = truncation
                        ? *truncation
                        : std::min(kMaxSeriesOrder, min_order + 30);
  SeriesTables tables(table_order, x, x_long, x_shear);

  std::complex<double> sum{0.0, 0.0};
  int n = 0;
  for (;; ++n) {
    if (n > table_order) {
      table_order = kMaxSeriesOrder;
      tables = SeriesTables(table_order, x, x_long, x_shear);
    }
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    const std::complex<double> term =
        sign * (2.0 * n + 1.0) *
        partial_wave(tables, n, x, x_long, x_shear, density_ratio);
    if (!std::isfinite(term.real()) || !std::isfinite(term.imag())) {
      throw numeric_error("backscatter_cross_section: non-finite partial wave at order " +
                          std::to_string(n) + " (size " + std::to_string(size_um) +
                          " um, " + std::to_string(frequency_mhz) + " MHz)");
    }
    sum += term;
    if (truncation) {
      if (n == *truncation) break;
      continue;
    }
    if (n >= min_order && std::abs(term) < 1e-12 * std::abs(sum)) break;
    if (n == kMaxSeriesOrder) {
      throw numeric_error("backscatter_cross_section: series did not converge within " +
                          std::to_string(kMaxSeriesOrder + 1) + " terms (size " +
                          std::to_string(size_um) + " um, " +
                          std::to_string(frequency_mhz) + " MHz)");
    }
  }

  const double sigma_m2 = std::norm(sum) / (k * k);
  return ScatteringEvaluation{size_um, frequency_mhz, sigma_m2 * 1e4, n};
}

}  // namespace scatterdist
