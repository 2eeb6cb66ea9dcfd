#pragma once

// Faran's backscatter series in its classic phase-shift form,
//   tan eta_n = tan delta_n (tan Phi_n + tan alpha_n) / (tan Phi_n + tan beta_n),
//   tan Phi_n = -(rho_f / rho_s) tan zeta_n,
// with every Bessel value from the 50-digit oracles. Returns sigma_b in cm^2.

#include <cmath>
#include <numbers>

#include "bessel_series.hpp"
#include "multiprecision.hpp"

namespace oracle {

struct Materials {
  double c_long_mm_us, poisson, rho_sphere, c_fluid_mm_us, rho_fluid;
};

inline double faran_tan_form(double size_um, double f_mhz, const Materials& m, int n_max) {
  const Real pi = boost::math::constants::pi<Real>();
  const Real a = Real(size_um) * Real("1e-6") / 2;
  const Real f = Real(f_mhz) * Real("1e6");
  const Real c_l = Real(m.c_long_mm_us) * 1000;
  const Real c_s = c_l * sqrt((1 - 2 * Real(m.poisson)) / (2 - 2 * Real(m.poisson)));
  const Real c_f = Real(m.c_fluid_mm_us) * 1000;
  const Real k = 2 * pi * f / c_f;
  const Real x = k * a;
  const Real x1 = 2 * pi * f / c_l * a;
  const Real x2 = 2 * pi * f / c_s * a;
  const Real rho_ratio = Real(m.rho_fluid) / Real(m.rho_sphere);

  // z f_n'(z) from the series / recurrence values at n and n+1.
  auto zdj = [](int n, const Real& z) {
    return n * spherical_j_series(n, z) - z * spherical_j_series(n + 1, z);
  };
  auto zdy = [](int n, const Real& z) {
    return n * spherical_y_recurrence(n, z) - z * spherical_y_recurrence(n + 1, z);
  };

  Real re = 0, im = 0;
  for (int n = 0; n <= n_max; ++n) {
    const Real l = Real(n) * (n + 1);
    const Real h = x2 * x2 / 2;
    const Real ta1 = -zdj(n, x1) / spherical_j_series(n, x1);
    const Real ta2 = -zdj(n, x2) / spherical_j_series(n, x2);
    const Real num = ta1 / (ta1 + 1) - l / (l - 1 - h + ta2);
    const Real den = (l - h + 2 * ta1) / (ta1 + 1) - l * (ta2 + 1) / (l - 1 - h + ta2);
    const Real tan_zeta = -h * num / den;
    const Real tan_phi = -rho_ratio * tan_zeta;

    const Real jx = spherical_j_series(n, x);
    const Real yx = spherical_y_recurrence(n, x);
    const Real tan_delta = -jx / yx;
    const Real tan_alpha = -zdj(n, x) / jx;
    const Real tan_beta = -zdy(n, x) / yx;
    const Real t = tan_delta * (tan_phi + tan_alpha) / (tan_phi + tan_beta);

    // sin(eta) exp(i eta) = t / (1 - i t) = (t + i t^2) / (1 + t^2)
    const Real d = 1 + t * t;
    const Real sign = (n % 2 == 0) ? 1 : -1;
    re += sign * (2 * n + 1) * t / d;
    im += sign * (2 * n + 1) * t * t / d;
  }
  const Real sigma_m2 = (re * re + im * im) / (k * k);
  return static_cast<double>(sigma_m2 * 10000);
}

}  // namespace oracle
