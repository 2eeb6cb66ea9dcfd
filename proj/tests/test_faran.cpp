#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oracles/faran_tan_form.hpp"
#include "scatterdist/errors.hpp"
#include "scatterdist/faran.hpp"

using namespace scatterdist;

namespace {

const AcousticMaterials kGlass = AcousticMaterials::glass_beads_in_gel();

double sigma(double size, double f, const AcousticMaterials& m = kGlass) {
  return backscatter_cross_section(size, f, m).cross_section;
}

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Small-sphere limit: f = k^2 a^3 / 3 [(kappa_s - kappa_f)/kappa_f - 3(rho_s - rho_f)/(2 rho_s + rho_f)]
double rayleigh_cm2(double size_um, double f_mhz, const AcousticMaterials& m) {
  const double cl = m.sphere_speed_mm_us * 1000, cs = shear_speed(m) * 1000;
  const double cf = m.background_speed_mm_us * 1000;
  const double rs = m.sphere_density_g_cm3 * 1000, rf = m.background_density_g_cm3 * 1000;
  const double kappa_f = 1.0 / (rf * cf * cf);
  const double kappa_s = 1.0 / (rs * (cl * cl - 4.0 / 3.0 * cs * cs));
  const double a = size_um * 1e-6 / 2;
  const double k = 2 * std::numbers::pi * f_mhz * 1e6 / cf;
  const double amp = k * k * a * a * a / 3 *
                     ((kappa_s - kappa_f) / kappa_f - 3 * (rs - rf) / (2 * rs + rf));
  return amp * amp * 1e4;
}

}  // namespace

TEST_CASE("shear speed closed form") {
  CHECK(shear_speed(kGlass) == doctest::Approx(3.376).epsilon(0.001 / 3.376));
  AcousticMaterials m;
  m.sphere_speed_mm_us = 1.0;
  m.sphere_poisson_ratio = 1e-300;  // nu -> 0
  CHECK(shear_speed(m) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  m.sphere_speed_mm_us = 2.0;
  m.sphere_poisson_ratio = 0.25;
  CHECK(shear_speed(m) == doctest::Approx(2.0 * std::sqrt(0.5 / 1.5)).epsilon(1e-12));
}

TEST_CASE("material validation") {
  CHECK_NOTHROW(kGlass.validate());
  auto bad = [](auto mutate) {
    AcousticMaterials m;
    mutate(m);
    return m;
  };
  CHECK_THROWS_AS(bad([](auto& m) { m.sphere_speed_mm_us = 0; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.background_speed_mm_us = -1; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.sphere_density_g_cm3 = 0; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.background_density_g_cm3 = 0; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.sphere_poisson_ratio = 0.5; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.sphere_poisson_ratio = 0.0; }).validate(), config_error);
  CHECK_THROWS_AS(bad([](auto& m) { m.sphere_poisson_ratio = std::nan(""); }).validate(),
                  config_error);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(backscatter_cross_section(0.0, 5.0, kGlass), std::domain_error);
  CHECK_THROWS_AS(backscatter_cross_section(10.0, -5.0, kGlass), std::domain_error);
  CHECK_THROWS_AS(backscatter_cross_section(10.0, 5.0, kGlass, 0), std::domain_error);
}

TEST_CASE("matches the classic phase-shift form in extended precision") {
  const oracle::Materials om{5.5719, 0.21, 2.38, 1.498, 1.04};
  for (double size : {5.0, 20.0, 50.0, 95.0}) {
    for (double f : {3.0, 6.1, 9.0}) {
      const auto ev = backscatter_cross_section(size, f, kGlass);
      const double want = oracle::faran_tan_form(size, f, om, ev.terms_used);
      INFO("size=" << size << " f=" << f);
      CHECK(std::abs(ev.cross_section - want) / want < 1e-9);
    }
  }
}

TEST_CASE("small-sphere limit agrees with the Rayleigh formula") {
  AcousticMaterials soft;
  soft.sphere_speed_mm_us = 3.0;
  soft.sphere_poisson_ratio = 0.3;
  soft.sphere_density_g_cm3 = 1.2;
  soft.background_density_g_cm3 = 1.0;
  for (const auto& m : {kGlass, soft}) {
    for (double size : {1e-4, 0.01, 0.5, 1.0}) {
      const double got = sigma(size, 3.0, m);
      CHECK(got / rayleigh_cm2(size, 3.0, m) == doctest::Approx(1.0).epsilon(1e-3));
    }
  }
}

TEST_CASE("vanishing sphere scatters nothing") {
  CHECK(sigma(1e-6, 5.0) < 1e-30 * sigma(50.0, 5.0));
}

TEST_CASE("Rayleigh f^4 slope at k*(size/2) <= 0.05") {
  for (double size : {10.0, 30.0, 50.0}) {
    const double f_top = 0.05 * 1.498 / (2 * std::numbers::pi * size / 2);  // MHz
    std::vector<double> fs, ss;
    for (int i = 1; i <= 20; ++i) {
      const double f = f_top * i / 20.0;
      fs.push_back(f);
      ss.push_back(sigma(size, f));
    }
    CHECK(loglog_slope(fs, ss) == doctest::Approx(4.0).epsilon(0.05 / 4.0));
  }
}

TEST_CASE("truncation stability: auto vs auto + 20") {
  const auto base = backscatter_cross_section(50.0, 5.0, kGlass);
  const auto more = backscatter_cross_section(50.0, 5.0, kGlass, base.terms_used + 20);
  CHECK(std::abs(base.cross_section - more.cross_section) / base.cross_section < 1e-10);
  CHECK(base.terms_used >= 1);
}

TEST_CASE("truncation stability and continuity over the reference grids") {
  for (int s = 1; s <= 100; ++s) {
    double prev = -1.0;
    for (int j = 0; j <= 60; ++j) {
      const double f = 3.0 + 0.1 * j;
      const auto ev = backscatter_cross_section(s, f, kGlass);
      REQUIRE(std::isfinite(ev.cross_section));
      REQUIRE(ev.cross_section >= 0.0);
      if (j % 15 == 0) {
        const auto more = backscatter_cross_section(s, f, kGlass, ev.terms_used + 20);
        INFO("size=" << s << " f=" << f);
        CHECK(std::abs(ev.cross_section - more.cross_section) / ev.cross_section < 1e-10);
      }
      if (prev > 0.0) {
        const double change = std::abs(ev.cross_section - prev) / prev;
        INFO("size=" << s << " f=" << f);
        CHECK(change < 0.5);
      }
      prev = ev.cross_section;
    }
  }
}

TEST_CASE("auto truncation reaches at least ceil(ka) + 10") {
  const double a = 80e-6 / 2;
  const double k = 2 * std::numbers::pi * 9e6 / 1498.0;
  const auto ev = backscatter_cross_section(80.0, 9.0, kGlass);
  CHECK(ev.terms_used >= static_cast<int>(std::ceil(k * a)) + 10);
}

TEST_CASE("radius convention doubles the physical size") {
  const double as_radius =
      backscatter_cross_section(25.0, 5.0, kGlass, std::nullopt, SizeConvention::radius)
          .cross_section;
  CHECK(as_radius == doctest::Approx(sigma(50.0, 5.0)).epsilon(1e-13));
}

TEST_CASE("huge ka does not converge within the order cap") {
  CHECK_THROWS_AS(backscatter_cross_section(1e5, 9.0, kGlass), numeric_error);
}
