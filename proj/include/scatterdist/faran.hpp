#pragma once

#include <optional>

namespace scatterdist {

// Physical constants of a solid elastic sphere suspended in a fluid
// background, in the units phantom recipes are usually written in.
struct AcousticMaterials {
  double sphere_speed_mm_us = 5.5719;      // longitudinal
  double sphere_poisson_ratio = 0.21;      // dimensionless
  double sphere_density_g_cm3 = 2.38;
  double background_speed_mm_us = 1.498;
  double background_density_g_cm3 = 1.04;

  // Soda-lime glass beads in a water-based gel.
  static AcousticMaterials glass_beads_in_gel() { return {}; }

  // Throws config_error unless speeds and densities are > 0 and
  // 0 < poisson ratio < 0.5.
  void validate() const;

  friend bool operator==(const AcousticMaterials&,
                         const AcousticMaterials&) = default;
};

// Shear wave speed of the sphere (mm/us) from its longitudinal speed and
// Poisson's ratio: c_S = c_L * sqrt((1 - 2 nu) / (2 - 2 nu)).
double shear_speed(const AcousticMaterials& materials);

// How a tabulated size maps onto the sphere radius used in the boundary
// conditions. Sizes are bead diameters by default.
enum class SizeConvention { diameter, radius };

struct ScatteringEvaluation {
  double size_um = 0.0;
  double frequency_mhz = 0.0;
  // Differential backscattering cross-section at 180 degrees, cm^2/sr.
  double cross_section = 0.0;
  // Highest partial-wave order retained.
  int terms_used = 0;
};

// Highest partial-wave order the series may use before giving up.
inline constexpr int kMaxSeriesOrder = 199;

// Faran's partial-wave solution for a plane wave backscattered by an elastic
// sphere in a fluid.
//
//   sigma_b = |sum_n (-1)^n (2n+1) sin(eta_n) exp(i eta_n)|^2 / k^2
//
// The phase shifts eta_n come from the fluid/solid boundary conditions with
// arguments k a (fluid), k_L a and k_S a (solid). They are evaluated in a
// cleared-denominator form so zeros of j_n at k_L a or k_S a never divide.
//
// Without `truncation` the series runs to the smallest order
// n >= ceil(k a) + 10 whose term is below 1e-12 of the partial sum. With
// `truncation`, orders 0..truncation are summed (truncation >= 1).
//
// Throws std::domain_error for non-positive size or frequency and
// numeric_error if the series has not converged by kMaxSeriesOrder.
ScatteringEvaluation backscatter_cross_section(
    double size_um, double frequency_mhz, const AcousticMaterials& materials,
    std::optional<int> truncation = std::nullopt,
    SizeConvention convention = SizeConvention::diameter);

}  // namespace scatterdist
