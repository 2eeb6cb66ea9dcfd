#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "scatterdist/bank.hpp"
#include "scatterdist/faran.hpp"
#include "scatterdist/grid.hpp"

namespace scatterdist {

struct GaussianSize {
  double mean_um = 0.0;
  double std_um = 1.0;
};

struct UniformSize {
  double lo_um = 0.0;
  double hi_um = 0.0;
};

struct MixtureComponent {
  double mean_um = 0.0;
  double std_um = 1.0;
  double weight = 0.5;
};

struct BimodalSize {
  MixtureComponent first;
  MixtureComponent second;
};

struct PointMassSize {
  double size_um = 0.0;
};

// One probability per grid size, used as given after normalization.
struct ExplicitSize {
  std::vector<double> probabilities;
};

using SizeShape =
    std::variant<GaussianSize, UniformSize, BimodalSize, PointMassSize, ExplicitSize>;

// Whether the distribution's probabilities count beads or bead mass.
enum class FractionSemantics { number_fraction, mass_fraction };

struct SizeDistributionSpec {
  SizeShape shape;
  FractionSemantics semantics = FractionSemantics::number_fraction;
};

struct PhantomSpec {
  std::string name;
  double bead_mass_g = 200.0;
  double volume_l = 1.6;
  AcousticMaterials materials;
  SizeDistributionSpec distribution;

  void validate() const;
};

// The four reference phantoms (narrow and broad unimodal, uniform, bimodal),
// all inside the 3-9 MHz estimable band: N(40, 5), N(60, 10), U(25, 75),
// 0.5 N(30, 4) + 0.5 N(70, 4), in micrometres.
std::vector<PhantomSpec> default_phantoms();

// Half of the beads sit below the estimable band: 0.5 N(10, 3) + 0.5 N(60, 8).
PhantomSpec beyond_band_phantom();

// Per-size probabilities on `sizes` that sum to 1. Continuous shapes are
// sampled at the grid points and renormalized; a point mass lands on the
// nearest grid size. Throws empty_support_error if nothing lands on the grid.
std::vector<double> discretize_distribution(const SizeDistributionSpec& spec,
                                            const SizeGrid& sizes);

enum class SpectrumKind { bsc, form_factor };

// A spectrum on a frequency grid. `values` are the physical spectrum divided
// by `scale`; for a form factor, `scale` is s_T, the maximum of BSC/f^4.
struct SpectrumVector {
  FrequencyGrid frequencies;
  std::vector<double> values;
  SpectrumKind kind = SpectrumKind::bsc;
  double scale = 1.0;
};

struct GroundTruth {
  std::vector<double> number_densities;  // beads per cm^3, per size
  std::vector<double> weights;           // A with A * F = F_T
  std::vector<double> probabilities;     // weights, normalized to sum 1
};

struct SyntheticPhantom {
  SpectrumVector bsc;          // cm^-1 sr^-1
  SpectrumVector form_factor;  // max-normalized BSC / f^4
  GroundTruth truth;
  std::vector<double> bead_counts;
};

// Throws config_error if the phantom's materials differ from the bank's.
SyntheticPhantom synthesize_phantom(const PhantomSpec& phantom, const FormFactorBank& bank);

// BSC rescaled to unit maximum (the scale noise variances are quoted against).
SpectrumVector unit_max_bsc(const SpectrumVector& bsc);

// BSC / f^4, max-normalized. Throws numeric_error if that maximum is <= 0.
SpectrumVector form_factor_from_bsc(const SpectrumVector& bsc);

// Adds iid N(0, variance) to every value, drawn from NormalStream(seed).
// Negative results are kept. Expects a bsc spectrum already scaled to unit
// maximum; the scale is not checked.
SpectrumVector add_noise(const SpectrumVector& spectrum, double variance,
                         std::uint64_t seed);

// Header `frequency_mhz,value`, 17 significant digits.
void write_spectrum_csv(const SpectrumVector& spectrum, const std::filesystem::path& path);

// Reads a `frequency_mhz,value` CSV. Throws config_error on malformed input.
SpectrumVector read_spectrum_csv(const std::filesystem::path& path, SpectrumKind kind);

// Header `size_um,number_density_per_cm3,weight,probability`.
void write_ground_truth_csv(const GroundTruth& truth, const SizeGrid& sizes,
                            const std::filesystem::path& path);

}  // namespace scatterdist
