#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scatterdist/estimator.hpp"
#include "scatterdist/faran.hpp"
#include "scatterdist/grid.hpp"
#include "scatterdist/phantom.hpp"

namespace scatterdist {

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  double step = 0.0;
};

struct NoiseSettings {
  double variance = 1e-5;
  int trials = 100;
  std::uint64_t seed = 1;
  std::string phantom = "bimodal";
};

// Everything one run needs. Every field has a default, so an empty document
// reproduces the reference experiment: glass beads in gel, 1-100 um in 1 um
// steps, 3-9 MHz in 0.1 MHz steps, the four default phantoms.
struct RunConfig {
  AcousticMaterials materials;
  GridSpec size_grid{1.0, 100.0, 1.0};
  GridSpec frequency_grid{3.0, 9.0, 0.1};
  std::vector<PhantomSpec> phantoms = default_phantoms();
  SuppressionPolicy policy;
  SolverOptions solver;
  NoiseSettings noise;
  std::filesystem::path output_dir = "out";

  SizeGrid sizes() const;
  FrequencyGrid frequencies() const;

  // Throws config_error on any invalid field.
  void validate() const;
};

// Parses a JSON document; unknown keys are rejected. Throws config_error.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace scatterdist
