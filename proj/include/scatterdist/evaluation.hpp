#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scatterdist/bank.hpp"
#include "scatterdist/estimator.hpp"
#include "scatterdist/phantom.hpp"

namespace scatterdist {

// Sizes whose k*a lies in [ka_low, ka_high] somewhere in the analysis band.
// Here a is the tabulated size itself (not half of it), and k = 2 pi f / c.
struct EstimableRange {
  double size_min_um = 0.0;
  double size_max_um = 0.0;
  double ka_low = 0.6;
  double ka_high = 1.2;

  bool contains(double size_um) const noexcept {
    return size_um >= size_min_um && size_um <= size_max_um;
  }
};

inline constexpr double kEstimableKaLow = 0.6;
inline constexpr double kEstimableKaHigh = 1.2;

// size_min = 0.6 c / (2 pi f_max), size_max = 1.2 c / (2 pi f_min), in um for
// c in mm/us and f in MHz.
EstimableRange estimable_size_range(double f_min_mhz, double f_max_mhz,
                                    double background_speed_mm_us);

struct EvaluationReport {
  double mae_full = 0.0;
  double mae_in_range = 0.0;
  double out_of_range_mass = 0.0;
  // For every true peak, the distance (um) to the nearest estimated peak.
  std::vector<double> peak_errors;
};

// Local maxima above 10% of the global maximum. A plateau counts once, at its
// left edge.
std::vector<std::size_t> find_peaks(std::span<const double> probabilities,
                                    double relative_floor = 0.1);

EvaluationReport evaluate(std::span<const double> estimated, std::span<const double> truth,
                          const SizeGrid& sizes, const EstimableRange& range);

// Uses estimate.probabilities and truth.probabilities. Throws
// degenerate_estimate_error when the estimate has no positive weight.
EvaluationReport evaluate(const SizeDistributionEstimate& estimate, const GroundTruth& truth,
                          const SizeGrid& sizes, const EstimableRange& range);

struct TrialRecord {
  int trial = 0;
  EstimationMethod method = EstimationMethod::unconstrained;
  bool ok = true;
  std::string error;
  double mae_in_range = 0.0;
  double mae_full = 0.0;
  double out_of_range_mass = 0.0;
  double residual_l2 = 0.0;
};

struct MethodSummary {
  EstimationMethod method = EstimationMethod::unconstrained;
  int trials_ok = 0;
  int trials_failed = 0;
  double mean_mae_in_range = 0.0;
  double std_mae_in_range = 0.0;  // population standard deviation
};

struct SweepSettings {
  double variance = 1e-5;
  int trials = 100;
  std::uint64_t seed = 1;
  SuppressionPolicy policy;
  SolverOptions options;
};

struct SweepResult {
  // Ordered by trial, unconstrained before constrained within a trial.
  std::vector<TrialRecord> records;
  MethodSummary unconstrained;
  MethodSummary constrained;
  EstimableRange range;
  SweepSettings settings;
};

// Per trial t: unit-max BSC + N(0, variance) noise drawn with seed ^ t ->
// renormalized form factor -> both estimators -> evaluate against the
// noise-free ground truth. Estimator failures are recorded per trial.
SweepResult noise_sweep(const PhantomSpec& phantom, const FormFactorBank& bank,
                        const SweepSettings& settings);

// Header `trial,method,mae_in_range,mae_full,out_of_range_mass,residual_l2`.
// Failed trials are omitted; their count is in the summary.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);

void write_sweep_summary(const SweepResult& result, const std::string& phantom_name,
                         const std::filesystem::path& path);

}  // namespace scatterdist
