#include "scatterdist/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "scatterdist/errors.hpp"
#include "scatterdist/format.hpp"
#include "scatterdist/random.hpp"

namespace scatterdist {

EstimableRange estimable_size_range(double f_min_mhz, double f_max_mhz,
                                    double background_speed_mm_us) {
  if (!(f_min_mhz > 0.0) || !(f_max_mhz >= f_min_mhz) || !std::isfinite(f_max_mhz)) {
    throw config_error("estimable_size_range: need 0 < f_min <= f_max");
  }
  if (!(background_speed_mm_us > 0.0) || !std::isfinite(background_speed_mm_us)) {
    throw config_error("estimable_size_range: sound speed must be > 0");
  }
  // c [mm/us] / f [MHz] is a length in mm.
  const double to_um = 1000.0;
  const double two_pi = 2.0 * std::numbers::pi;
  EstimableRange r;
  r.size_min_um = kEstimableKaLow * background_speed_mm_us / (two_pi * f_max_mhz) * to_um;
  r.size_max_um = kEstimableKaHigh * background_speed_mm_us / (two_pi * f_min_mhz) * to_um;
  r.ka_low = kEstimableKaLow;
  r.ka_high = kEstimableKaHigh;
  return r;
}

std::vector<std::size_t> find_peaks(std::span<const double> p, double relative_floor) {
  std::vector<std::size_t> peaks;
  if (p.empty()) return peaks;
  const double floor = relative_floor * *std::max_element(p.begin(), p.end());
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p[i] > floor)) continue;
    const bool left = i == 0 || p[i] > p[i - 1];
    // Walk across a plateau to see whether it descends on the right.
    std::size_t j = i;
    while (j + 1 < n && p[j + 1] == p[i]) ++j;
    const bool right = j + 1 == n || p[j + 1] < p[i];
    if (left && right) peaks.push_back(i);
  }
  return peaks;
}

EvaluationReport evaluate(std::span<const double> estimated, std::span<const double> truth,
                          const SizeGrid& sizes, const EstimableRange& range) {
  if (estimated.size() != sizes.size() || truth.size() != sizes.size()) {
    throw config_error("evaluate: probabilities do not match the size grid");
  }
  EvaluationReport rep;
  double sum_full = 0.0, sum_in = 0.0;
  std::size_t n_in = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double d = std::abs(estimated[i] - truth[i]);
    sum_full += d;
    if (range.contains(sizes[i])) {
      sum_in += d;
      ++n_in;
    } else {
      rep.out_of_range_mass += estimated[i];
    }
  }
  rep.mae_full = sum_full / static_cast<double>(sizes.size());
  rep.mae_in_range = n_in ? sum_in / static_cast<double>(n_in) : 0.0;

  const auto true_peaks = find_peaks(truth);
  const auto est_peaks = find_peaks(estimated);
  for (auto t : true_peaks) {
    double best = std::numeric_limits<double>::infinity();
    for (auto e : est_peaks) best = std::min(best, std::abs(sizes[e] - sizes[t]));
    rep.peak_errors.push_back(best);
  }
  return rep;
}

EvaluationReport evaluate(const SizeDistributionEstimate& estimate, const GroundTruth& truth,
                          const SizeGrid& sizes, const EstimableRange& range) {
  if (estimate.probabilities.empty()) {
    throw degenerate_estimate_error("evaluate: estimate has no positive weight");
  }
  return evaluate(estimate.probabilities, truth.probabilities, sizes, range);
}

namespace {

TrialRecord run_method(int trial, EstimationMethod method, const SpectrumVector& target,
                       const FormFactorBank& bank, const GroundTruth& truth,
                       const EstimableRange& range, const SweepSettings& s) {
  TrialRecord rec;
  rec.trial = trial;
  rec.method = method;
  try {
    const auto est = method == EstimationMethod::unconstrained
                         ? estimate_unconstrained(target, bank, s.options)
                         : estimate_constrained(target, bank, s.policy, s.options);
    const auto rep = evaluate(est, truth, bank.sizes(), range);
    rec.mae_in_range = rep.mae_in_range;
    rec.mae_full = rep.mae_full;
    rec.out_of_range_mass = rep.out_of_range_mass;
    rec.residual_l2 = est.residual_l2;
  } catch (const numeric_error& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  return rec;
}

MethodSummary summarize(EstimationMethod method, const std::vector<TrialRecord>& records) {
  MethodSummary out;
  out.method = method;
  std::vector<double> values;
  for (const auto& r : records) {
    if (r.method != method) continue;
    if (r.ok) {
      values.push_back(r.mae_in_range);
    } else {
      ++out.trials_failed;
    }
  }
  out.trials_ok = static_cast<int>(values.size());
  if (values.empty()) return out;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  out.mean_mae_in_range = mean;
  out.std_mae_in_range = std::sqrt(var);
  return out;
}

}  // namespace

SweepResult noise_sweep(const PhantomSpec& phantom, const FormFactorBank& bank,
                        const SweepSettings& settings) {
  if (settings.trials < 1) throw config_error("noise_sweep: trials must be >= 1");
  if (!(settings.variance >= 0.0)) throw config_error("noise_sweep: variance must be >= 0");
  settings.policy.validate();

  const auto synth = synthesize_phantom(phantom, bank);
  const auto clean = unit_max_bsc(synth.bsc);
  const auto range = estimable_size_range(bank.frequencies().front(), bank.frequencies().back(),
                                          bank.materials().background_speed_mm_us);

  SweepResult result;
  result.range = range;
  result.settings = settings;
  result.records.reserve(static_cast<std::size_t>(settings.trials) * 2);
  for (int t = 0; t < settings.trials; ++t) {
    const std::uint64_t trial_seed = settings.seed ^ static_cast<std::uint64_t>(t);
    const auto noisy = add_noise(clean, settings.variance, trial_seed);
    SpectrumVector target;
    try {
      target = form_factor_from_bsc(noisy);
    } catch (const numeric_error& e) {
      for (auto m : {EstimationMethod::unconstrained, EstimationMethod::constrained}) {
        TrialRecord rec;
        rec.trial = t;
        rec.method = m;
        rec.ok = false;
        rec.error = e.what();
        result.records.push_back(rec);
      }
      continue;
    }
    result.records.push_back(run_method(t, EstimationMethod::unconstrained, target, bank,
                                        synth.truth, range, settings));
    result.records.push_back(run_method(t, EstimationMethod::constrained, target, bank,
                                        synth.truth, range, settings));
  }
  result.unconstrained = summarize(EstimationMethod::unconstrained, result.records);
  result.constrained = summarize(EstimationMethod::constrained, result.records);
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << "trial,method,mae_in_range,mae_full,out_of_range_mass,residual_l2\n";
  for (const auto& r : result.records) {
    if (!r.ok) continue;
    out << r.trial << ',' << to_string(r.method) << ',' << fmt_exact(r.mae_in_range) << ','
        << fmt_exact(r.mae_full) << ',' << fmt_exact(r.out_of_range_mass) << ','
        << fmt_exact(r.residual_l2) << '\n';
  }
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

void write_sweep_summary(const SweepResult& result, const std::string& phantom_name,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  auto method_block = [&](const MethodSummary& m) {
    out << "    \"" << to_string(m.method) << "\": {\n";
    out << "      \"trials_ok\": " << m.trials_ok << ",\n";
    out << "      \"trials_failed\": " << m.trials_failed << ",\n";
    out << "      \"mean_mae_in_range\": " << fmt_exact(m.mean_mae_in_range) << ",\n";
    out << "      \"std_mae_in_range\": " << fmt_exact(m.std_mae_in_range) << "\n";
    out << "    }";
  };
  const auto& s = result.settings;
  out << "{\n";
  out << "  \"phantom\": \"" << phantom_name << "\",\n";
  out << "  \"variance\": " << fmt_exact(s.variance) << ",\n";
  out << "  \"trials\": " << s.trials << ",\n";
  out << "  \"seed\": " << s.seed << ",\n";
  out << "  \"generator\": \"" << kNoiseGeneratorId << "\",\n";
  out << "  \"policy\": {\"mode\": \"" << to_string(s.policy.mode)
      << "\", \"theta\": " << fmt_exact(s.policy.threshold_fraction)
      << ", \"max_iterations\": " << s.policy.max_iterations << "},\n";
  out << "  \"rcond\": " << fmt_exact(s.options.rcond) << ",\n";
  out << "  \"estimable_range_um\": [" << fmt_exact(result.range.size_min_um) << ", "
      << fmt_exact(result.range.size_max_um) << "],\n";
  out << "  \"methods\": {\n";
  method_block(result.unconstrained);
  out << ",\n";
  method_block(result.constrained);
  out << "\n  }\n}\n";
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

}  // namespace scatterdist
