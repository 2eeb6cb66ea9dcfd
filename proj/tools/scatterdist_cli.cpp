// Command-line driver: bank, phantom, estimate, sweep, range, reproduce.
// Exit codes: 0 success, 2 configuration/contract error, 3 numeric failure.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "scatterdist/bank.hpp"
#include "scatterdist/config.hpp"
#include "scatterdist/errors.hpp"
#include "scatterdist/estimator.hpp"
#include "scatterdist/evaluation.hpp"
#include "scatterdist/format.hpp"
#include "scatterdist/phantom.hpp"

namespace fs = std::filesystem;
using namespace scatterdist;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> size_min, size_max, size_step;
  std::optional<double> freq_min, freq_max, freq_step;
};

struct EstimatorFlags {
  std::optional<double> theta;
  std::optional<double> rcond;
  std::optional<std::string> mode;
  std::optional<int> max_iterations;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--out", o.out_dir, "Output directory (overrides output_dir)");
}

void add_seed(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Noise seed (overrides noise.seed)");
}

void add_grid_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--size-min", o.size_min, "Smallest size, um");
  cmd->add_option("--size-max", o.size_max, "Largest size, um");
  cmd->add_option("--size-step", o.size_step, "Size step, um");
  cmd->add_option("--freq-min", o.freq_min, "Lowest frequency, MHz");
  cmd->add_option("--freq-max", o.freq_max, "Highest frequency, MHz");
  cmd->add_option("--freq-step", o.freq_step, "Frequency step, MHz");
}

void add_estimator_flags(CLI::App* cmd, EstimatorFlags& e) {
  cmd->add_option("--theta", e.theta, "Suppression threshold fraction in [0, 1)");
  cmd->add_option("--rcond", e.rcond, "Relative singular-value cutoff");
  cmd->add_option("--mode", e.mode, "Suppression mode")
      ->check(CLI::IsMember({"threshold", "contiguous-run"}));
  cmd->add_option("--max-iterations", e.max_iterations, "Suppression/re-solve rounds");
}

RunConfig resolve(const CommonOptions& o, const EstimatorFlags* e = nullptr) {
  RunConfig cfg = o.config_path.empty() ? parse_run_config("{}") : load_run_config(o.config_path);
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (o.seed) cfg.noise.seed = *o.seed;
  if (o.size_min) cfg.size_grid.min = *o.size_min;
  if (o.size_max) cfg.size_grid.max = *o.size_max;
  if (o.size_step) cfg.size_grid.step = *o.size_step;
  if (o.freq_min) cfg.frequency_grid.min = *o.freq_min;
  if (o.freq_max) cfg.frequency_grid.max = *o.freq_max;
  if (o.freq_step) cfg.frequency_grid.step = *o.freq_step;
  if (e != nullptr) {
    if (e->theta) cfg.policy.threshold_fraction = *e->theta;
    if (e->rcond) cfg.solver.rcond = *e->rcond;
    if (e->mode) {
      cfg.policy.mode =
          *e->mode == "threshold" ? SuppressionMode::threshold : SuppressionMode::contiguous_run;
    }
    if (e->max_iterations) cfg.policy.max_iterations = *e->max_iterations;
  }
  cfg.validate();
  return cfg;
}

FormFactorBank bank_for(const RunConfig& cfg, const std::string& bank_path) {
  if (!bank_path.empty()) return load_bank(bank_path);
  return build_bank(cfg.sizes(), cfg.frequencies(), cfg.materials);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

std::string phantom_json(const PhantomSpec& spec, const SyntheticPhantom& p) {
  return fmt::format(
      "{{\n  \"name\": \"{}\",\n  \"bead_mass_g\": {},\n  \"volume_l\": {},\n"
      "  \"form_factor_scale\": {},\n  \"bsc_max\": {}\n}}\n",
      spec.name, fmt_exact(spec.bead_mass_g), fmt_exact(spec.volume_l),
      fmt_exact(p.form_factor.scale), fmt_exact(unit_max_bsc(p.bsc).scale));
}

std::string evaluation_json(const EvaluationReport& r) {
  return fmt::format(
      "{{\n  \"mae_full\": {},\n  \"mae_in_range\": {},\n  \"out_of_range_mass\": {},\n"
      "  \"peak_errors_um\": {}\n}}\n",
      fmt_exact(r.mae_full), fmt_exact(r.mae_in_range), fmt_exact(r.out_of_range_mass),
      fmt_exact_array(r.peak_errors));
}

std::string range_json(const EstimableRange& r) {
  return fmt::format(
      "{{\n  \"size_min_um\": {},\n  \"size_max_um\": {},\n  \"ka_low\": {},\n  \"ka_high\": {}\n}}\n",
      fmt_exact(r.size_min_um), fmt_exact(r.size_max_um), fmt_exact(r.ka_low),
      fmt_exact(r.ka_high));
}

EstimableRange range_of(const FormFactorBank& bank) {
  return estimable_size_range(bank.frequencies().front(), bank.frequencies().back(),
                              bank.materials().background_speed_mm_us);
}

// ---- bank ----

int run_bank(const CommonOptions& o) {
  const RunConfig cfg = resolve(o);
  const auto t0 = std::chrono::steady_clock::now();
  const FormFactorBank bank = build_bank(cfg.sizes(), cfg.frequencies(), cfg.materials);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(cfg.output_dir);
  const fs::path path = cfg.output_dir / "bank.json";
  save_bank(bank, path);
  fmt::print("bank {}x{} (sizes x frequencies) built in {:.3f} s -> {}\n", bank.num_sizes(),
             bank.num_frequencies(), seconds, path.string());
  return kExitOk;
}

// ---- phantom ----

struct PhantomFlags {
  std::string bank_path;
  std::optional<double> noise_variance;
  bool include_beyond_band = false;
};

int run_phantom(const CommonOptions& o, const PhantomFlags& f) {
  RunConfig cfg = resolve(o);
  if (f.noise_variance && !(*f.noise_variance >= 0.0)) {
    throw config_error("--noise-variance must be >= 0");
  }
  if (f.include_beyond_band) {
    PhantomSpec extra = beyond_band_phantom();
    extra.materials = cfg.materials;
    cfg.phantoms.push_back(extra);
    cfg.validate();
  }
  const FormFactorBank bank = bank_for(cfg, f.bank_path);
  // Synthesize everything before touching the output directory.
  std::vector<SyntheticPhantom> made;
  for (const auto& spec : cfg.phantoms) made.push_back(synthesize_phantom(spec, bank));

  for (std::size_t k = 0; k < made.size(); ++k) {
    const auto& spec = cfg.phantoms[k];
    const auto& p = made[k];
    const fs::path dir = cfg.output_dir / spec.name;
    fs::create_directories(dir);
    write_spectrum_csv(p.bsc, dir / "bsc.csv");
    write_spectrum_csv(p.form_factor, dir / "form_factor.csv");
    write_ground_truth_csv(p.truth, bank.sizes(), dir / "ground_truth.csv");
    write_text(dir / "phantom.json", phantom_json(spec, p));
    if (f.noise_variance) {
      const auto noisy = add_noise(unit_max_bsc(p.bsc), *f.noise_variance, cfg.noise.seed);
      write_spectrum_csv(noisy, dir / "noisy_bsc.csv");
      write_spectrum_csv(form_factor_from_bsc(noisy), dir / "noisy_form_factor.csv");
    }
    fmt::print("{}: form factor scale {} -> {}\n", spec.name, fmt_exact(p.form_factor.scale),
               dir.string());
  }
  return kExitOk;
}

// ---- estimate ----

struct EstimateFlags {
  std::string bank_path;
  std::string input_path;
  std::string input_kind = "form-factor";
  std::string method = "both";
  std::optional<double> scale;
};

void emit_estimate(const SizeDistributionEstimate& est, const FormFactorBank& bank,
                   const fs::path& dir, std::optional<double> scale) {
  const std::string stem = "estimate_" + to_string(est.method);
  write_estimate_csv(est, bank.sizes(), dir / (stem + ".csv"));
  write_estimate_summary(est, dir / (stem + ".json"));
  if (scale) {
    const auto n = weights_to_number_density(est, bank, *scale);
    std::string text = "size_um,number_density_per_cm3\n";
    for (std::size_t i = 0; i < n.size(); ++i) {
      text += fmt_exact(bank.sizes()[i]) + "," + fmt_exact(n[i]) + "\n";
    }
    write_text(dir / (stem + "_number_density.csv"), text);
  }
  fmt::print("{}: residual {} suppressed {} -> {}\n", to_string(est.method),
             fmt_exact(est.residual_l2), est.suppressed.size(), (dir / (stem + ".csv")).string());
}

int run_estimate(const CommonOptions& o, const EstimatorFlags& e, const EstimateFlags& f) {
  const RunConfig cfg = resolve(o, &e);
  const FormFactorBank bank = load_bank(f.bank_path);
  SpectrumVector target;
  if (f.input_kind == "bsc") {
    target = form_factor_from_bsc(read_spectrum_csv(f.input_path, SpectrumKind::bsc));
  } else {
    target = read_spectrum_csv(f.input_path, SpectrumKind::form_factor);
  }
  if (f.scale && !(*f.scale > 0.0)) throw config_error("--scale must be > 0");
  std::optional<double> scale = f.scale;
  if (!scale && f.input_kind == "bsc") scale = target.scale;

  std::vector<SizeDistributionEstimate> results;
  if (f.method == "unconstrained" || f.method == "both") {
    results.push_back(estimate_unconstrained(target, bank, cfg.solver));
  }
  if (f.method == "constrained" || f.method == "both") {
    results.push_back(estimate_constrained(target, bank, cfg.policy, cfg.solver));
  }
  fs::create_directories(cfg.output_dir);
  for (const auto& est : results) emit_estimate(est, bank, cfg.output_dir, scale);
  return kExitOk;
}

// ---- sweep ----

struct SweepFlags {
  std::string bank_path;
  std::optional<double> variance;
  std::optional<int> trials;
  std::optional<std::string> phantom;
};

const PhantomSpec& find_phantom(const RunConfig& cfg, const std::string& name) {
  for (const auto& p : cfg.phantoms) {
    if (p.name == name) return p;
  }
  throw config_error("no phantom named '" + name + "' in the configuration");
}

SweepSettings sweep_settings(const RunConfig& cfg) {
  SweepSettings s;
  s.variance = cfg.noise.variance;
  s.trials = cfg.noise.trials;
  s.seed = cfg.noise.seed;
  s.policy = cfg.policy;
  s.options = cfg.solver;
  return s;
}

void print_sweep(const SweepResult& r) {
  for (const MethodSummary* m : {&r.unconstrained, &r.constrained}) {
    fmt::print("{}: mean mae_in_range {} std {} ({} ok, {} failed)\n", to_string(m->method),
               fmt_exact(m->mean_mae_in_range), fmt_exact(m->std_mae_in_range), m->trials_ok,
               m->trials_failed);
  }
}

int run_sweep(const CommonOptions& o, const EstimatorFlags& e, const SweepFlags& f) {
  RunConfig cfg = resolve(o, &e);
  if (f.variance) cfg.noise.variance = *f.variance;
  if (f.trials) cfg.noise.trials = *f.trials;
  if (f.phantom) cfg.noise.phantom = *f.phantom;
  cfg.validate();
  const PhantomSpec& phantom = find_phantom(cfg, cfg.noise.phantom);
  const FormFactorBank bank = bank_for(cfg, f.bank_path);
  const SweepResult result = noise_sweep(phantom, bank, sweep_settings(cfg));
  fs::create_directories(cfg.output_dir);
  write_sweep_csv(result, cfg.output_dir / "sweep.csv");
  write_sweep_summary(result, phantom.name, cfg.output_dir / "sweep_summary.json");
  print_sweep(result);
  return kExitOk;
}

// ---- range ----

struct RangeFlags {
  std::optional<double> f_min, f_max, speed;
};

int run_range(const CommonOptions& o, const RangeFlags& f) {
  const RunConfig cfg = resolve(o);
  const double f_min = f.f_min.value_or(cfg.frequency_grid.min);
  const double f_max = f.f_max.value_or(cfg.frequency_grid.max);
  const double c = f.speed.value_or(cfg.materials.background_speed_mm_us);
  const EstimableRange r = estimable_size_range(f_min, f_max, c);
  fmt::print("size_min_um {}\nsize_max_um {}\n", fmt_exact(r.size_min_um),
             fmt_exact(r.size_max_um));
  return kExitOk;
}

// ---- reproduce ----

int run_reproduce(const CommonOptions& o, const EstimatorFlags& e, const std::string& bank_path) {
  const RunConfig cfg = resolve(o, &e);
  const FormFactorBank bank = bank_for(cfg, bank_path);
  const EstimableRange range = range_of(bank);
  fs::create_directories(cfg.output_dir);
  write_text(cfg.output_dir / "range.json", range_json(range));

  for (const auto& spec : cfg.phantoms) {
    const SyntheticPhantom p = synthesize_phantom(spec, bank);
    const fs::path dir = cfg.output_dir / spec.name;
    fs::create_directories(dir);
    write_spectrum_csv(p.form_factor, dir / "form_factor.csv");
    write_ground_truth_csv(p.truth, bank.sizes(), dir / "ground_truth.csv");

    const auto m1 = estimate_unconstrained(p.form_factor, bank, cfg.solver);
    const auto m2 = estimate_constrained(p.form_factor, bank, cfg.policy, cfg.solver);
    for (const auto* est : {&m1, &m2}) {
      const std::string stem = "estimate_" + to_string(est->method);
      write_estimate_csv(*est, bank.sizes(), dir / (stem + ".csv"));
      write_text(dir / ("evaluation_" + to_string(est->method) + ".json"),
                 evaluation_json(evaluate(*est, p.truth, bank.sizes(), range)));
    }

    // One noisy realization per phantom, for the noisy panels.
    const auto noisy = form_factor_from_bsc(
        add_noise(unit_max_bsc(p.bsc), cfg.noise.variance, cfg.noise.seed));
    write_spectrum_csv(noisy, dir / "noisy_form_factor.csv");
    for (const bool constrained : {false, true}) {
      const std::string stem =
          std::string("noisy_estimate_") + (constrained ? "constrained" : "unconstrained");
      try {
        const auto est = constrained
                             ? estimate_constrained(noisy, bank, cfg.policy, cfg.solver)
                             : estimate_unconstrained(noisy, bank, cfg.solver);
        write_estimate_csv(est, bank.sizes(), dir / (stem + ".csv"));
      } catch (const numeric_error& err) {
        fmt::print(stderr, "{}: {} failed: {}\n", spec.name, stem, err.what());
      }
    }
    fmt::print("{} -> {}\n", spec.name, dir.string());
  }

  const PhantomSpec& phantom = find_phantom(cfg, cfg.noise.phantom);
  const SweepResult sweep = noise_sweep(phantom, bank, sweep_settings(cfg));
  write_sweep_csv(sweep, cfg.output_dir / "sweep.csv");
  write_sweep_summary(sweep, phantom.name, cfg.output_dir / "sweep_summary.json");
  print_sweep(sweep);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scatterer size distribution estimation from backscatter spectra"};
  app.require_subcommand(1);

  CommonOptions common;
  EstimatorFlags est_flags;

  auto* bank_cmd = app.add_subcommand("bank", "Build and save the form-factor bank");
  add_common(bank_cmd, common);
  add_grid_flags(bank_cmd, common);

  PhantomFlags phantom_flags;
  auto* phantom_cmd = app.add_subcommand("phantom", "Synthesize phantom spectra and ground truth");
  add_common(phantom_cmd, common);
  add_seed(phantom_cmd, common);
  add_grid_flags(phantom_cmd, common);
  phantom_cmd->add_option("--bank", phantom_flags.bank_path, "Bank file (built from config if absent)");
  phantom_cmd->add_option("--noise-variance", phantom_flags.noise_variance,
                          "Also write a noisy realization with this variance");
  phantom_cmd->add_flag("--include-beyond-band", phantom_flags.include_beyond_band,
                        "Add a phantom with half its beads below the estimable band");

  EstimateFlags estimate_flags;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a size distribution");
  add_common(estimate_cmd, common);
  add_estimator_flags(estimate_cmd, est_flags);
  estimate_cmd->add_option("--bank", estimate_flags.bank_path, "Bank file")->required();
  estimate_cmd->add_option("--input", estimate_flags.input_path, "Spectrum CSV")->required();
  estimate_cmd->add_option("--input-kind", estimate_flags.input_kind, "Spectrum kind")
      ->check(CLI::IsMember({"form-factor", "bsc"}));
  estimate_cmd->add_option("--method", estimate_flags.method, "Estimator")
      ->check(CLI::IsMember({"unconstrained", "constrained", "both"}));
  estimate_cmd->add_option("--scale", estimate_flags.scale,
                           "Form-factor scale s_T; enables number-density output");

  SweepFlags sweep_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "Noise sweep over seeded trials");
  add_common(sweep_cmd, common);
  add_seed(sweep_cmd, common);
  add_grid_flags(sweep_cmd, common);
  add_estimator_flags(sweep_cmd, est_flags);
  sweep_cmd->add_option("--bank", sweep_flags.bank_path, "Bank file (built from config if absent)");
  sweep_cmd->add_option("--variance", sweep_flags.variance, "Noise variance");
  sweep_cmd->add_option("--trials", sweep_flags.trials, "Number of trials");
  sweep_cmd->add_option("--phantom", sweep_flags.phantom, "Phantom name from the configuration");

  RangeFlags range_flags;
  auto* range_cmd = app.add_subcommand("range", "Print the estimable size range");
  add_common(range_cmd, common);
  range_cmd->add_option("--fmin", range_flags.f_min, "Lowest frequency, MHz");
  range_cmd->add_option("--fmax", range_flags.f_max, "Highest frequency, MHz");
  range_cmd->add_option("--speed", range_flags.speed, "Background sound speed, mm/us");

  std::string reproduce_bank;
  auto* reproduce_cmd =
      app.add_subcommand("reproduce", "Four phantoms, both methods, noisy runs and the sweep");
  add_common(reproduce_cmd, common);
  add_seed(reproduce_cmd, common);
  add_grid_flags(reproduce_cmd, common);
  add_estimator_flags(reproduce_cmd, est_flags);
  reproduce_cmd->add_option("--bank", reproduce_bank, "Bank file (built from config if absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*bank_cmd) return run_bank(common);
    if (*phantom_cmd) return run_phantom(common, phantom_flags);
    if (*estimate_cmd) return run_estimate(common, est_flags, estimate_flags);
    if (*sweep_cmd) return run_sweep(common, est_flags, sweep_flags);
    if (*range_cmd) return run_range(common, range_flags);
    if (*reproduce_cmd) return run_reproduce(common, est_flags, reproduce_bank);
  } catch (const numeric_error& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kExitNumeric;
  } catch (const bank_file_error& e) {
    fmt::print(stderr, "bank file error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kExitConfig;
  } catch (const std::domain_error& e) {
    fmt::print(stderr, "domain error: {}\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "filesystem error: {}\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
