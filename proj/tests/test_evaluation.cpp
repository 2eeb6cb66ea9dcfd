#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "scatterdist/bank.hpp"
#include "scatterdist/errors.hpp"
#include "scatterdist/estimator.hpp"
#include "scatterdist/evaluation.hpp"
#include "scatterdist/phantom.hpp"
#include "support.hpp"

using namespace scatterdist;

namespace {

const FormFactorBank& reference_bank() {
  static const FormFactorBank bank = build_bank(
      Grid::linspace_step(1, 100, 1), Grid::linspace_step(3, 9, 0.1), AcousticMaterials{});
  return bank;
}

double closed_form(double kappa, double c, double f) {
  return kappa * c / (2 * std::numbers::pi * f) * 1000.0;
}

}  // namespace

TEST_CASE("estimable range: reference band") {
  const auto r = estimable_size_range(3, 9, 1.498);
  CHECK(r.size_min_um == doctest::Approx(15.9).epsilon(0.1 / 15.9));
  CHECK(r.size_min_um == doctest::Approx(closed_form(0.6, 1.498, 9)).epsilon(1e-15));
  CHECK(r.size_max_um == doctest::Approx(closed_form(1.2, 1.498, 3)).epsilon(1e-15));
  CHECK(r.ka_low == 0.6);
  CHECK(r.ka_high == 1.2);
  CHECK(r.size_min_um < r.size_max_um);
}

TEST_CASE("estimable range: (2, 4, 1.498)") {
  const auto r = estimable_size_range(2, 4, 1.498);
  CHECK(std::abs(r.size_min_um - 35.8) <= 0.1);
  CHECK(std::abs(r.size_max_um - 143.1) <= 0.1);
}

TEST_CASE("estimable range: single frequency has ratio exactly 2") {
  for (double f : {1.0, 3.7, 10.0}) {
    const auto r = estimable_size_range(f, f, 1.54);
    CHECK(r.size_max_um / r.size_min_um == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.size_min_um == doctest::Approx(closed_form(0.6, 1.54, f)).epsilon(1e-15));
  }
}

TEST_CASE("estimable range is antitone in frequency") {
  const auto base = estimable_size_range(3, 9, 1.498);
  CHECK(estimable_size_range(3, 10, 1.498).size_min_um < base.size_min_um);
  CHECK(estimable_size_range(2, 9, 1.498).size_max_um > base.size_max_um);
  CHECK(estimable_size_range(3, 10, 1.498).size_max_um == base.size_max_um);
}

TEST_CASE("estimable range argument checks") {
  CHECK_THROWS_AS(estimable_size_range(0, 9, 1.498), config_error);
  CHECK_THROWS_AS(estimable_size_range(9, 3, 1.498), config_error);
  CHECK_THROWS_AS(estimable_size_range(3, 9, 0), config_error);
}

TEST_CASE("self comparison has zero error") {
  const auto ph = synthesize_phantom(default_phantoms()[3], reference_bank());
  const auto range = estimable_size_range(3, 9, 1.498);
  const auto rep = evaluate(ph.truth.probabilities, ph.truth.probabilities, reference_bank().sizes(), range);
  CHECK(rep.mae_full == 0.0);
  CHECK(rep.mae_in_range == 0.0);
  REQUIRE_FALSE(rep.peak_errors.empty());
  for (double e : rep.peak_errors) CHECK(e == 0.0);
}

TEST_CASE("one-step shift gives peak errors of one step") {
  const SizeGrid grid = Grid::linspace_step(2, 200, 2);
  std::vector<double> truth(grid.size(), 0.0), shifted(grid.size(), 0.0);
  // Two separated modes.
  for (std::size_t i = 0; i < grid.size(); ++i) {
    truth[i] = std::exp(-0.5 * std::pow((grid[i] - 50) / 6, 2)) +
               std::exp(-0.5 * std::pow((grid[i] - 140) / 6, 2));
  }
  double total = 0;
  for (double t : truth) total += t;
  for (auto& t : truth) t /= total;
  for (std::size_t i = 1; i < grid.size(); ++i) shifted[i] = truth[i - 1];
  const EstimableRange wide{1, 1000, 0.6, 1.2};
  const auto rep = evaluate(shifted, truth, grid, wide);
  REQUIRE(rep.peak_errors.size() == 2);
  for (double e : rep.peak_errors) CHECK(e == 2.0);
}

TEST_CASE("uniform estimate vs point mass over four in-range bins") {
  const SizeGrid grid({20, 30, 40, 50});
  const std::vector<double> est(4, 0.25);
  const std::vector<double> truth{0, 1, 0, 0};
  const EstimableRange r{15, 60, 0.6, 1.2};
  const auto rep = evaluate(est, truth, grid, r);
  const double m = 4;
  CHECK(rep.mae_in_range == doctest::Approx(2 * (1 - 1 / m) / m).epsilon(1e-15));
  CHECK(rep.mae_in_range == doctest::Approx(0.375).epsilon(1e-15));
  CHECK(rep.out_of_range_mass == 0.0);
}

TEST_CASE("mae is symmetric and masses add to one") {
  const auto& bank = reference_bank();
  const auto range = estimable_size_range(3, 9, 1.498);
  const auto a = synthesize_phantom(default_phantoms()[0], bank).truth.probabilities;
  const auto b = synthesize_phantom(default_phantoms()[2], bank).truth.probabilities;
  const auto ab = evaluate(a, b, bank.sizes(), range);
  const auto ba = evaluate(b, a, bank.sizes(), range);
  CHECK(ab.mae_full == ba.mae_full);
  CHECK(ab.mae_in_range == ba.mae_in_range);
  double inside = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (range.contains(bank.sizes()[i])) inside += a[i];
  }
  CHECK(ab.out_of_range_mass + inside == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate argument checks") {
  const SizeGrid grid({1, 2, 3});
  const EstimableRange r{1, 3, 0.6, 1.2};
  CHECK_THROWS_AS(evaluate(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}, grid, r), config_error);
  SizeDistributionEstimate empty;
  empty.weights = {0, 0, 0};
  GroundTruth t;
  t.probabilities = {1, 0, 0};
  CHECK_THROWS_AS(evaluate(empty, t, grid, r), degenerate_estimate_error);
}

TEST_CASE("find_peaks: floor, plateaus, edges") {
  CHECK(find_peaks(std::vector<double>{0, 1, 0, 0.05, 0, 0.5, 0}) == std::vector<std::size_t>{1, 5});
  CHECK(find_peaks(std::vector<double>{1, 0.5, 0.2}) == std::vector<std::size_t>{0});
  CHECK(find_peaks(std::vector<double>{0.2, 0.5, 1}) == std::vector<std::size_t>{2});
  CHECK(find_peaks(std::vector<double>{0, 1, 1, 1, 0}) == std::vector<std::size_t>{1});
  CHECK(find_peaks(std::vector<double>{0, 1, 1, 2, 0}) == std::vector<std::size_t>{3});
  CHECK(find_peaks(std::vector<double>{}).empty());
}

TEST_CASE("noise sweep with zero variance has zero spread") {
  SweepSettings s;
  s.variance = 0.0;
  s.trials = 5;
  const auto r = noise_sweep(default_phantoms()[3], reference_bank(), s);
  CHECK(r.records.size() == 10);
  CHECK(r.unconstrained.trials_ok == 5);
  CHECK(r.constrained.trials_ok == 5);
  CHECK(r.unconstrained.std_mae_in_range == 0.0);
  CHECK(r.constrained.std_mae_in_range == 0.0);
  for (std::size_t k = 2; k < r.records.size(); ++k) {
    CHECK(r.records[k].mae_in_range == r.records[k % 2].mae_in_range);
  }
}

TEST_CASE("noise sweep with one trial equals the hand-built pipeline") {
  const auto& bank = reference_bank();
  const auto& spec = default_phantoms()[3];
  SweepSettings s;
  s.trials = 1;
  s.seed = 77;
  s.policy.threshold_fraction = 0.02;
  const auto r = noise_sweep(spec, bank, s);
  REQUIRE(r.records.size() == 2);

  const auto ph = synthesize_phantom(spec, bank);
  const auto noisy = form_factor_from_bsc(add_noise(unit_max_bsc(ph.bsc), s.variance, 77 ^ 0));
  const auto range = estimable_size_range(3, 9, 1.498);
  const auto m1 = estimate_unconstrained(noisy, bank);
  const auto m2 = estimate_constrained(noisy, bank, s.policy);
  const auto e1 = evaluate(m1, ph.truth, bank.sizes(), range);
  const auto e2 = evaluate(m2, ph.truth, bank.sizes(), range);
  CHECK(r.records[0].method == EstimationMethod::unconstrained);
  CHECK(r.records[0].mae_in_range == e1.mae_in_range);
  CHECK(r.records[0].mae_full == e1.mae_full);
  CHECK(r.records[0].residual_l2 == m1.residual_l2);
  CHECK(r.records[1].method == EstimationMethod::constrained);
  CHECK(r.records[1].mae_in_range == e2.mae_in_range);
  CHECK(r.records[1].out_of_range_mass == e2.out_of_range_mass);
  CHECK(r.unconstrained.mean_mae_in_range == e1.mae_in_range);
  CHECK(r.constrained.std_mae_in_range == 0.0);
}

TEST_CASE("noise sweep outputs are byte-identical across runs") {
  TempDir dir("sweep");
  SweepSettings s;
  s.trials = 8;
  s.seed = 5;
  for (const char* tag : {"a", "b"}) {
    const auto r = noise_sweep(default_phantoms()[3], reference_bank(), s);
    write_sweep_csv(r, dir / (std::string(tag) + ".csv"));
    write_sweep_summary(r, "bimodal", dir / (std::string(tag) + ".json"));
  }
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  const auto csv = slurp(dir / "a.csv");
  CHECK(csv.rfind("trial,method,mae_in_range,mae_full,out_of_range_mass,residual_l2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
}

TEST_CASE("noise sweep: failed trials are counted, not fatal") {
  // One-row bank, noise far above the signal: trials whose fitted weight
  // comes out negative fail (no positive weight, or full suppression).
  const auto bank = build_bank(SizeGrid({50.0}), Grid::linspace_step(3, 9, 1.0), AcousticMaterials{});
  PhantomSpec spec;
  spec.name = "pm";
  spec.distribution.shape = PointMassSize{50.0};
  SweepSettings s;
  s.trials = 40;
  s.variance = 100.0;
  const auto r = noise_sweep(spec, bank, s);
  CHECK(r.records.size() == 80);
  CHECK(r.unconstrained.trials_ok + r.unconstrained.trials_failed == 40);
  CHECK(r.constrained.trials_ok + r.constrained.trials_failed == 40);
  CHECK(r.unconstrained.trials_failed > 0);
  CHECK(r.constrained.trials_failed > 0);
  CHECK(r.unconstrained.trials_ok > 0);
  for (const auto& rec : r.records) CHECK(rec.ok == rec.error.empty());
  TempDir dir("sweep-failed");
  write_sweep_csv(r, dir / "s.csv");
  const auto csv = slurp(dir / "s.csv");
  const auto rows = std::count(csv.begin(), csv.end(), '\n') - 1;
  CHECK(rows == r.unconstrained.trials_ok + r.constrained.trials_ok);
  CHECK_THROWS_AS(noise_sweep(spec, bank, SweepSettings{1e-5, 0, 1, {}, {}}), config_error);
}
