#include "scatterdist/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "scatterdist/errors.hpp"
#include "scatterdist/format.hpp"

namespace scatterdist {

void SuppressionPolicy::validate() const {
  if (!(threshold_fraction >= 0.0 && threshold_fraction < 1.0)) {
    throw config_error("suppression policy: theta must lie in [0, 1)");
  }
  if (max_iterations < 1) {
    throw config_error("suppression policy: max_iterations must be >= 1");
  }
}

std::string to_string(EstimationMethod method) {
  return method == EstimationMethod::unconstrained ? "unconstrained" : "constrained";
}

std::string to_string(SuppressionMode mode) {
  return mode == SuppressionMode::threshold ? "threshold" : "contiguous-run";
}

Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& bank_rows, const Eigen::VectorXd& rhs,
                               double rcond) {
  if (bank_rows.cols() != rhs.size()) {
    throw config_error("solve_min_norm: right-hand side length does not match the bank");
  }
  if (!(rcond >= 0.0)) throw config_error("solve_min_norm: rcond must be >= 0");
  // A * F = rhs  <=>  F^T * A^T = rhs^T
  const Eigen::MatrixXd system = bank_rows.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) {
    throw numeric_error("solve_min_norm: bank is identically zero");
  }
  const double cutoff = rcond * sv(0);
  Eigen::VectorXd projected = svd.matrixU().transpose() * rhs;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    projected(k) = sv(k) > cutoff ? projected(k) / sv(k) : 0.0;
  }
  return svd.matrixV() * projected;
}

namespace {

Eigen::VectorXd as_vector(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> as_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

void check_target(const SpectrumVector& target, const FormFactorBank& bank) {
  if (target.kind != SpectrumKind::form_factor) {
    throw config_error("estimator: target spectrum must be a form factor");
  }
  if (!(target.frequencies == bank.frequencies()) ||
      target.values.size() != bank.num_frequencies()) {
    throw config_error("estimator: target frequency grid does not match the bank");
  }
}

void fill_probabilities(SizeDistributionEstimate& est) {
  const bool any_positive =
      std::any_of(est.weights.begin(), est.weights.end(), [](double w) { return w > 0.0; });
  est.probabilities = any_positive ? normalize_distribution(est.weights) : std::vector<double>{};
}

}  // namespace

double residual_l2(const FormFactorBank& bank, std::span<const double> weights,
                   std::span<const double> target) {
  const Eigen::VectorXd model = bank.matrix().transpose() * as_vector(weights);
  return (model - as_vector(target)).norm();
}

SizeDistributionEstimate estimate_unconstrained(const SpectrumVector& target,
                                                const FormFactorBank& bank,
                                                const SolverOptions& options) {
  check_target(target, bank);
  SizeDistributionEstimate est;
  est.weights = as_std(solve_min_norm(bank.matrix(), as_vector(target.values), options.rcond));
  est.residual_l2 = residual_l2(bank, est.weights, target.values);
  est.method = EstimationMethod::unconstrained;
  est.rcond = options.rcond;
  est.iterations = 0;
  fill_probabilities(est);
  return est;
}

std::vector<std::size_t> select_suppression(std::span<const double> weights,
                                            const SuppressionPolicy& policy) {
  policy.validate();
  if (weights.empty()) throw config_error("select_suppression: empty weight vector");
  const double threshold =
      policy.threshold_fraction * *std::max_element(weights.begin(), weights.end());
  const std::size_t n = weights.size();

  std::vector<bool> mark(n, false);
  for (std::size_t i = 0; i < n; ++i) mark[i] = weights[i] < 0.0;

  if (policy.mode == SuppressionMode::threshold) {
    for (std::size_t i = 0; i < n; ++i) mark[i] = mark[i] || weights[i] < threshold;
  } else {
    std::size_t best_start = n, best_end = n;
    double best_score = -1.0;
    std::size_t i = 0;
    while (i < n) {
      if (!(weights[i] < threshold)) {
        ++i;
        continue;
      }
      std::size_t j = i;
      double score = 0.0;
      while (j + 1 < n && weights[j + 1] < threshold) {
        score += std::abs(weights[j + 1] - weights[j]);
        ++j;
      }
      if (score > best_score) {
        best_score = score;
        best_start = i;
        best_end = j;
      }
      i = j + 1;
    }
    for (std::size_t k = best_start; k <= best_end && k < n; ++k) mark[k] = true;
  }

  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (mark[k]) out.push_back(k);
  }
  if (out.size() == n) {
    throw suppression_error("select_suppression: every size would be suppressed");
  }
  return out;
}

SizeDistributionEstimate solve_with_suppression(const SpectrumVector& target,
                                                const FormFactorBank& bank,
                                                std::span<const std::size_t> suppressed,
                                                const SolverOptions& options) {
  check_target(target, bank);
  const std::size_t n = bank.num_sizes();
  std::vector<bool> drop(n, false);
  for (auto idx : suppressed) {
    if (idx >= n) throw config_error("solve_with_suppression: index out of range");
    drop[idx] = true;
  }
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (!drop[i]) kept.push_back(static_cast<Eigen::Index>(i));
  }
  if (kept.empty()) throw suppression_error("solve_with_suppression: no sizes left to fit");

  Eigen::MatrixXd reduced(static_cast<Eigen::Index>(kept.size()), bank.matrix().cols());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    reduced.row(static_cast<Eigen::Index>(r)) = bank.matrix().row(kept[r]);
  }
  const Eigen::VectorXd sub = solve_min_norm(reduced, as_vector(target.values), options.rcond);

  SizeDistributionEstimate est;
  est.weights.assign(n, 0.0);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    est.weights[static_cast<std::size_t>(kept[r])] = sub(static_cast<Eigen::Index>(r));
  }
  est.suppressed.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) est.suppressed.push_back(i);
  }
  est.residual_l2 = residual_l2(bank, est.weights, target.values);
  est.method = EstimationMethod::constrained;
  est.rcond = options.rcond;
  est.iterations = 1;
  fill_probabilities(est);
  return est;
}

SizeDistributionEstimate estimate_constrained(const SpectrumVector& target,
                                              const FormFactorBank& bank,
                                              const SuppressionPolicy& policy,
                                              const SolverOptions& options) {
  policy.validate();
  auto current = estimate_unconstrained(target, bank, options);
  std::vector<bool> in_set(bank.num_sizes(), false);
  std::vector<std::size_t> active;

  int rounds = 0;
  bool converged = false;
  for (;;) {
    bool grew = false;
    for (auto idx : select_suppression(current.weights, policy)) {
      if (!in_set[idx]) {
        in_set[idx] = true;
        active.push_back(idx);
        grew = true;
      }
    }
    if (!grew) {
      converged = true;
      break;
    }
    if (rounds == policy.max_iterations) break;
    if (active.size() == bank.num_sizes()) {
      throw suppression_error("estimate_constrained: every size has been suppressed");
    }
    std::sort(active.begin(), active.end());
    current = solve_with_suppression(target, bank, active, options);
    ++rounds;
  }

  current.method = EstimationMethod::constrained;
  current.iterations = rounds;
  current.converged = converged;
  current.policy = policy;
  current.rcond = options.rcond;
  return current;
}

std::vector<double> normalize_distribution(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += std::max(w, 0.0);
  if (!(total > 0.0)) {
    throw degenerate_estimate_error("normalize_distribution: no positive weight");
  }
  std::vector<double> p(weights.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::max(weights[i], 0.0) / total;
  return p;
}

std::vector<double> normalize_distribution(const SizeDistributionEstimate& estimate) {
  return normalize_distribution(estimate.weights);
}

std::vector<double> weights_to_number_density(const SizeDistributionEstimate& estimate,
                                              const FormFactorBank& bank,
                                              double target_scale) {
  if (!(target_scale > 0.0) || !std::isfinite(target_scale)) {
    throw config_error("weights_to_number_density: target scale must be > 0");
  }
  if (estimate.weights.size() != bank.num_sizes()) {
    throw config_error("weights_to_number_density: estimate does not match the bank");
  }
  std::vector<double> n(estimate.weights.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    n[i] = std::max(estimate.weights[i], 0.0) * target_scale / bank.row_scales()[i];
  }
  return n;
}

void write_estimate_csv(const SizeDistributionEstimate& estimate, const SizeGrid& sizes,
                        const std::filesystem::path& path) {
  if (estimate.weights.size() != sizes.size()) {
    throw config_error("write_estimate_csv: estimate does not match the size grid");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  std::vector<bool> sup(sizes.size(), false);
  for (auto i : estimate.suppressed) sup[i] = true;
  out << "size_um,weight,probability,suppressed\n";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double p = estimate.probabilities.empty() ? 0.0 : estimate.probabilities[i];
    out << fmt_exact(sizes[i]) << ',' << fmt_exact(estimate.weights[i]) << ','
        << fmt_exact(p) << ',' << (sup[i] ? 1 : 0) << '\n';
  }
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

void write_estimate_summary(const SizeDistributionEstimate& estimate,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << "{\n";
  out << "  \"method\": \"" << to_string(estimate.method) << "\",\n";
  out << "  \"policy\": {\n";
  out << "    \"mode\": \"" << to_string(estimate.policy.mode) << "\",\n";
  out << "    \"theta\": " << fmt_exact(estimate.policy.threshold_fraction) << ",\n";
  out << "    \"max_iterations\": " << estimate.policy.max_iterations << "\n";
  out << "  },\n";
  out << "  \"residual_l2\": " << fmt_exact(estimate.residual_l2) << ",\n";
  out << "  \"rcond\": " << fmt_exact(estimate.rcond) << ",\n";
  out << "  \"iterations\": " << estimate.iterations << ",\n";
  out << "  \"converged\": " << (estimate.converged ? "true" : "false") << ",\n";
  out << "  \"suppressed_count\": " << estimate.suppressed.size() << "\n";
  out << "}\n";
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

}  // namespace scatterdist
