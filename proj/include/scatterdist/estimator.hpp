#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scatterdist/bank.hpp"
#include "scatterdist/phantom.hpp"

namespace scatterdist {

enum class SuppressionMode {
  // Suppress every weight below theta * max(A), plus every negative weight.
  threshold,
  // Suppress the run of consecutive below-threshold weights with the largest
  // total variation sum |A_{i+1} - A_i|, plus every negative weight. Ties go to
  // the run that starts first.
  contiguous_run,
};

struct SuppressionPolicy {
  SuppressionMode mode = SuppressionMode::threshold;
  // theta in [0, 1).
  double threshold_fraction = 0.0;
  int max_iterations = 1;

  void validate() const;
};

struct SolverOptions {
  // Singular values below rcond * sigma_max are treated as zero.
  double rcond = 1e-12;
};

enum class EstimationMethod { unconstrained, constrained };

std::string to_string(EstimationMethod method);
std::string to_string(SuppressionMode mode);

struct SizeDistributionEstimate {
  std::vector<double> weights;
  // Sorted, ascending. Always empty for the unconstrained method.
  std::vector<std::size_t> suppressed;
  double residual_l2 = 0.0;
  EstimationMethod method = EstimationMethod::unconstrained;
  // Clip-and-normalize view of the weights. Empty when no weight is positive.
  std::vector<double> probabilities;
  // Suppression/re-solve rounds performed (0 for the unconstrained method).
  int iterations = 0;
  // False when max_iterations ran out while the suppression set still grew.
  bool converged = true;
  double rcond = 0.0;
  SuppressionPolicy policy;
};

// Minimum-norm least-squares solution of A * F = rhs, where F has one row
// per size. Uses the SVD of F^T with relative singular-value cutoff rcond.
// Throws numeric_error if F is identically zero.
Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& bank_rows, const Eigen::VectorXd& rhs,
                               double rcond);

// ||A * F - F_T||_2.
double residual_l2(const FormFactorBank& bank, std::span<const double> weights,
                   std::span<const double> target);

// Method 1: A = F_T * pinv(F). Entries may be negative.
SizeDistributionEstimate estimate_unconstrained(const SpectrumVector& target,
                                                const FormFactorBank& bank,
                                                const SolverOptions& options = {});

// Which weights to zero before the constrained re-solve.
// Throws suppression_error if every index would be suppressed.
std::vector<std::size_t> select_suppression(std::span<const double> weights,
                                            const SuppressionPolicy& policy);

// Re-solve with the rows in `suppressed` removed; those weights come back as
// exactly 0.
SizeDistributionEstimate solve_with_suppression(const SpectrumVector& target,
                                                const FormFactorBank& bank,
                                                std::span<const std::size_t> suppressed,
                                                const SolverOptions& options = {});

// Method 2: start from Method 1, then alternate select_suppression and
// solve_with_suppression, growing the suppressed set, until it stops growing
// or policy.max_iterations re-solves have run.
SizeDistributionEstimate estimate_constrained(const SpectrumVector& target,
                                              const FormFactorBank& bank,
                                              const SuppressionPolicy& policy = {},
                                              const SolverOptions& options = {});

// p_i = max(A_i, 0) / sum_k max(A_k, 0).
// Throws degenerate_estimate_error when no weight is positive.
std::vector<double> normalize_distribution(std::span<const double> weights);
std::vector<double> normalize_distribution(const SizeDistributionEstimate& estimate);

// Number densities n_i = max(A_i, 0) * s_T / s_i, in the units of the
// phantom's number densities. s_T is the target form factor's scale.
std::vector<double> weights_to_number_density(const SizeDistributionEstimate& estimate,
                                              const FormFactorBank& bank, double target_scale);

// Header `size_um,weight,probability,suppressed`.
void write_estimate_csv(const SizeDistributionEstimate& estimate, const SizeGrid& sizes,
                        const std::filesystem::path& path);

// JSON summary: method, policy, residual_l2, rcond, iterations, converged.
void write_estimate_summary(const SizeDistributionEstimate& estimate,
                            const std::filesystem::path& path);

}  // namespace scatterdist
