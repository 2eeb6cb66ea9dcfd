#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "scatterdist/errors.hpp"
#include "scatterdist/faran.hpp"
#include "scatterdist/grid.hpp"

namespace scatterdist {

// Differential backscattering cross-section sigma_b(size_um, frequency_mhz).
// Any form-factor model can stand in for Faran's by supplying one of these.
using SpectrumModel = std::function<double(double size_um, double frequency_mhz)>;

SpectrumModel faran_model(const AcousticMaterials& materials,
                          SizeConvention convention = SizeConvention::diameter);

// The bank F: row i holds sigma_b(size_i, f_j) / f_j^4 divided by its own
// maximum over the band, s_i. Immutable once built.
class FormFactorBank {
public:
  // Validates shape, entry range, row normalization and scales; throws
  // config_error on violation.
  FormFactorBank(SizeGrid sizes, FrequencyGrid frequencies, Eigen::MatrixXd matrix,
                 std::vector<double> row_scales, AcousticMaterials materials);

  const SizeGrid& sizes() const noexcept { return sizes_; }
  const FrequencyGrid& frequencies() const noexcept { return frequencies_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const std::vector<double>& row_scales() const noexcept { return row_scales_; }
  const AcousticMaterials& materials() const noexcept { return materials_; }

  std::size_t num_sizes() const noexcept { return sizes_.size(); }
  std::size_t num_frequencies() const noexcept { return frequencies_.size(); }

  // sigma_b(size_i, f_j) recovered from the normalized entry.
  double cross_section(std::size_t i, std::size_t j) const;

private:
  SizeGrid sizes_;
  FrequencyGrid frequencies_;
  Eigen::MatrixXd matrix_;
  std::vector<double> row_scales_;
  AcousticMaterials materials_;
};

// Raised when one cell of the bank fails to evaluate.
class bank_build_error : public numeric_error {
public:
  bank_build_error(std::size_t row, std::size_t column, const std::string& what)
      : numeric_error(what), row_(row), column_(column) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::size_t column_;
};

FormFactorBank build_bank(const SizeGrid& sizes, const FrequencyGrid& frequencies,
                          const AcousticMaterials& materials);

// `materials` is recorded in the bank; `model` supplies sigma_b.
FormFactorBank build_bank(const SizeGrid& sizes, const FrequencyGrid& frequencies,
                          const AcousticMaterials& materials,
                          const SpectrumModel& model);

inline constexpr int kBankFileVersion = 1;

// JSON document with 17-significant-digit numbers. The file is written to a
// sibling temporary and renamed into place.
void save_bank(const FormFactorBank& bank, const std::filesystem::path& path);

// Throws bank_file_error (malformed, shape_mismatch, version_mismatch, io).
// Never returns a partially populated bank.
FormFactorBank load_bank(const std::filesystem::path& path);

}  // namespace scatterdist
