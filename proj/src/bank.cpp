#include "scatterdist/bank.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "scatterdist/format.hpp"

namespace scatterdist {

SpectrumModel faran_model(const AcousticMaterials& materials,
                          SizeConvention convention) {
  return [materials, convention](double size_um, double frequency_mhz) {
    return backscatter_cross_section(size_um, frequency_mhz, materials,
                                     std::nullopt, convention)
        .cross_section;
  };
}

FormFactorBank::FormFactorBank(SizeGrid sizes, FrequencyGrid frequencies,
                               Eigen::MatrixXd matrix, std::vector<double> row_scales,
                               AcousticMaterials materials)
    : sizes_(std::move(sizes)),
      frequencies_(std::move(frequencies)),
      matrix_(std::move(matrix)),
      row_scales_(std::move(row_scales)),
      materials_(materials) {
  materials_.validate();
  if (sizes_.empty() || frequencies_.empty()) {
    throw config_error("bank: grids must be non-empty");
  }
  if (static_cast<std::size_t>(matrix_.rows()) != sizes_.size() ||
      static_cast<std::size_t>(matrix_.cols()) != frequencies_.size()) {
    throw config_error("bank: matrix shape does not match the grids");
  }
  if (row_scales_.size() != sizes_.size()) {
    throw config_error("bank: row_scales length does not match the size grid");
  }
  for (std::size_t i = 0; i < row_scales_.size(); ++i) {
    if (!(row_scales_[i] > 0.0) || !std::isfinite(row_scales_[i])) {
      throw config_error("bank: row_scales must be finite and > 0");
    }
    const auto row = matrix_.row(static_cast<Eigen::Index>(i));
    if (!(row.minCoeff() >= 0.0) || !(row.maxCoeff() <= 1.0)) {
      throw config_error("bank: entries must lie in [0, 1] (row " +
                         std::to_string(i) + ")");
    }
    if (std::abs(row.maxCoeff() - 1.0) > 1e-12) {
      throw config_error("bank: row " + std::to_string(i) +
                         " is not max-normalized");
    }
  }
}

double FormFactorBank::cross_section(std::size_t i, std::size_t j) const {
  const double f = frequencies_[j];
  return matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
         row_scales_[i] * (f * f * f * f);
}

FormFactorBank build_bank(const SizeGrid& sizes, const FrequencyGrid& frequencies,
                          const AcousticMaterials& materials) {
  return build_bank(sizes, frequencies, materials, faran_model(materials));
}

FormFactorBank build_bank(const SizeGrid& sizes, const FrequencyGrid& frequencies,
                          const AcousticMaterials& materials,
                          const SpectrumModel& model) {
  const auto rows = static_cast<Eigen::Index>(sizes.size());
  const auto cols = static_cast<Eigen::Index>(frequencies.size());
  if (rows == 0 || cols == 0) throw config_error("bank: grids must be non-empty");

  Eigen::MatrixXd matrix(rows, cols);
  std::vector<double> scales(sizes.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double f = frequencies[static_cast<std::size_t>(j)];
      double sigma = 0.0;
      try {
        sigma = model(sizes[static_cast<std::size_t>(i)], f);
      } catch (const std::exception& e) {
        throw bank_build_error(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                               "bank: cell (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ") failed: " + e.what());
      }
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw bank_build_error(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                               "bank: cell (" + std::to_string(i) + ", " +
                                   std::to_string(j) + ") is not a finite cross-section");
      }
      matrix(i, j) = sigma / (f * f * f * f);
    }
    const double scale = matrix.row(i).maxCoeff();
    if (!(scale > 0.0)) {
      throw bank_build_error(static_cast<std::size_t>(i), 0,
                             "bank: row " + std::to_string(i) + " is identically zero");
    }
    scales[static_cast<std::size_t>(i)] = scale;
    matrix.row(i) /= scale;
  }
  return FormFactorBank(sizes, frequencies, std::move(matrix), std::move(scales),
                        materials);
}

void save_bank(const FormFactorBank& bank, const std::filesystem::path& path) {
  const auto& m = bank.materials();
  std::ostringstream out;
  out << "{\n";
  out << "  \"version\": " << kBankFileVersion << ",\n";
  out << "  \"materials\": {\n";
  out << "    \"sphere_speed_mm_us\": " << fmt_exact(m.sphere_speed_mm_us) << ",\n";
  out << "    \"sphere_poisson_ratio\": " << fmt_exact(m.sphere_poisson_ratio) << ",\n";
  out << "    \"sphere_density_g_cm3\": " << fmt_exact(m.sphere_density_g_cm3) << ",\n";
  out << "    \"background_speed_mm_us\": " << fmt_exact(m.background_speed_mm_us)
      << ",\n";
  out << "    \"background_density_g_cm3\": "
      << fmt_exact(m.background_density_g_cm3) << "\n";
  out << "  },\n";
  out << "  \"sizes_um\": " << fmt_exact_array(bank.sizes().values()) << ",\n";
  out << "  \"frequencies_mhz\": " << fmt_exact_array(bank.frequencies().values())
      << ",\n";
  out << "  \"row_scales\": " << fmt_exact_array(bank.row_scales()) << ",\n";
  out << "  \"matrix\": [\n";
  const auto& f = bank.matrix();
  std::vector<double> row(static_cast<std::size_t>(f.cols()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) row[static_cast<std::size_t>(j)] = f(i, j);
    out << "    " << fmt_exact_array(row) << (i + 1 < f.rows() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) {
      throw bank_file_error(bank_file_error::Kind::io,
                            "save_bank: cannot open " + tmp.string());
    }
    file << out.str();
    if (!file.flush()) {
      throw bank_file_error(bank_file_error::Kind::io,
                            "save_bank: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw bank_file_error(bank_file_error::Kind::io,
                          "save_bank: cannot move file into " + path.string());
  }
}

namespace {

using Kind = bank_file_error::Kind;

std::vector<double> number_array(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) {
    throw bank_file_error(Kind::malformed,
                          std::string("load_bank: missing array '") + key + "'");
  }
  std::vector<double> out;
  out.reserve(doc.at(key).size());
  for (const auto& v : doc.at(key)) {
    if (!v.is_number()) {
      throw bank_file_error(Kind::malformed,
                            std::string("load_bank: non-numeric entry in '") + key + "'");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

double number_field(const nlohmann::json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw bank_file_error(Kind::malformed,
                          std::string("load_bank: missing number '") + key + "'");
  }
  return obj.at(key).get<double>();
}

}  // namespace

FormFactorBank load_bank(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw bank_file_error(Kind::io, "load_bank: cannot open " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(file);
  } catch (const nlohmann::json::exception& e) {
    throw bank_file_error(Kind::malformed,
                          "load_bank: " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw bank_file_error(Kind::malformed, "load_bank: top level is not an object");
  }
  if (!doc.contains("version") || !doc.at("version").is_number_integer()) {
    throw bank_file_error(Kind::malformed, "load_bank: missing integer 'version'");
  }
  if (doc.at("version").get<int>() != kBankFileVersion) {
    throw bank_file_error(Kind::version_mismatch,
                          "load_bank: unsupported version " +
                              std::to_string(doc.at("version").get<int>()));
  }
  if (!doc.contains("materials") || !doc.at("materials").is_object()) {
    throw bank_file_error(Kind::malformed, "load_bank: missing 'materials'");
  }
  const auto& mj = doc.at("materials");
  AcousticMaterials materials{
      number_field(mj, "sphere_speed_mm_us"),
      number_field(mj, "sphere_poisson_ratio"),
      number_field(mj, "sphere_density_g_cm3"),
      number_field(mj, "background_speed_mm_us"),
      number_field(mj, "background_density_g_cm3"),
  };
  auto sizes = number_array(doc, "sizes_um");
  auto freqs = number_array(doc, "frequencies_mhz");
  auto scales = number_array(doc, "row_scales");

  if (!doc.contains("matrix") || !doc.at("matrix").is_array()) {
    throw bank_file_error(Kind::malformed, "load_bank: missing 'matrix'");
  }
  const auto& mat = doc.at("matrix");
  if (mat.size() != sizes.size() || scales.size() != sizes.size()) {
    throw bank_file_error(Kind::shape_mismatch,
                          "load_bank: matrix has " + std::to_string(mat.size()) +
                              " rows, row_scales " + std::to_string(scales.size()) +
                              ", size grid " + std::to_string(sizes.size()));
  }
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(sizes.size()),
                         static_cast<Eigen::Index>(freqs.size()));
  for (std::size_t i = 0; i < mat.size(); ++i) {
    const auto& row = mat[i];
    if (!row.is_array()) {
      throw bank_file_error(Kind::malformed, "load_bank: matrix row is not an array");
    }
    if (row.size() != freqs.size()) {
      throw bank_file_error(Kind::shape_mismatch,
                            "load_bank: matrix row " + std::to_string(i) + " has " +
                                std::to_string(row.size()) + " columns, expected " +
                                std::to_string(freqs.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!row[j].is_number()) {
        throw bank_file_error(Kind::malformed, "load_bank: non-numeric matrix entry");
      }
      matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          row[j].get<double>();
    }
  }
  try {
    return FormFactorBank(SizeGrid(std::move(sizes)), FrequencyGrid(std::move(freqs)),
                          std::move(matrix), std::move(scales), materials);
  } catch (const config_error& e) {
    throw bank_file_error(Kind::malformed, std::string("load_bank: ") + e.what());
  }
}

}  // namespace scatterdist
