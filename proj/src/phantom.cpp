#include "scatterdist/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "scatterdist/errors.hpp"
#include "scatterdist/format.hpp"
#include "scatterdist/random.hpp"

namespace scatterdist {

void PhantomSpec::validate() const {
  if (!(bead_mass_g > 0.0) || !std::isfinite(bead_mass_g)) {
    throw config_error("phantom '" + name + "': bead_mass_g must be > 0");
  }
  if (!(volume_l > 0.0) || !std::isfinite(volume_l)) {
    throw config_error("phantom '" + name + "': volume_l must be > 0");
  }
  materials.validate();
}

std::vector<PhantomSpec> default_phantoms() {
  const auto glass = AcousticMaterials::glass_beads_in_gel();
  return {
      {"unimodal_narrow", 200.0, 1.6, glass, {GaussianSize{40.0, 5.0}, {}}},
      {"unimodal_broad", 200.0, 1.6, glass, {GaussianSize{60.0, 10.0}, {}}},
      {"uniform", 200.0, 1.6, glass, {UniformSize{25.0, 75.0}, {}}},
      {"bimodal", 200.0, 1.6, glass,
       {BimodalSize{{30.0, 4.0, 0.5}, {70.0, 4.0, 0.5}}, {}}},
  };
}

PhantomSpec beyond_band_phantom() {
  return {"beyond_band", 200.0, 1.6, AcousticMaterials::glass_beads_in_gel(),
          {BimodalSize{{10.0, 3.0, 0.5}, {60.0, 8.0, 0.5}}, {}}};
}

namespace {

double gaussian_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

void check_sd(double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    throw config_error("size distribution: standard deviation must be > 0");
  }
}

struct Sampler {
  const SizeGrid& sizes;

  std::vector<double> operator()(const GaussianSize& g) const {
    check_sd(g.std_um);
    std::vector<double> p(sizes.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = gaussian_pdf(sizes[i], g.mean_um, g.std_um);
    return p;
  }

  std::vector<double> operator()(const UniformSize& u) const {
    if (!(u.hi_um >= u.lo_um)) throw config_error("uniform size: need lo <= hi");
    const double slack = 1e-9 * std::max(1.0, std::abs(u.hi_um));
    std::vector<double> p(sizes.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = (sizes[i] >= u.lo_um - slack && sizes[i] <= u.hi_um + slack) ? 1.0 : 0.0;
    }
    return p;
  }

  std::vector<double> operator()(const BimodalSize& b) const {
    check_sd(b.first.std_um);
    check_sd(b.second.std_um);
    if (!(b.first.weight >= 0.0) || !(b.second.weight >= 0.0) ||
        !(b.first.weight + b.second.weight > 0.0)) {
      throw config_error("bimodal size: weights must be >= 0 and not both zero");
    }
    std::vector<double> p(sizes.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = b.first.weight * gaussian_pdf(sizes[i], b.first.mean_um, b.first.std_um) +
             b.second.weight * gaussian_pdf(sizes[i], b.second.mean_um, b.second.std_um);
    }
    return p;
  }

  std::vector<double> operator()(const PointMassSize& pm) const {
    const auto v = sizes.values();
    const double left_gap = v.size() > 1 ? v[1] - v[0] : v[0];
    const double right_gap = v.size() > 1 ? v[v.size() - 1] - v[v.size() - 2] : v[0];
    if (!(pm.size_um >= v.front() - 0.5 * left_gap) ||
        !(pm.size_um <= v.back() + 0.5 * right_gap)) {
      throw empty_support_error("point mass at " + fmt_exact(pm.size_um) +
                                " um lies outside the size grid");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      // Strict comparison keeps the smaller size on an exact tie.
      if (std::abs(v[i] - pm.size_um) < std::abs(v[best] - pm.size_um)) best = i;
    }
    std::vector<double> p(v.size(), 0.0);
    p[best] = 1.0;
    return p;
  }

  std::vector<double> operator()(const ExplicitSize& e) const {
    if (e.probabilities.size() != sizes.size()) {
      throw config_error("explicit size distribution: expected " +
                         std::to_string(sizes.size()) + " probabilities, got " +
                         std::to_string(e.probabilities.size()));
    }
    for (double q : e.probabilities) {
      if (!(q >= 0.0) || !std::isfinite(q)) {
        throw config_error("explicit size distribution: probabilities must be >= 0");
      }
    }
    return e.probabilities;
  }
};

double bead_mass_g(double diameter_um, double density_g_cm3) {
  const double d_cm = diameter_um * 1e-4;
  return density_g_cm3 * std::numbers::pi / 6.0 * d_cm * d_cm * d_cm;
}

}  // namespace

std::vector<double> discretize_distribution(const SizeDistributionSpec& spec,
                                            const SizeGrid& sizes) {
  if (sizes.empty()) throw config_error("discretize_distribution: empty size grid");
  auto p = std::visit(Sampler{sizes}, spec.shape);
  double total = 0.0;
  for (double q : p) total += q;
  if (!(total > 0.0)) {
    throw empty_support_error("size distribution puts no mass on the size grid");
  }
  for (auto& q : p) q /= total;
  return p;
}

SyntheticPhantom synthesize_phantom(const PhantomSpec& phantom, const FormFactorBank& bank) {
  phantom.validate();
  if (!(phantom.materials == bank.materials())) {
    throw config_error("phantom '" + phantom.name +
                       "': materials differ from the bank's materials");
  }
  const auto& sizes = bank.sizes();
  const auto& freqs = bank.frequencies();
  const auto p = discretize_distribution(phantom.distribution, sizes);
  const double rho = phantom.materials.sphere_density_g_cm3;

  std::vector<double> counts(sizes.size());
  if (phantom.distribution.semantics == FractionSemantics::number_fraction) {
    double mass_per_unit = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mass_per_unit += p[i] * bead_mass_g(sizes[i], rho);
    const double total_count = phantom.bead_mass_g / mass_per_unit;
    for (std::size_t i = 0; i < p.size(); ++i) counts[i] = p[i] * total_count;
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) {
      counts[i] = p[i] * phantom.bead_mass_g / bead_mass_g(sizes[i], rho);
    }
  }

  const double volume_cm3 = phantom.volume_l * 1000.0;
  GroundTruth truth;
  truth.number_densities.resize(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) truth.number_densities[i] = counts[i] / volume_cm3;

  SpectrumVector bsc{freqs, std::vector<double>(freqs.size(), 0.0), SpectrumKind::bsc, 1.0};
  for (std::size_t j = 0; j < freqs.size(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      acc += truth.number_densities[i] * bank.cross_section(i, j);
    }
    bsc.values[j] = acc;
  }

  auto form_factor = form_factor_from_bsc(bsc);
  truth.weights.resize(sizes.size());
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    truth.weights[i] = truth.number_densities[i] * bank.row_scales()[i] / form_factor.scale;
    weight_sum += truth.weights[i];
  }
  truth.probabilities.resize(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) truth.probabilities[i] = truth.weights[i] / weight_sum;

  return {std::move(bsc), std::move(form_factor), std::move(truth), std::move(counts)};
}

SpectrumVector unit_max_bsc(const SpectrumVector& bsc) {
  if (bsc.kind != SpectrumKind::bsc) throw config_error("unit_max_bsc: expected a bsc spectrum");
  const double peak = *std::max_element(bsc.values.begin(), bsc.values.end());
  if (!(peak > 0.0)) throw numeric_error("unit_max_bsc: spectrum maximum is not positive");
  SpectrumVector out = bsc;
  for (auto& v : out.values) v /= peak;
  out.scale = bsc.scale * peak;
  return out;
}

SpectrumVector form_factor_from_bsc(const SpectrumVector& bsc) {
  if (bsc.kind != SpectrumKind::bsc) {
    throw config_error("form_factor_from_bsc: expected a bsc spectrum");
  }
  if (bsc.values.size() != bsc.frequencies.size()) {
    throw config_error("form_factor_from_bsc: values do not match the frequency grid");
  }
  SpectrumVector out{bsc.frequencies, bsc.values, SpectrumKind::form_factor, 1.0};
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    const double f = bsc.frequencies[j];
    out.values[j] /= f * f * f * f;
  }
  const double peak = *std::max_element(out.values.begin(), out.values.end());
  if (!(peak > 0.0)) {
    throw numeric_error("form_factor_from_bsc: BSC/f^4 has no positive value to normalize by");
  }
  for (auto& v : out.values) v /= peak;
  out.scale = bsc.scale * peak;
  return out;
}

SpectrumVector add_noise(const SpectrumVector& spectrum, double variance, std::uint64_t seed) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw config_error("add_noise: variance must be >= 0");
  }
  if (spectrum.kind != SpectrumKind::bsc) {
    throw config_error("add_noise: noise is added to bsc spectra only");
  }
  SpectrumVector out = spectrum;
  if (variance == 0.0) return out;
  const double sd = std::sqrt(variance);
  NormalStream normal(seed);
  for (auto& v : out.values) v += sd * normal.next();
  return out;
}

void write_spectrum_csv(const SpectrumVector& spectrum, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << "frequency_mhz,value\n";
  for (std::size_t j = 0; j < spectrum.values.size(); ++j) {
    out << fmt_exact(spectrum.frequencies[j]) << ',' << fmt_exact(spectrum.values[j]) << '\n';
  }
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

SpectrumVector read_spectrum_csv(const std::filesystem::path& path, SpectrumKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open spectrum file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "frequency_mhz,value") {
    throw config_error(path.string() + ": expected header 'frequency_mhz,value'");
  }
  std::vector<double> freqs, values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw config_error(path.string() + ":" + std::to_string(line_no) + ": expected two columns");
    }
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
      freqs.push_back(std::stod(a, &used));
      if (used != a.size()) throw std::invalid_argument(a);
      values.push_back(std::stod(b, &used));
      if (used != b.size()) throw std::invalid_argument(b);
    } catch (const std::logic_error&) {
      throw config_error(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return {FrequencyGrid(std::move(freqs)), std::move(values), kind, 1.0};
}

void write_ground_truth_csv(const GroundTruth& truth, const SizeGrid& sizes,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << "size_um,number_density_per_cm3,weight,probability\n";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out << fmt_exact(sizes[i]) << ',' << fmt_exact(truth.number_densities[i]) << ','
        << fmt_exact(truth.weights[i]) << ',' << fmt_exact(truth.probabilities[i]) << '\n';
  }
  if (!out.flush()) throw config_error("write failed for " + path.string());
}

}  // namespace scatterdist
