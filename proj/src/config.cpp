#include "scatterdist/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "scatterdist/errors.hpp"

namespace scatterdist {

SizeGrid RunConfig::sizes() const {
  return SizeGrid(Grid::linspace_step(size_grid.min, size_grid.max, size_grid.step));
}

FrequencyGrid RunConfig::frequencies() const {
  return FrequencyGrid(
      Grid::linspace_step(frequency_grid.min, frequency_grid.max, frequency_grid.step));
}

void RunConfig::validate() const {
  materials.validate();
  (void)sizes();
  (void)frequencies();
  policy.validate();
  if (!(solver.rcond >= 0.0)) throw config_error("config: rcond must be >= 0");
  if (!(noise.variance >= 0.0)) throw config_error("config: noise variance must be >= 0");
  if (noise.trials < 1) throw config_error("config: noise trials must be >= 1");
  std::set<std::string> names;
  for (const auto& p : phantoms) {
    p.validate();
    if (p.name.empty()) throw config_error("config: phantom without a name");
    if (!names.insert(p.name).second) {
      throw config_error("config: duplicate phantom name '" + p.name + "'");
    }
  }
}

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw config_error("config: unknown key '" + it.key() + "' in " + where);
  }
}

const json& object_at(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_object()) throw config_error("config: '" + std::string(key) + "' in " + where +
                                         " must be an object");
  return v;
}

void read_number(const json& obj, const char* key, double& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number()) throw config_error("config: '" + std::string(key) + "' must be a number");
  out = obj.at(key).get<double>();
}

void read_int(const json& obj, const char* key, int& out) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_number_integer()) {
    throw config_error("config: '" + std::string(key) + "' must be an integer");
  }
  out = obj.at(key).get<int>();
}

double required_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj.at(key).is_number()) {
    throw config_error("config: " + where + " needs number '" + key + "'");
  }
  return obj.at(key).get<double>();
}

GridSpec read_grid(const json& obj, GridSpec g, const std::string& where) {
  reject_unknown(obj, {"min", "max", "step"}, where);
  read_number(obj, "min", g.min);
  read_number(obj, "max", g.max);
  read_number(obj, "step", g.step);
  return g;
}

MixtureComponent read_component(const json& obj, const std::string& where) {
  reject_unknown(obj, {"mean_um", "std_um", "weight"}, where);
  MixtureComponent c;
  c.mean_um = required_number(obj, "mean_um", where);
  c.std_um = required_number(obj, "std_um", where);
  c.weight = required_number(obj, "weight", where);
  return c;
}

SizeShape read_shape(const json& obj, const std::string& where) {
  if (!obj.contains("kind") || !obj.at("kind").is_string()) {
    throw config_error("config: " + where + " needs a string 'kind'");
  }
  const auto kind = obj.at("kind").get<std::string>();
  if (kind == "unimodal_gaussian") {
    reject_unknown(obj, {"kind", "mean_um", "std_um"}, where);
    return GaussianSize{required_number(obj, "mean_um", where),
                        required_number(obj, "std_um", where)};
  }
  if (kind == "uniform") {
    reject_unknown(obj, {"kind", "lo_um", "hi_um"}, where);
    return UniformSize{required_number(obj, "lo_um", where), required_number(obj, "hi_um", where)};
  }
  if (kind == "bimodal_gaussian_mixture") {
    reject_unknown(obj, {"kind", "components"}, where);
    if (!obj.contains("components") || !obj.at("components").is_array() ||
        obj.at("components").size() != 2) {
      throw config_error("config: " + where + " needs exactly two 'components'");
    }
    return BimodalSize{read_component(obj.at("components")[0], where),
                       read_component(obj.at("components")[1], where)};
  }
  if (kind == "point_mass") {
    reject_unknown(obj, {"kind", "size_um"}, where);
    return PointMassSize{required_number(obj, "size_um", where)};
  }
  if (kind == "explicit") {
    reject_unknown(obj, {"kind", "probabilities"}, where);
    if (!obj.contains("probabilities") || !obj.at("probabilities").is_array()) {
      throw config_error("config: " + where + " needs a 'probabilities' array");
    }
    ExplicitSize e;
    for (const auto& v : obj.at("probabilities")) {
      if (!v.is_number()) throw config_error("config: " + where + ": non-numeric probability");
      e.probabilities.push_back(v.get<double>());
    }
    return e;
  }
  throw config_error("config: " + where + ": unknown distribution kind '" + kind + "'");
}

PhantomSpec read_phantom(const json& obj, const AcousticMaterials& materials, std::size_t index) {
  const std::string where = "phantoms[" + std::to_string(index) + "]";
  if (!obj.is_object()) throw config_error("config: " + where + " must be an object");
  reject_unknown(obj, {"name", "bead_mass_g", "volume_l", "fraction", "distribution"}, where);
  PhantomSpec p;
  p.materials = materials;
  if (!obj.contains("name") || !obj.at("name").is_string()) {
    throw config_error("config: " + where + " needs a string 'name'");
  }
  p.name = obj.at("name").get<std::string>();
  read_number(obj, "bead_mass_g", p.bead_mass_g);
  read_number(obj, "volume_l", p.volume_l);
  if (obj.contains("fraction")) {
    const auto f = obj.at("fraction").is_string() ? obj.at("fraction").get<std::string>() : "";
    if (f == "number") {
      p.distribution.semantics = FractionSemantics::number_fraction;
    } else if (f == "mass") {
      p.distribution.semantics = FractionSemantics::mass_fraction;
    } else {
      throw config_error("config: " + where + ": 'fraction' must be \"number\" or \"mass\"");
    }
  }
  if (!obj.contains("distribution") || !obj.at("distribution").is_object()) {
    throw config_error("config: " + where + " needs a 'distribution' object");
  }
  p.distribution.shape = read_shape(obj.at("distribution"), where + ".distribution");
  return p;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw config_error("config: top level must be an object");
  reject_unknown(doc,
                 {"materials", "size_grid", "frequency_grid", "phantoms", "estimator", "noise",
                  "output_dir"},
                 "config");

  RunConfig cfg;
  try {
    if (doc.contains("materials")) {
      const auto& m = object_at(doc, "materials", "config");
      reject_unknown(m,
                     {"sphere_speed_mm_us", "sphere_poisson_ratio", "sphere_density_g_cm3",
                      "background_speed_mm_us", "background_density_g_cm3"},
                     "materials");
      read_number(m, "sphere_speed_mm_us", cfg.materials.sphere_speed_mm_us);
      read_number(m, "sphere_poisson_ratio", cfg.materials.sphere_poisson_ratio);
      read_number(m, "sphere_density_g_cm3", cfg.materials.sphere_density_g_cm3);
      read_number(m, "background_speed_mm_us", cfg.materials.background_speed_mm_us);
      read_number(m, "background_density_g_cm3", cfg.materials.background_density_g_cm3);
    }
    // Default phantoms follow the configured materials.
    for (auto& p : cfg.phantoms) p.materials = cfg.materials;

    if (doc.contains("size_grid")) {
      cfg.size_grid = read_grid(object_at(doc, "size_grid", "config"), cfg.size_grid, "size_grid");
    }
    if (doc.contains("frequency_grid")) {
      cfg.frequency_grid = read_grid(object_at(doc, "frequency_grid", "config"),
                                     cfg.frequency_grid, "frequency_grid");
    }
    if (doc.contains("phantoms")) {
      const auto& arr = doc.at("phantoms");
      if (!arr.is_array()) throw config_error("config: 'phantoms' must be an array");
      cfg.phantoms.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        cfg.phantoms.push_back(read_phantom(arr[i], cfg.materials, i));
      }
    }
    if (doc.contains("estimator")) {
      const auto& e = object_at(doc, "estimator", "config");
      reject_unknown(e, {"mode", "theta", "max_iterations", "rcond"}, "estimator");
      if (e.contains("mode")) {
        const auto mode = e.at("mode").is_string() ? e.at("mode").get<std::string>() : "";
        if (mode == "threshold") {
          cfg.policy.mode = SuppressionMode::threshold;
        } else if (mode == "contiguous-run" || mode == "contiguous_run") {
          cfg.policy.mode = SuppressionMode::contiguous_run;
        } else {
          throw config_error("config: estimator.mode must be threshold or contiguous-run");
        }
      }
      read_number(e, "theta", cfg.policy.threshold_fraction);
      read_int(e, "max_iterations", cfg.policy.max_iterations);
      read_number(e, "rcond", cfg.solver.rcond);
    }
    if (doc.contains("noise")) {
      const auto& n = object_at(doc, "noise", "config");
      reject_unknown(n, {"variance", "trials", "seed", "phantom"}, "noise");
      read_number(n, "variance", cfg.noise.variance);
      read_int(n, "trials", cfg.noise.trials);
      if (n.contains("seed")) {
        if (!n.at("seed").is_number_unsigned()) {
          throw config_error("config: noise.seed must be a non-negative integer");
        }
        cfg.noise.seed = n.at("seed").get<std::uint64_t>();
      }
      if (n.contains("phantom")) {
        if (!n.at("phantom").is_string()) throw config_error("config: noise.phantom must be a string");
        cfg.noise.phantom = n.at("phantom").get<std::string>();
      }
    }
    if (doc.contains("output_dir")) {
      if (!doc.at("output_dir").is_string()) throw config_error("config: output_dir must be a string");
      cfg.output_dir = doc.at("output_dir").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace scatterdist
