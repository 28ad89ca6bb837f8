#include "plateid/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace plateid {

namespace {

using boost::property_tree::ptree;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"geometry",
       {"length", "width", "thickness", "nx", "ny", "clamped_side", "accel_x", "accel_y", "accel_radius",
        "accel_mass", "test_x", "test_y", "mesh"}},
      {"material",
       {"density", "youngs_modulus", "poisson", "loss_factor", "rigidity", "d11", "d12", "d16", "d22", "d26",
        "d66", "beta11", "beta12", "beta16", "beta22", "beta26", "beta66"}},
      {"model", {"accel_mode"}},
      {"frequencies", {"f_min", "f_max", "count"}},
      {"noise", {"level", "seed"}},
      {"fit", {"parametrization", "initial", "initial_relative_error", "thresholds", "data"}},
      {"trust_region",
       {"delta0", "delta_max", "eta", "max_iterations", "update", "gradient_tolerance", "step_tolerance",
        "value_tolerance", "decrease_tolerance"}},
      {"de",
       {"population", "f_min", "f_max", "crossover", "tolerance", "restarts", "max_evaluations", "seed",
        "fixed_loss_factor", "d_lower", "d_upper", "nu100_lower", "nu100_upper"}},
      {"modes", {"count"}},
      {"check", {"theta", "noise_level"}},
      {"output", {"dir"}},
      {"run", {"threads"}},
  };
  return keys;
}

class Reader {
public:
  explicit Reader(const ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& key, T& out) const {
    const auto node = tree_.get_child_optional(ptree::path_type(key, '.'));
    if (!node) return;
    const std::string text = boost::trim_copy(node->data());
    std::istringstream in(text);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("invalid value '" + text + "' for " + key);
    out = value;
  }

  void get(const std::string& key, std::string& out) const {
    if (auto v = tree_.get_optional<std::string>(ptree::path_type(key, '.'))) out = boost::trim_copy(*v);
  }

  bool has(const std::string& key) const {
    return static_cast<bool>(tree_.get_child_optional(ptree::path_type(key, '.')));
  }

  std::optional<Eigen::VectorXd> vector(const std::string& key) const {
    std::string text;
    get(key, text);
    if (text.empty()) return std::nullopt;
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(", \t"), boost::token_compress_on);
    std::vector<double> values;
    for (const std::string& p : parts) {
      if (p.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(p, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used != p.size()) throw ConfigError("invalid number '" + p + "' in " + key);
      values.push_back(v);
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }

private:
  const ptree& tree_;
};

void check_schema(const ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty() && body.empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }
}

MaterialParams read_material(const Reader& r, double half_thickness) {
  static const char* names[] = {"11", "12", "16", "22", "26", "66"};
  bool any_monoclinic = false;
  for (const char* n : names) any_monoclinic |= r.has(std::string("material.d") + n);
  if (any_monoclinic) {
    MaterialParams m;
    for (int a = 0; a < num_moduli; ++a) {
      const std::string dk = std::string("material.d") + names[a];
      const std::string bk = std::string("material.beta") + names[a];
      if (!r.has(dk)) throw ConfigError("monoclinic material needs " + dk);
      r.get(dk, m.storage[a]);
      double beta = 0.0;
      r.get("material.loss_factor", beta);
      r.get(bk, beta);
      m.loss[a] = beta;
    }
    return m;
  }
  double poisson = 0.286, loss = 0.003, rigidity = 17.97;
  r.get("material.poisson", poisson);
  r.get("material.loss_factor", loss);
  if (r.has("material.youngs_modulus") && r.has("material.rigidity"))
    throw ConfigError("give either youngs_modulus or rigidity, not both");
  if (r.has("material.youngs_modulus")) {
    double e = 0.0;
    r.get("material.youngs_modulus", e);
    if (!(e > 0.0)) throw ConfigError("youngs_modulus must be positive");
    rigidity = flexural_rigidity(e, poisson, half_thickness);
  }
  r.get("material.rigidity", rigidity);
  return MaterialParams::isotropic(rigidity, poisson, loss);
}

}  // namespace

std::vector<double> RunConfig::frequencies() const { return linear_grid(f_min, f_max, count); }

Eigen::VectorXd RunConfig::initial_point(const Parametrization& param) const {
  if (initial_theta) {
    if (initial_theta->size() != param.dimension())
      throw ConfigError("fit.initial needs " + std::to_string(param.dimension()) + " values");
    return *initial_theta;
  }
  const Eigen::VectorXd ref = param.from_material(reference);
  if (initial_relative_error) {
    if (initial_relative_error->size() != param.dimension())
      throw ConfigError("fit.initial_relative_error needs " + std::to_string(param.dimension()) + " values");
    return ref.array() + ref.array().abs() * initial_relative_error->array();
  }
  return ref;
}

void RunConfig::validate() const {
  try {
    geometry.validate();
    reference.validate();
    trust_region.validate();
    global.de.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const MeshError& e) {
    throw ConfigError(e.what());
  }
  if (!(density > 0.0)) throw ConfigError("density must be positive");
  if (!(f_min >= 0.0 && f_max >= f_min)) throw ConfigError("frequency range must satisfy 0 <= f_min <= f_max");
  if (count < 1) throw ConfigError("frequency count must be at least 1");
  if (!(noise_level >= 0.0)) throw ConfigError("noise level must be nonnegative");
  if (mode_count < 1) throw ConfigError("mode count must be at least 1");
  if (!(global.d_lower < global.d_upper && global.nu100_lower < global.nu100_upper))
    throw ConfigError("global bounds must satisfy lower < upper");
  if (!(global.fixed_loss_factor >= 0.0)) throw ConfigError("fixed loss factor must be nonnegative");
  if (parametrization != "isotropic" && parametrization != "monoclinic")
    throw ConfigError("fit.parametrization must be isotropic or monoclinic");
}

RunConfig parse_config(const std::string& text) {
  ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  check_schema(tree);
  const Reader r(tree);
  RunConfig c;

  GeometryConfig& g = c.geometry;
  r.get("geometry.length", g.length);
  r.get("geometry.width", g.width);
  r.get("geometry.thickness", g.thickness);
  r.get("geometry.nx", g.nx);
  r.get("geometry.ny", g.ny);
  std::string side;
  r.get("geometry.clamped_side", side);
  if (!side.empty()) {
    try {
      g.clamped_side = clamped_side_from_string(side);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  r.get("geometry.accel_x", g.accel_center.x());
  r.get("geometry.accel_y", g.accel_center.y());
  r.get("geometry.accel_radius", g.accel_radius);
  r.get("geometry.accel_mass", g.accel_mass);
  r.get("geometry.test_x", g.test_point.x());
  r.get("geometry.test_y", g.test_point.y());
  std::string mesh;
  r.get("geometry.mesh", mesh);
  if (!mesh.empty()) c.mesh_path = mesh;

  r.get("material.density", c.density);
  c.reference = read_material(r, g.half_thickness());

  std::string mode;
  r.get("model.accel_mode", mode);
  if (!mode.empty()) {
    try {
      c.accel_mode = accel_mode_from_string(mode);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  r.get("frequencies.f_min", c.f_min);
  r.get("frequencies.f_max", c.f_max);
  r.get("frequencies.count", c.count);
  r.get("noise.level", c.noise_level);
  r.get("noise.seed", c.noise_seed);

  r.get("fit.parametrization", c.parametrization);
  c.initial_theta = r.vector("fit.initial");
  c.initial_relative_error = r.vector("fit.initial_relative_error");
  c.thresholds = r.vector("fit.thresholds");
  std::string data;
  r.get("fit.data", data);
  if (!data.empty()) c.data_path = data;

  TrustRegionOptions& t = c.trust_region;
  r.get("trust_region.delta0", t.delta0);
  r.get("trust_region.delta_max", t.delta_max);
  r.get("trust_region.eta", t.eta);
  r.get("trust_region.max_iterations", t.max_iterations);
  r.get("trust_region.gradient_tolerance", t.gradient_tolerance);
  r.get("trust_region.step_tolerance", t.step_tolerance);
  r.get("trust_region.value_tolerance", t.value_tolerance);
  r.get("trust_region.decrease_tolerance", t.decrease_tolerance);
  std::string update;
  r.get("trust_region.update", update);
  if (!update.empty()) {
    try {
      t.update = model_update_from_string(update);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  c.global.polish = t;

  DEOptions& d = c.global.de;
  r.get("de.population", d.population);
  r.get("de.f_min", d.f_min);
  r.get("de.f_max", d.f_max);
  r.get("de.crossover", d.crossover);
  r.get("de.tolerance", d.tolerance);
  r.get("de.restarts", d.restarts);
  r.get("de.max_evaluations", d.max_evaluations);
  r.get("de.seed", d.seed);
  r.get("de.fixed_loss_factor", c.global.fixed_loss_factor);
  r.get("de.d_lower", c.global.d_lower);
  r.get("de.d_upper", c.global.d_upper);
  r.get("de.nu100_lower", c.global.nu100_lower);
  r.get("de.nu100_upper", c.global.nu100_upper);

  r.get("modes.count", c.mode_count);
  c.check_theta = r.vector("check.theta");
  r.get("check.noise_level", c.check_noise_level);
  std::string dir;
  r.get("output.dir", dir);
  if (!dir.empty()) c.output_dir = dir;
  r.get("run.threads", c.threads);
  c.global.threads = c.threads;

  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  RunConfig c = parse_config(text.str());
  // Relative paths inside the file are relative to the file.
  const auto base = path.parent_path();
  if (c.mesh_path && c.mesh_path->is_relative()) c.mesh_path = base / *c.mesh_path;
  if (c.data_path && c.data_path->is_relative()) c.data_path = base / *c.data_path;
  return c;
}

}  // namespace plateid
