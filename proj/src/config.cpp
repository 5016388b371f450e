#include "roughmkv/config.hpp"

#include <algorithm>
#include <sstream>

#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"

namespace roughmkv {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, std::size_t line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("cannot parse '" + v + "' as a real number", line);
  }
}

std::size_t to_size(const std::string& v, std::size_t line) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size() || x < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(x);
  } catch (...) {
    throw ConfigError("cannot parse '" + v + "' as a nonnegative integer", line);
  }
}

std::uint64_t to_u64(const std::string& v, std::size_t line) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("cannot parse '" + v + "' as an unsigned integer", line);
  }
}

bool to_bool(const std::string& v, std::size_t line) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ConfigError("expected 'on' or 'off', got '" + v + "'", line);
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& v, std::size_t line, F convert) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(convert(item, line));
  }
  return out;
}

std::string bool_text(bool b) { return b ? "on" : "off"; }

template <typename T>
std::string list_text(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += io::format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

void apply_key(ExperimentConfig& cfg, const std::string& section,
               const std::string& key, const std::string& value, std::size_t line,
               bool& seed_seen) {
  auto coeff_key = [&](CoefficientConfig& c) {
    if (key == "preset") c.preset = value;
    else if (key == "amplitude") c.amplitude = to_double(value, line);
    else if (key == "width") c.width = to_double(value, line);
    else if (key == "offset") c.offset = to_double(value, line);
    else if (key == "gamma") c.gamma = to_double(value, line);
    else if (key == "kernel_floor") c.kernel_floor = to_double(value, line);
    else if (key == "gamma0") c.gamma0 = to_double(value, line);
    else if (key == "modulation") c.modulation = to_double(value, line);
    else
      throw ConfigError("unknown key '" + key + "' in section [" + section + "]",
                        line);
  };

  if (section == "scenario") {
    if (key == "name") cfg.scenario = value;
    else
      throw ConfigError("unknown key '" + key + "' in section [scenario]", line);
  } else if (section == "driver") {
    if (key == "hurst") cfg.driver.hurst = to_double(value, line);
    else if (key == "dim") cfg.driver.dim = to_size(value, line);
    else if (key == "steps") cfg.driver.steps = to_size(value, line);
    else if (key == "horizon") cfg.driver.horizon = to_double(value, line);
    else if (key == "check_nondeterminism")
      cfg.driver.check_nondeterminism = to_bool(value, line);
    else if (key == "zeta_tol") cfg.driver.zeta_tol = to_double(value, line);
    else
      throw ConfigError("unknown key '" + key + "' in section [driver]", line);
  } else if (section == "local_time") {
    if (key == "enabled") cfg.local_time.enabled = to_bool(value, line);
    else if (key == "points") cfg.local_time.points = to_size(value, line);
    else if (key == "bandwidth_cells")
      cfg.local_time.bandwidth_cells = to_double(value, line);
    else if (key == "lambda") cfg.local_time.lambda = to_double(value, line);
    else if (key == "r2_min") cfg.local_time.r2_min = to_double(value, line);
    else if (key == "band_below") cfg.local_time.band_below = to_double(value, line);
    else if (key == "band_above") cfg.local_time.band_above = to_double(value, line);
    else
      throw ConfigError("unknown key '" + key + "' in section [local_time]", line);
  } else if (section == "drift") {
    coeff_key(cfg.drift);
  } else if (section == "diffusion") {
    coeff_key(cfg.diffusion);
  } else if (section == "functional") {
    if (key == "preset") cfg.functional = value;
    else
      throw ConfigError("unknown key '" + key + "' in section [functional]", line);
  } else if (section == "solver") {
    if (key == "particles") cfg.solver.particles = to_size(value, line);
    else if (key == "epsilons")
      cfg.solver.epsilons = to_list<double>(value, line, to_double);
    else if (key == "seed") {
      cfg.solver.seed = to_u64(value, line);
      seed_seen = true;
    } else if (key == "x0") cfg.solver.x0 = to_double(value, line);
    else if (key == "growth_factor")
      cfg.solver.growth_factor = to_double(value, line);
    else
      throw ConfigError("unknown key '" + key + "' in section [solver]", line);
  } else if (section == "sewing") {
    if (key == "enabled") cfg.sewing.enabled = to_bool(value, line);
    else if (key == "max_depth")
      cfg.sewing.max_depth = static_cast<int>(to_size(value, line));
    else
      throw ConfigError("unknown key '" + key + "' in section [sewing]", line);
  } else if (section == "diagnostics") {
    if (key == "gamma1") cfg.diagnostics.gamma1 = to_double(value, line);
    else if (key == "p") cfg.diagnostics.p = to_double(value, line);
    else if (key == "moment") cfg.diagnostics.moment = to_bool(value, line);
    else if (key == "law_flow") cfg.diagnostics.law_flow = to_bool(value, line);
    else if (key == "ito_isometry")
      cfg.diagnostics.isometry = to_bool(value, line);
    else if (key == "martingale")
      cfg.diagnostics.martingale = to_bool(value, line);
    else if (key == "nsweep") cfg.diagnostics.nsweep = to_bool(value, line);
    else if (key == "nsweep_sizes")
      cfg.diagnostics.nsweep_sizes = to_list<std::size_t>(value, line, to_size);
    else if (key == "nsweep_reps")
      cfg.diagnostics.nsweep_reps = to_size(value, line);
    else if (key == "exponent_tol")
      cfg.diagnostics.exponent_tol = to_double(value, line);
    else if (key == "nsweep_tol")
      cfg.diagnostics.nsweep_tol = to_double(value, line);
    else
      throw ConfigError("unknown key '" + key + "' in section [diagnostics]", line);
  } else if (section == "output") {
    if (key == "dir") cfg.output_dir = value;
    else
      throw ConfigError("unknown key '" + key + "' in section [output]", line);
  } else {
    throw ConfigError("unknown section [" + section + "]", line);
  }
}

void emit_coeff(std::ostringstream& out, const std::string& section,
                const CoefficientConfig& c) {
  out << "[" << section << "]\n";
  out << "preset = " << c.preset << "\n";
  out << "amplitude = " << io::format_double(c.amplitude) << "\n";
  out << "width = " << io::format_double(c.width) << "\n";
  out << "offset = " << io::format_double(c.offset) << "\n";
  out << "gamma = " << io::format_double(c.gamma) << "\n";
  out << "kernel_floor = " << io::format_double(c.kernel_floor) << "\n";
  out << "gamma0 = " << io::format_double(c.gamma0) << "\n";
  out << "modulation = " << io::format_double(c.modulation) << "\n\n";
}

Coefficient build_coefficient(CoeffRole role, const CoefficientConfig& c,
                              std::size_t dim) {
  Coefficient base = [&] {
    if (c.preset == "constant") return constant_coefficient(role, c.amplitude, dim);
    if (c.preset == "gaussian_bump")
      return gaussian_bump_coefficient(role, c.amplitude, c.width, c.offset, dim);
    if (c.preset == "singular_kernel") {
      if (dim != 1)
        throw ConfigError("singular_kernel preset requires a 1-d driver");
      return singular_kernel_coefficient(role, c.gamma, c.kernel_floor);
    }
    throw ConfigError("unknown coefficient preset '" + c.preset + "'");
  }();
  if (c.modulation != 0.0 || c.gamma0 != base.meta().gamma0)
    return modulate(base, c.gamma0, c.modulation);
  return base;
}

}  // namespace

FbmSpec ExperimentConfig::driver_spec() const {
  FbmSpec spec;
  spec.hurst = driver.hurst;
  spec.dim = driver.dim;
  spec.grid = TimeGrid(driver.horizon, driver.steps);
  spec.seed = solver.seed;
  return spec;
}

Coefficient ExperimentConfig::make_drift() const {
  return build_coefficient(CoeffRole::kDrift, drift, driver.dim);
}

Coefficient ExperimentConfig::make_diffusion() const {
  return build_coefficient(CoeffRole::kDiffusion, diffusion, driver.dim);
}

MeasureFunctional ExperimentConfig::make_functional() const {
  const MeasureFunctional f = functional_preset(functional, 1);
  if (f.out_dim != driver.dim)
    throw ConfigError("functional '" + functional + "' produces dimension " +
                      std::to_string(f.out_dim) + " but the driver has dimension " +
                      std::to_string(driver.dim));
  return f;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.solver.epsilons.clear();
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  bool seed_seen = false;
  bool eps_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("malformed section header '" + t + "'", lineno);
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value', got '" + t + "'", lineno);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ConfigError("key '" + key + "' appears before any section", lineno);
    if (section == "solver" && key == "epsilons") eps_seen = true;
    apply_key(cfg, section, key, value, lineno, seed_seen);
  }
  if (!seed_seen)
    throw ConfigError("missing required field 'seed' in section [solver]");
  if (!eps_seen) cfg.solver.epsilons = {0.2, 0.1};
  if (cfg.solver.epsilons.empty())
    throw ConfigError("field 'epsilons' in [solver] must not be empty");

  cfg.make_functional();  // dimension validation
  const double gamma0 = std::min(cfg.drift.gamma0, cfg.diffusion.gamma0);
  cfg.gate = hypothesis_gate(cfg.driver.hurst, gamma0, cfg.diagnostics.gamma1,
                             cfg.driver.dim);
  return cfg;
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[scenario]\nname = " << cfg.scenario << "\n\n";
  out << "[driver]\n";
  out << "hurst = " << io::format_double(cfg.driver.hurst) << "\n";
  out << "dim = " << cfg.driver.dim << "\n";
  out << "steps = " << cfg.driver.steps << "\n";
  out << "horizon = " << io::format_double(cfg.driver.horizon) << "\n";
  out << "check_nondeterminism = " << bool_text(cfg.driver.check_nondeterminism)
      << "\n";
  out << "zeta_tol = " << io::format_double(cfg.driver.zeta_tol) << "\n\n";
  out << "[local_time]\n";
  out << "enabled = " << bool_text(cfg.local_time.enabled) << "\n";
  out << "points = " << cfg.local_time.points << "\n";
  out << "bandwidth_cells = " << io::format_double(cfg.local_time.bandwidth_cells)
      << "\n";
  out << "lambda = " << io::format_double(cfg.local_time.lambda) << "\n";
  out << "r2_min = " << io::format_double(cfg.local_time.r2_min) << "\n";
  out << "band_below = " << io::format_double(cfg.local_time.band_below) << "\n";
  out << "band_above = " << io::format_double(cfg.local_time.band_above) << "\n\n";
  emit_coeff(out, "drift", cfg.drift);
  emit_coeff(out, "diffusion", cfg.diffusion);
  out << "[functional]\npreset = " << cfg.functional << "\n\n";
  out << "[solver]\n";
  out << "particles = " << cfg.solver.particles << "\n";
  out << "epsilons = " << list_text(cfg.solver.epsilons) << "\n";
  out << "seed = " << cfg.solver.seed << "\n";
  out << "x0 = " << io::format_double(cfg.solver.x0) << "\n";
  out << "growth_factor = " << io::format_double(cfg.solver.growth_factor)
      << "\n\n";
  out << "[sewing]\n";
  out << "enabled = " << bool_text(cfg.sewing.enabled) << "\n";
  out << "max_depth = " << cfg.sewing.max_depth << "\n\n";
  out << "[diagnostics]\n";
  out << "gamma1 = " << io::format_double(cfg.diagnostics.gamma1) << "\n";
  out << "p = " << io::format_double(cfg.diagnostics.p) << "\n";
  out << "moment = " << bool_text(cfg.diagnostics.moment) << "\n";
  out << "law_flow = " << bool_text(cfg.diagnostics.law_flow) << "\n";
  out << "ito_isometry = " << bool_text(cfg.diagnostics.isometry) << "\n";
  out << "martingale = " << bool_text(cfg.diagnostics.martingale) << "\n";
  out << "nsweep = " << bool_text(cfg.diagnostics.nsweep) << "\n";
  out << "nsweep_sizes = " << list_text(cfg.diagnostics.nsweep_sizes) << "\n";
  out << "nsweep_reps = " << cfg.diagnostics.nsweep_reps << "\n";
  out << "exponent_tol = " << io::format_double(cfg.diagnostics.exponent_tol)
      << "\n";
  out << "nsweep_tol = " << io::format_double(cfg.diagnostics.nsweep_tol) << "\n";
  if (!cfg.output_dir.empty())
    out << "\n[output]\ndir = " << cfg.output_dir << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  ExperimentConfig stripped = cfg;
  stripped.output_dir.clear();
  return io::fnv1a64(emit_config(stripped));
}

std::vector<std::string> scenario_names() {
  return {"smoke_bm", "flocking_singular", "smooth_drift"};
}

ExperimentConfig scenario_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.scenario = name;
  if (name == "smoke_bm") {
    cfg.driver = {0.5, 1, 512, 1.0, true, 0.05};
    cfg.local_time = {true, 256, 1.0, 0.0, 0.9, 0.35, 0.10};
    cfg.drift = {"constant", 0.2, 1.0, 0.0, 0.3, 0.01, 1.0, 0.0};
    cfg.diffusion = {"constant", 0.4, 1.0, 0.0, 0.3, 0.01, 1.0, 0.0};
    cfg.functional = "mean";
    cfg.solver = {200, {0.2, 0.1}, 42, 0.0, 2.0};
    cfg.sewing = {true, 12};
    cfg.diagnostics = {1.0, 2.0, true, true,  true, true,
                       true, {64, 256, 1024}, 3,   0.1,  0.35};
  } else if (name == "flocking_singular") {
    cfg.driver = {0.2, 1, 2048, 1.0, true, 0.05};
    cfg.local_time = {true, 512, 1.0, 1.0, 0.9, 0.35, 0.10};
    cfg.drift = {"singular_kernel", 1.0, 1.0, 0.0, 0.3, 0.01, 0.5, 0.0};
    cfg.diffusion = {"singular_kernel", 1.0, 1.0, 0.0, 0.3, 0.01, 0.5, 0.0};
    cfg.functional = "mean";
    cfg.solver = {2000, {0.2, 0.1, 0.05, 0.025}, 7, 0.0, 2.0};
    cfg.sewing = {true, 12};
    cfg.diagnostics = {0.7, 2.0, true, true,  true, false,
                       false, {128, 512}, 3,  0.1,  0.35};
  } else if (name == "smooth_drift") {
    cfg.driver = {0.2, 1, 512, 1.0, true, 0.05};
    cfg.local_time = {true, 256, 1.0, 1.0, 0.9, 0.35, 0.10};
    cfg.drift = {"gaussian_bump", 0.8, 1.0, 0.0, 0.3, 0.01, 0.6, 0.5};
    cfg.diffusion = {"gaussian_bump", 0.4, 1.2, 0.2, 0.3, 0.01, 1.0, 0.0};
    cfg.functional = "mean";
    cfg.solver = {2000, {0.2, 0.1}, 11, 0.0, 2.0};
    cfg.sewing = {true, 12};
    cfg.diagnostics = {0.7, 2.0, true, true,  true, true,
                       false, {128, 512}, 3,  0.1,  0.35};
  } else {
    throw ConfigError("unknown scenario '" + name + "'");
  }
  const double gamma0 = std::min(cfg.drift.gamma0, cfg.diffusion.gamma0);
  cfg.gate = hypothesis_gate(cfg.driver.hurst, gamma0, cfg.diagnostics.gamma1,
                             cfg.driver.dim);
  return cfg;
}

ExperimentConfig load_config(const std::string& path_or_name) {
  if (std::filesystem::exists(path_or_name))
    return parse_config(io::read_text(path_or_name));
  const auto names = scenario_names();
  if (std::find(names.begin(), names.end(), path_or_name) != names.end())
    return scenario_config(path_or_name);
  throw ConfigError("no config file or builtin scenario named '" + path_or_name +
                    "'");
}

}  // namespace roughmkv
