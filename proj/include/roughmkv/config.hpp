#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roughmkv/coefficient.hpp"
#include "roughmkv/fbm.hpp"
#include "roughmkv/measure.hpp"
#include "roughmkv/solver.hpp"

namespace roughmkv {

struct DriverConfig {
  double hurst = 0.5;
  std::size_t dim = 1;
  std::size_t steps = 512;
  double horizon = 1.0;
  bool check_nondeterminism = true;
  double zeta_tol = 0.05;
};

struct LocalTimeConfig {
  bool enabled = true;
  std::size_t points = 256;
  double bandwidth_cells = 1.0;
  double lambda = 0.0;
  double r2_min = 0.9;
  double band_below = 0.35;  // accepted exponent window around the ceiling:
  double band_above = 0.10;  // [ceiling - band_below, ceiling + band_above]
};

struct CoefficientConfig {
  std::string preset = "constant";  // constant | gaussian_bump | singular_kernel
  double amplitude = 1.0;
  double width = 1.0;
  double offset = 0.0;
  double gamma = 0.3;        // singular exponent of |z|^-gamma
  double kernel_floor = 0.01;  // cell width for the singular cell average
  double gamma0 = 1.0;       // declared time-Hölder index toward H^{-1}
  double modulation = 0.0;   // theta(t) = 1 + modulation t^{gamma0} when != 0
};

struct SolverSectionConfig {
  std::size_t particles = 200;
  std::vector<double> epsilons{0.2, 0.1};
  std::uint64_t seed = 42;
  double x0 = 0.0;
  double growth_factor = 2.0;
};

struct SewingConfig {
  bool enabled = true;
  int max_depth = 12;
};

struct DiagnosticsConfig {
  double gamma1 = 1.0;  // tightness exponent; paths are C^{gamma1/2}
  double p = 2.0;
  bool moment = true;
  bool law_flow = true;
  bool isometry = true;
  bool martingale = false;
  bool nsweep = false;
  std::vector<std::size_t> nsweep_sizes{128, 512};
  std::size_t nsweep_reps = 3;
  double exponent_tol = 0.1;
  double nsweep_tol = 0.35;
};

struct ExperimentConfig {
  std::string scenario = "custom";
  DriverConfig driver;
  LocalTimeConfig local_time;
  CoefficientConfig drift;
  CoefficientConfig diffusion;
  std::string functional = "mean";
  SolverSectionConfig solver;
  SewingConfig sewing;
  DiagnosticsConfig diagnostics;
  std::string output_dir;  // optional; CLI --out overrides

  HypothesisCheck gate;  // embedded when the config is loaded

  FbmSpec driver_spec() const;
  Coefficient make_drift() const;
  Coefficient make_diffusion() const;
  MeasureFunctional make_functional() const;
};

// Flat text round-trip: parse(emit(c)) == c field for field; unknown keys and
// sections are rejected with their line number. [solver] seed is required.
ExperimentConfig parse_config(const std::string& text);
std::string emit_config(const ExperimentConfig& cfg);

// Hash of the canonical emission with [output] excluded: relocating a run
// never changes its identity.
std::uint64_t config_hash(const ExperimentConfig& cfg);

std::vector<std::string> scenario_names();
ExperimentConfig scenario_config(const std::string& name);

// Path to a config file, or a builtin scenario name.
ExperimentConfig load_config(const std::string& path_or_name);

}  // namespace roughmkv
