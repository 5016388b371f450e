#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roughmkv/coefficient.hpp"
#include "roughmkv/grid.hpp"
#include "roughmkv/measure.hpp"
#include "roughmkv/parallel.hpp"

namespace roughmkv {

// The three index inequalities gating the regularisation argument:
//   (2 + 3k/2) zeta0 < 1,   (1 + k/2) zeta0 < gamma0,   gamma1/2 > (1 + k/2) zeta0.
struct HypothesisCheck {
  double zeta0 = 0.0, gamma0 = 0.0, gamma1 = 0.0;
  std::size_t k = 1;
  double tightness_slack = 0.0;  // 1 - (2 + 3k/2) zeta0
  double drift_slack = 0.0;      // gamma0 - (1 + k/2) zeta0
  double holder_slack = 0.0;     // gamma1/2 - (1 + k/2) zeta0
  bool tightness_ok = false, drift_ok = false, holder_ok = false;
  bool pass = false;
  std::string tag() const { return pass ? "within-hypothesis" : "outside-hypothesis"; }
};

HypothesisCheck hypothesis_gate(double zeta0, double gamma0, double gamma1,
                                std::size_t k);

// N coupled Euler-Maruyama paths of the mollified distribution-dependent SDE
//   x <- x + b_eps(t, F(law) - w_t) dt + a_eps(t, F(law) - w_t) dBeta.
// Coefficients depend on the law and the regularising path only, so every
// particle receives the same drift and diffusion value at each step.
struct ParticleEnsemble {
  TimeGrid grid;
  std::size_t particles = 0;
  std::size_t state_dim = 1;  // n (noise dimension d = n)
  std::size_t flow_dim = 1;   // k
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double x0 = 0.0;
  std::string coeff_name, functional_name;
  bool dt_warning = false;  // heuristic stability gate dt > eps^2/4

  std::vector<double> paths;       // [particle][node][component]
  std::vector<double> increments;  // [particle][step][component], Var = dt
  std::vector<double> f_values;    // [node][flow_dim]
  SamplePath driver;               // the frozen regularising path w

  double state(std::size_t particle, std::size_t node, std::size_t comp = 0) const {
    return paths[(particle * grid.nodes() + node) * state_dim + comp];
  }
  double noise(std::size_t particle, std::size_t step, std::size_t comp = 0) const {
    return increments[(particle * grid.steps + step) * state_dim + comp];
  }
  // Zero-copy law snapshot at a node (cross-section of the path tensor).
  EmpiricalMeasure law_at(std::size_t node) const;
  // F(law) trajectory as a path (drives the frozen germs).
  SamplePath flow_path() const;
};

ParticleEnsemble simulate(const Coefficient& drift, const Coefficient& diffusion,
                          const MeasureFunctional& functional, const SamplePath& w,
                          double epsilon, std::size_t particles, std::uint64_t seed,
                          double x0, Parallelism par = Parallelism::kOpenMP);

// Same dynamics with caller-supplied Brownian increments ([particle][step]
// [component], variance dt): the hook for common-noise refinement couplings.
ParticleEnsemble simulate_with_increments(
    const Coefficient& drift, const Coefficient& diffusion,
    const MeasureFunctional& functional, const SamplePath& w, double epsilon,
    std::vector<double> increments, std::size_t particles, std::uint64_t seed,
    double x0, Parallelism par = Parallelism::kOpenMP);

std::vector<EmpiricalMeasure> law_flow(const ParticleEnsemble& ensemble);

struct EpsilonSweepResult {
  std::vector<ParticleEnsemble> ensembles;  // same order as the epsilon list
  std::vector<double> epsilons;
  std::vector<double> c2;           // tightness constants c_{2, eps, gamma1}
  std::vector<double> terminal_w1;  // consecutive terminal-law distances
  double growth_factor = 2.0;
  bool uniform = true;  // no consecutive c2 growth beyond the factor
};

// Descending epsilons, one ensemble each, common Brownian increments via the
// shared seed; empty input gives an empty result.
EpsilonSweepResult epsilon_sweep(const Coefficient& drift,
                                 const Coefficient& diffusion,
                                 const MeasureFunctional& functional,
                                 const SamplePath& w,
                                 std::vector<double> epsilons,
                                 std::size_t particles, std::uint64_t seed,
                                 double x0, double gamma1,
                                 double growth_factor = 2.0,
                                 Parallelism par = Parallelism::kOpenMP);

// Ensemble persistence: config.json + paths.bin + noise.bin + driver.csv +
// fvalues.csv in `dir`. Reloading reproduces every diagnostic bit-exactly.
void save_ensemble(const std::filesystem::path& dir, const ParticleEnsemble& e);
ParticleEnsemble load_ensemble(const std::filesystem::path& dir);

}  // namespace roughmkv
