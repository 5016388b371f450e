#include "roughmkv/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "roughmkv/diagnostics.hpp"
#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/rng.hpp"

namespace roughmkv {

HypothesisCheck hypothesis_gate(double zeta0, double gamma0, double gamma1,
                                std::size_t k) {
  if (!(zeta0 > 0.0) || !(gamma0 > 0.0) || !(gamma1 > 0.0) || k < 1)
    throw std::invalid_argument("hypothesis_gate: all indices must be positive");
  HypothesisCheck check;
  check.zeta0 = zeta0;
  check.gamma0 = gamma0;
  check.gamma1 = gamma1;
  check.k = k;
  const double kd = static_cast<double>(k);
  check.tightness_slack = 1.0 - (2.0 + 1.5 * kd) * zeta0;
  check.drift_slack = gamma0 - (1.0 + 0.5 * kd) * zeta0;
  check.holder_slack = 0.5 * gamma1 - (1.0 + 0.5 * kd) * zeta0;
  check.tightness_ok = check.tightness_slack > 0.0;
  check.drift_ok = check.drift_slack > 0.0;
  check.holder_ok = check.holder_slack > 0.0;
  check.pass = check.tightness_ok && check.drift_ok && check.holder_ok;
  return check;
}

EmpiricalMeasure ParticleEnsemble::law_at(std::size_t node) const {
  return EmpiricalMeasure::view(paths.data() + node * state_dim, particles,
                                state_dim, grid.nodes() * state_dim);
}

SamplePath ParticleEnsemble::flow_path() const {
  SamplePath flow(grid, flow_dim);
  flow.values = f_values;
  return flow;
}

namespace {

// Cache box for the mollified coefficients: generous enough that the law
// argument z = F(law) - w never walks off it for bounded coefficients.
SpatialGrid coefficient_cache_grid(const Coefficient& b_eps,
                                   const Coefficient& a_eps, const SamplePath& w,
                                   double x0, std::size_t flow_dim) {
  const double horizon = w.grid.horizon;
  double reach = 1.0;
  const double bs = b_eps.meta().sup_bound, as = a_eps.meta().sup_bound;
  if (std::isfinite(bs)) reach += bs * horizon;
  if (std::isfinite(as)) reach += 6.0 * as * std::sqrt(horizon);
  // clamp: an astronomically large sup bound must not produce an infinite
  // box (evaluations beyond the cache fall back to direct quadrature)
  const double radius =
      std::min(w.max_abs() + std::abs(x0) + 4.0 * reach, 1e12);
  const std::size_t points = (flow_dim == 1) ? 4096 : 192;
  return SpatialGrid(radius, points, flow_dim);
}

}  // namespace

ParticleEnsemble simulate(const Coefficient& drift, const Coefficient& diffusion,
                          const MeasureFunctional& functional, const SamplePath& w,
                          double epsilon, std::size_t particles, std::uint64_t seed,
                          double x0, Parallelism par) {
  return simulate_with_increments(drift, diffusion, functional, w, epsilon, {},
                                  particles, seed, x0, par);
}

ParticleEnsemble simulate_with_increments(
    const Coefficient& drift, const Coefficient& diffusion,
    const MeasureFunctional& functional, const SamplePath& w, double epsilon,
    std::vector<double> increments, std::size_t particles, std::uint64_t seed,
    double x0, Parallelism par) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("simulate: epsilon must be > 0");
  if (particles < 2) throw std::invalid_argument("simulate: need N >= 2 particles");
  if (functional.out_dim != w.dim)
    throw std::invalid_argument(
        "simulate: functional output dimension must match the driver dimension");
  if (drift.dim() != w.dim || diffusion.dim() != w.dim)
    throw std::invalid_argument(
        "simulate: coefficient argument dimension must match the driver");
  if (functional.out_dim > 8)
    throw std::invalid_argument("simulate: functional output dimension > 8");

  ParticleEnsemble ens;
  ens.grid = w.grid;
  ens.particles = particles;
  ens.state_dim = functional.in_dim;
  ens.flow_dim = functional.out_dim;
  ens.epsilon = epsilon;
  ens.seed = seed;
  ens.x0 = x0;
  ens.coeff_name = drift.name() + "/" + diffusion.name();
  ens.functional_name = functional.name;
  ens.driver = w;

  const std::size_t steps = w.grid.steps;
  const std::size_t nodes = w.grid.nodes();
  const std::size_t n = ens.state_dim;
  const double dt = w.grid.dt();
  ens.dt_warning = dt > epsilon * epsilon / 4.0;

  Coefficient b_eps = mollify(drift, MollifierSpec{epsilon});
  Coefficient a_eps = mollify(diffusion, MollifierSpec{epsilon});
  const SpatialGrid cache_grid =
      coefficient_cache_grid(b_eps, a_eps, w, x0, ens.flow_dim);
  b_eps.build_cache(cache_grid);
  a_eps.build_cache(cache_grid);

  ens.paths.assign(particles * nodes * n, 0.0);
  ens.f_values.assign(nodes * ens.flow_dim, 0.0);

  if (increments.empty()) {
    // Per-particle streams: (seed, particle index). Parallel generation
    // writes disjoint slots, so scheduling never changes the draw.
    ens.increments.resize(particles * steps * n);
    const double root_dt = std::sqrt(dt);
    auto fill_noise = [&](std::size_t p) {
      NormalStream stream(seed, p);
      double* out = ens.increments.data() + p * steps * n;
      for (std::size_t i = 0; i < steps * n; ++i) out[i] = root_dt * stream.next();
    };
    if (par == Parallelism::kOpenMP) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(particles); ++p)
        fill_noise(static_cast<std::size_t>(p));
    } else {
      for (std::size_t p = 0; p < particles; ++p) fill_noise(p);
    }
  } else {
    if (increments.size() != particles * steps * n)
      throw std::invalid_argument("simulate: increment tensor has the wrong shape");
    ens.increments = std::move(increments);
  }

  for (std::size_t p = 0; p < particles; ++p)
    for (std::size_t c = 0; c < n; ++c)
      ens.paths[(p * nodes) * n + c] = x0;

  // Law reduction over a fixed chunk layout: chunk partials combine in a
  // fixed order, so the sum is bit-identical for any thread count, and the
  // serial path reuses the identical chunked summation.
  const std::size_t chunks = std::min<std::size_t>(64, particles);
  const std::size_t chunk_len = (particles + chunks - 1) / chunks;
  std::vector<double> partials(chunks * ens.flow_dim, 0.0);
  std::vector<double> f_acc(ens.flow_dim), z(ens.flow_dim);
  const double inv_n = 1.0 / static_cast<double>(particles);
  const double* noise_base = ens.increments.data();
  double* path_base = ens.paths.data();
  double bval = 0.0, aval = 0.0;
  std::size_t blow_step = static_cast<std::size_t>(-1);

  auto reduce_chunk = [&](std::size_t chunk, std::size_t step) {
    const std::size_t lo = chunk * chunk_len;
    const std::size_t hi = std::min(particles, lo + chunk_len);
    double slot[8];
    double* acc = partials.data() + chunk * ens.flow_dim;
    std::fill(acc, acc + ens.flow_dim, 0.0);
    for (std::size_t p = lo; p < hi; ++p) {
      functional.apply({path_base + (p * nodes + step) * n, n},
                       {slot, ens.flow_dim});
      for (std::size_t c = 0; c < ens.flow_dim; ++c) acc[c] += slot[c];
    }
  };
  // Exceptions must not escape a parallel region; blow-ups are recorded and
  // rethrown after the loop.
  auto combine_step = [&](std::size_t step) {
    std::fill(f_acc.begin(), f_acc.end(), 0.0);
    for (std::size_t chunk = 0; chunk < chunks; ++chunk)
      for (std::size_t c = 0; c < ens.flow_dim; ++c)
        f_acc[c] += partials[chunk * ens.flow_dim + c];
    bool finite = true;
    for (std::size_t c = 0; c < ens.flow_dim; ++c) {
      f_acc[c] *= inv_n;
      ens.f_values[step * ens.flow_dim + c] = f_acc[c];
      finite = finite && std::isfinite(f_acc[c]);
    }
    if (!finite) {
      blow_step = step;
      return;
    }
    if (step == steps) return;
    const double t = w.grid.node(step);
    for (std::size_t c = 0; c < ens.flow_dim; ++c)
      z[c] = f_acc[c] - w.value(step, c);
    bval = b_eps.value(t, z);
    aval = a_eps.value(t, z);
  };
  auto advance = [&](std::size_t step, std::size_t p) {
    const double* xi = noise_base + (p * steps + step) * n;
    const double* cur = path_base + (p * nodes + step) * n;
    double* next = path_base + (p * nodes + step + 1) * n;
    for (std::size_t c = 0; c < n; ++c)
      next[c] = cur[c] + bval * dt + aval * xi[c];
  };

  if (par == Parallelism::kOpenMP && particles >= 4096) {
    // one parallel region for the whole time loop; per-step forks would
    // dominate these cheap updates
#pragma omp parallel
    for (std::size_t step = 0; step <= steps; ++step) {
#pragma omp for schedule(static)
      for (std::ptrdiff_t ch = 0; ch < static_cast<std::ptrdiff_t>(chunks); ++ch)
        if (blow_step == static_cast<std::size_t>(-1))
          reduce_chunk(static_cast<std::size_t>(ch), step);
#pragma omp single
      {
        if (blow_step == static_cast<std::size_t>(-1)) combine_step(step);
      }
      if (blow_step != static_cast<std::size_t>(-1) || step == steps) continue;
#pragma omp for schedule(static)
      for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(particles); ++p)
        advance(step, static_cast<std::size_t>(p));
    }
  } else {
    for (std::size_t step = 0; step <= steps; ++step) {
      for (std::size_t chunk = 0; chunk < chunks; ++chunk)
        reduce_chunk(chunk, step);
      combine_step(step);
      if (blow_step != static_cast<std::size_t>(-1)) break;
      if (step == steps) break;
      for (std::size_t p = 0; p < particles; ++p) advance(step, p);
    }
  }
  if (blow_step != static_cast<std::size_t>(-1))
    throw BlowUpError(
        "particle ensemble blew up at step " + std::to_string(blow_step),
        blow_step);
  return ens;
}

std::vector<EmpiricalMeasure> law_flow(const ParticleEnsemble& ensemble) {
  std::vector<EmpiricalMeasure> flow;
  flow.reserve(ensemble.grid.nodes());
  for (std::size_t i = 0; i < ensemble.grid.nodes(); ++i)
    flow.push_back(ensemble.law_at(i));
  return flow;
}

EpsilonSweepResult epsilon_sweep(const Coefficient& drift,
                                 const Coefficient& diffusion,
                                 const MeasureFunctional& functional,
                                 const SamplePath& w, std::vector<double> epsilons,
                                 std::size_t particles, std::uint64_t seed,
                                 double x0, double gamma1, double growth_factor,
                                 Parallelism par) {
  EpsilonSweepResult result;
  result.growth_factor = growth_factor;
  if (epsilons.empty()) return result;
  for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
    if (!(epsilons[i] > epsilons[i + 1]))
      throw std::invalid_argument("epsilon_sweep: list must be strictly descending");

  for (double eps : epsilons) {
    result.epsilons.push_back(eps);
    result.ensembles.push_back(
        simulate(drift, diffusion, functional, w, eps, particles, seed, x0, par));
    const MomentHolderReport rep =
        moment_holder(result.ensembles.back(), 2.0, gamma1);
    result.c2.push_back(rep.c_hat);
  }
  for (std::size_t i = 0; i + 1 < result.ensembles.size(); ++i) {
    const auto& a = result.ensembles[i];
    const auto& b = result.ensembles[i + 1];
    result.terminal_w1.push_back(
        wasserstein1(a.law_at(a.grid.steps), b.law_at(b.grid.steps), seed).value);
    if (result.c2[i + 1] > growth_factor * result.c2[i]) result.uniform = false;
  }
  return result;
}

void save_ensemble(const std::filesystem::path& dir, const ParticleEnsemble& e) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json cfg;
  cfg["horizon"] = io::format_double(e.grid.horizon);
  cfg["steps"] = e.grid.steps;
  cfg["particles"] = e.particles;
  cfg["state_dim"] = e.state_dim;
  cfg["flow_dim"] = e.flow_dim;
  cfg["epsilon"] = io::format_double(e.epsilon);
  cfg["seed"] = e.seed;
  cfg["x0"] = io::format_double(e.x0);
  cfg["coefficients"] = e.coeff_name;
  cfg["functional"] = e.functional_name;
  cfg["dt_warning"] = e.dt_warning;
  io::write_text(dir / "config.json", cfg.dump(2) + "\n");

  io::write_tensor(dir / "paths.bin",
                   "ens_paths v1 " + std::to_string(e.particles) + " " +
                       std::to_string(e.grid.nodes()) + " " +
                       std::to_string(e.state_dim),
                   e.paths);
  io::write_tensor(dir / "noise.bin",
                   "ens_noise v1 " + std::to_string(e.particles) + " " +
                       std::to_string(e.grid.steps) + " " +
                       std::to_string(e.state_dim),
                   e.increments);
  write_path_csv(dir / "driver.csv", e.driver);

  std::vector<std::string> header{"t"};
  for (std::size_t c = 0; c < e.flow_dim; ++c)
    header.push_back("F_" + std::to_string(c + 1));
  io::CsvWriter csv(dir / "fvalues.csv", header);
  std::vector<double> row(e.flow_dim + 1);
  for (std::size_t i = 0; i < e.grid.nodes(); ++i) {
    row[0] = e.grid.node(i);
    for (std::size_t c = 0; c < e.flow_dim; ++c)
      row[c + 1] = e.f_values[i * e.flow_dim + c];
    csv.row(row);
  }
  csv.flush();
}

ParticleEnsemble load_ensemble(const std::filesystem::path& dir) {
  const auto cfg = nlohmann::json::parse(io::read_text(dir / "config.json"));
  ParticleEnsemble e;
  e.grid = TimeGrid(std::stod(cfg.at("horizon").get<std::string>()),
                    cfg.at("steps").get<std::size_t>());
  e.particles = cfg.at("particles").get<std::size_t>();
  e.state_dim = cfg.at("state_dim").get<std::size_t>();
  e.flow_dim = cfg.at("flow_dim").get<std::size_t>();
  e.epsilon = std::stod(cfg.at("epsilon").get<std::string>());
  e.seed = cfg.at("seed").get<std::uint64_t>();
  e.x0 = std::stod(cfg.at("x0").get<std::string>());
  e.coeff_name = cfg.at("coefficients").get<std::string>();
  e.functional_name = cfg.at("functional").get<std::string>();
  e.dt_warning = cfg.at("dt_warning").get<bool>();

  e.paths = io::read_tensor(dir / "paths.bin").data;
  e.increments = io::read_tensor(dir / "noise.bin").data;
  e.driver = read_path_csv(dir / "driver.csv");
  if (e.paths.size() != e.particles * e.grid.nodes() * e.state_dim ||
      e.increments.size() != e.particles * e.grid.steps * e.state_dim)
    throw ReproducibilityError("ensemble tensors in " + dir.string() +
                               " do not match the recorded shape");

  // F values are regenerated from the loaded paths (fixed reduction order),
  // so the flow matches the run bit for bit.
  const MeasureFunctional f = functional_preset(e.functional_name, e.state_dim);
  e.f_values.assign(e.grid.nodes() * e.flow_dim, 0.0);
  std::vector<double> slot(e.flow_dim);
  const double inv = 1.0 / static_cast<double>(e.particles);
  for (std::size_t i = 0; i < e.grid.nodes(); ++i) {
    for (std::size_t p = 0; p < e.particles; ++p) {
      f.apply({e.paths.data() + (p * e.grid.nodes() + i) * e.state_dim, e.state_dim},
              slot);
      for (std::size_t c = 0; c < e.flow_dim; ++c)
        e.f_values[i * e.flow_dim + c] += slot[c];
    }
    for (std::size_t c = 0; c < e.flow_dim; ++c) e.f_values[i * e.flow_dim + c] *= inv;
  }
  return e;
}

}  // namespace roughmkv
