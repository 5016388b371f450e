// Acceptance suite: one numbered criterion per function, each printing a
// single pass/fail line (plus indented detail). Criteria run standalone:
//   acceptance [n ...]   (no arguments runs all of them)

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "roughmkv/averaging.hpp"
#include "roughmkv/config.hpp"
#include "roughmkv/diagnostics.hpp"
#include "roughmkv/fbm.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/measure.hpp"
#include "roughmkv/rng.hpp"
#include "roughmkv/runner.hpp"
#include "roughmkv/sewing.hpp"
#include "roughmkv/solver.hpp"
#include "roughmkv/stats.hpp"

using namespace roughmkv;

namespace {

struct Criterion {
  bool ok = true;
  void require(bool cond, const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    std::printf("    %s ", cond ? "ok  " : "FAIL");
    std::vprintf(fmt, args);
    std::printf("\n");
    va_end(args);
    ok = ok && cond;
  }
};

double gauss_bump(std::span<const double> z) {
  double r2 = 0.0;
  for (double v : z) r2 += v * v;
  return std::exp(-0.5 * r2);
}

SamplePath fbm_path(double hurst, std::size_t steps, std::uint64_t seed) {
  FbmSpec spec;
  spec.hurst = hurst;
  spec.grid = TimeGrid(1.0, steps);
  spec.seed = seed;
  return sample_fbm(spec);
}

// ---- 1. fBm covariance fidelity ------------------------------------------

bool criterion_1() {
  Criterion c;
  const std::size_t steps = 4096, reps = 10000;
  const double band = 5.0 / std::sqrt(static_cast<double>(reps));
  const std::size_t nodes[5] = {819, 1638, 2458, 3277, 4096};
  for (double hurst : {0.25, 0.5, 0.75}) {
    FbmSpec spec;
    spec.hurst = hurst;
    spec.grid = TimeGrid(1.0, steps);
    spec.seed = 20240001;
    std::vector<double> sums(reps * 25);
    sample_fbm_batch_apply(
        spec, reps,
        [&](std::size_t r, const SamplePath& p) {
          for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
              sums[r * 25 + i * 5 + j] = p.value(nodes[i]) * p.value(nodes[j]);
        },
        Parallelism::kOpenMP);
    double worst = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        double acc = 0.0;
        for (std::size_t r = 0; r < reps; ++r) acc += sums[r * 25 + i * 5 + j];
        acc /= static_cast<double>(reps);
        const double s = spec.grid.node(nodes[i]);
        const double t = spec.grid.node(nodes[j]);
        worst = std::max(worst, std::abs(acc - fbm_covariance(s, t, hurst)));
      }
    }
    c.require(worst < band, "H=%.2f: worst |emp - closed| = %.4f < %.4f over 5x5",
              hurst, worst, band);
  }
  return c.ok;
}

// ---- 2. local non-determinism index recovery ------------------------------

bool criterion_2() {
  Criterion c;
  for (double hurst : {0.25, 0.5, 0.75}) {
    FbmSpec spec;
    spec.hurst = hurst;
    spec.grid = TimeGrid(1.0, 1024);
    spec.seed = 1;
    const auto report = conditional_variance_profile(spec, 256);
    c.require(std::abs(report.zeta_hat - hurst) <= 0.02,
              "H=%.2f: zeta_hat = %.4f within +/- 0.02", hurst, report.zeta_hat);
  }
  return c.ok;
}

// ---- 3. averaging identity -----------------------------------------------

bool criterion_3() {
  Criterion c;
  const std::size_t steps = 4096;
  const SamplePath path = fbm_path(0.5, steps, 11);
  const std::vector<double> x{0.25};
  const double direct = averaging_direct(gauss_bump, path, 0, steps, x);
  const double radius = path.max_abs() + 3.5;  // bump support stays sampled

  auto conv_at = [&](std::size_t points) {
    const SpatialGrid grid(radius, points, 1);
    const LocalTimeField field = local_time(path, grid, grid.spacing());
    std::vector<double> f(grid.cells());
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double z[1] = {grid.axis_center(j)};
      f[j] = gauss_bump(std::span<const double>(z, 1));
    }
    return averaging_via_local_time(f, field, 0, steps, x);
  };

  const double conv = conv_at(1024);
  const double rel = std::abs(conv - direct) / std::abs(direct);
  c.require(rel <= 0.02, "relative gap %.4f <= 0.02 at M=2^12, h=dx", rel);

  std::vector<double> lh, le;
  for (std::size_t points : {128u, 256u, 512u, 1024u}) {
    const SpatialGrid grid(radius, points, 1);
    const double err = std::abs(conv_at(points) - direct);
    lh.push_back(std::log(grid.spacing()));
    le.push_back(std::log(err + 1e-16));
  }
  const double slope = linear_fit(lh, le).slope;
  c.require(slope >= 0.8, "refinement error slope %.3f >= 0.8", slope);
  return c.ok;
}

// ---- 4. local-time regularity --------------------------------------------

bool criterion_4() {
  Criterion c;
  const struct {
    double hurst, lambda;
  } configs[3] = {{0.5, 0.0}, {0.5, 1.0}, {0.25, 1.0}};
  for (const auto& cf : configs) {
    const SamplePath path = fbm_path(cf.hurst, 4096, 101);
    const SpatialGrid grid = SpatialGrid::cover_cells(path, 512, 1.0);
    const LocalTimeField field = local_time(path, grid, grid.spacing());
    const HolderEstimate est =
        local_time_holder_profile(field, cf.lambda, cf.hurst);
    const double ceiling = 1.0 - (cf.lambda + 0.5) * cf.hurst;
    const bool in_band =
        est.exponent >= ceiling - 0.35 && est.exponent <= ceiling + 0.10;
    c.require(in_band && est.r2 >= 0.9,
              "(H=%.2f, lambda=%g): gamma_hat=%.3f in [%.3f, %.3f], r2=%.3f",
              cf.hurst, cf.lambda, est.exponent, ceiling - 0.35, ceiling + 0.10,
              est.r2);
  }
  return c.ok;
}

// ---- 5. sewing engine ------------------------------------------------------

bool criterion_5() {
  Criterion c;
  // midpoint-frozen Young germ against the closed-form Riemann-Stieltjes value
  Germ young;
  young.eval = [](double s, double t) {
    return std::sin(0.5 * (s + t) + 0.3) * (std::sin(t + 0.3) - std::sin(s + 0.3));
  };
  const double exact =
      0.5 * (std::sin(1.3) * std::sin(1.3) - std::sin(0.3) * std::sin(0.3));
  const SewingResult r = sew(young, 0.0, 1.0, 14);
  c.require(std::abs(r.value - exact) <= 1e-6,
            "Young sewing matches the RS oracle: |gap| = %.2e <= 1e-6",
            std::abs(r.value - exact));
  c.require(r.certified, "Young germ certified (order %.2f)", r.observed_order);

  // remainder bound |IA - A| <= c ||dA||_beta (t-s)^beta, c stable across scales
  std::vector<double> nodes;
  for (std::size_t i = 0; i <= 64; ++i) nodes.push_back(i / 64.0);
  for (const auto& [name, germ, beta] : {
           std::tuple<const char*, Germ, double>{
               "width^2",
               Germ{[](double s, double t) { return (t - s) * (t - s); }, 0, 0},
               2.0},
           std::tuple<const char*, Germ, double>{
               "young-left",
               Germ{[](double s, double t) {
                      return std::sin(s + 0.3) *
                             (std::sin(t + 0.3) - std::sin(s + 0.3));
                    },
                    0, 0},
               2.0},
       }) {
    const GermNorms norms = germ_norms(germ, 1.0, beta, nodes);
    double cmin = 1e300, cmax = 0.0;
    for (double span : {1.0, 0.5, 0.25, 0.125}) {
      const SewingResult sr = sew(germ, 0.0, span, 14);
      const double cc = sr.germ_gap / (norms.beta_norm * std::pow(span, beta));
      cmin = std::min(cmin, cc);
      cmax = std::max(cmax, cc);
    }
    c.require(cmax / cmin < 10.0, "%s: measured c in [%.3f, %.3f], ratio %.2f < 10",
              name, cmin, cmax, cmax / cmin);
  }

  Germ root;
  root.eval = [](double s, double t) { return std::sqrt(t - s); };
  c.require(!sew(root, 0.0, 1.0, 12).certified,
            "sqrt(t-s) germ flagged uncertified (beta <= 1)");
  return c.ok;
}

// ---- 6. germ identification -----------------------------------------------

bool criterion_6() {
  Criterion c;
  const auto drift = modulate(
      gaussian_bump_coefficient(CoeffRole::kDrift, 1.0, 0.8, 0.0, 1), 0.6, 0.5);
  const auto diff_sq =
      gaussian_bump_coefficient(CoeffRole::kDiffusion, 0.7, 1.1, 0.3, 1).squared();

  auto run_level = [&](std::size_t steps, std::size_t points, const Coefficient& co,
                       double* value, double* oracle) {
    const SamplePath w = fbm_path(0.2, steps, 43);
    const SpatialGrid grid(w.max_abs() + 2.5, points, 1);
    const LocalTimeField field = local_time(w, grid, grid.spacing());
    SamplePath flow(w.grid, 1);
    for (std::size_t i = 0; i <= steps; ++i)
      flow.value(i) = 0.4 * std::sin(2.0 * w.grid.node(i)) + 0.1;
    const Germ germ = frozen_coefficient_germ(co, flow, field);
    *value = sew(germ, 0.0, 1.0, 14).value;
    // unfrozen oracle: per-cell Simpson, piecewise-constant path convention
    double acc = 0.0;
    const double dt = w.grid.dt();
    std::vector<double> arg(1), fl(1);
    for (std::size_t i = 0; i < steps; ++i) {
      const double wr = w.value(i);
      const double ts[3] = {w.grid.node(i), w.grid.node(i) + 0.5 * dt,
                            w.grid.node(i + 1)};
      const double wt[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};
      double cell = 0.0;
      for (int q = 0; q < 3; ++q) {
        flow.interpolate(ts[q], fl);
        arg[0] = fl[0] - wr;
        cell += wt[q] * co.value(ts[q], arg);
      }
      acc += cell * dt;
    }
    *oracle = acc;
  };

  for (const auto& [name, co] :
       {std::pair<const char*, const Coefficient&>{"A1 (drift)", drift},
        std::pair<const char*, const Coefficient&>{"A2 (squared diffusion)",
                                                   diff_sq}}) {
    std::vector<double> errs;
    double rel_finest = 0.0;
    for (const auto& [steps, points] :
         {std::pair<std::size_t, std::size_t>{1024, 512},
          std::pair<std::size_t, std::size_t>{2048, 1024},
          std::pair<std::size_t, std::size_t>{4096, 2048}}) {
      double value = 0.0, oracle = 0.0;
      run_level(steps, points, co, &value, &oracle);
      errs.push_back(std::abs(value - oracle));
      rel_finest = std::abs(value - oracle) / std::abs(oracle);
    }
    c.require(rel_finest <= 0.03, "%s: relative error %.4f <= 0.03 at M=2^12",
              name, rel_finest);
    const bool halves = errs[1] <= 0.7 * errs[0] && errs[2] <= 0.7 * errs[1];
    c.require(halves, "%s: errors {%.2e, %.2e, %.2e} halve under refinement",
              name, errs[0], errs[1], errs[2]);
  }
  return c.ok;
}

// ---- 7. Wasserstein layer ---------------------------------------------------

bool criterion_7() {
  Criterion c;
  {
    const auto mu = EmpiricalMeasure::own({0.0, 1.0}, 1);
    const auto nu = EmpiricalMeasure::own({0.0, 2.0}, 1);
    c.require(std::abs(wasserstein1_1d(mu, nu) - 0.5) < 1e-14,
              "two-point 1-d case equals 1/2 exactly");
    const auto d0 = EmpiricalMeasure::own(std::vector<double>(8, 0.0), 1);
    const auto d3 = EmpiricalMeasure::own(std::vector<double>(8, 3.0), 1);
    c.require(std::abs(wasserstein1_1d(d0, d3) - 3.0) < 1e-14,
              "translated point masses cost the displacement");
  }
  {
    bool all = true;
    NormalStream rng(100);
    for (int rep = 0; rep < 12; ++rep) {
      const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform() * 7);
      std::vector<double> a(n * 2), b(n * 2);
      for (double& v : a) v = rng.next();
      for (double& v : b) v = rng.next() + 0.3;
      const auto mu = EmpiricalMeasure::own(a, 2);
      const auto nu = EmpiricalMeasure::own(b, 2);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = 1e300;
      do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double d2 = 0.0;
          for (std::size_t k = 0; k < 2; ++k) {
            const double d = mu.sample(i)[k] - nu.sample(perm[i])[k];
            d2 += d * d;
          }
          cost += std::sqrt(d2);
        }
        best = std::min(best, cost / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      all = all && std::abs(wasserstein1_assignment(mu, nu) - best) < 1e-10;
    }
    c.require(all, "assignment solver matches enumeration for N <= 8 (12 clouds)");
  }
  {
    bool sandwich = true, metric = true, dominated = true;
    std::vector<std::function<double(std::span<const double>)>> tests;
    tests.emplace_back([](std::span<const double> x) { return x[0]; });
    tests.emplace_back([](std::span<const double> x) { return -x[0]; });
    tests.emplace_back(
        [](std::span<const double> x) { return std::abs(x[0] - 0.3); });
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      NormalStream rng(500 + seed);
      std::vector<double> a(32), b(32), r(32);
      for (double& v : a) v = rng.next();
      for (double& v : b) v = rng.next() + 0.4;
      for (double& v : r) v = 0.5 * rng.next() - 0.2;
      const auto mu = EmpiricalMeasure::own(a, 1);
      const auto nu = EmpiricalMeasure::own(b, 1);
      const auto rho = EmpiricalMeasure::own(r, 1);
      const double d_mn = wasserstein1_1d(mu, nu);
      sandwich = sandwich && kantorovich_lower_bound(mu, nu, tests) <= d_mn + 1e-12;
      metric = metric && std::abs(d_mn - wasserstein1_1d(nu, mu)) < 1e-12 &&
               wasserstein1_1d(mu, rho) <= d_mn + wasserstein1_1d(nu, rho) + 1e-12 &&
               wasserstein1_1d(mu, mu) == 0.0;
      dominated = dominated && d_mn <= wasserstein2_1d(mu, nu) + 1e-12;
    }
    c.require(sandwich, "duality sandwich holds on 100 random pairs");
    c.require(metric, "metric axioms hold on 100 random pairs");
    c.require(dominated, "W1 <= W2 on all pairs");
  }
  return c.ok;
}

// ---- 8. solver degenerate limits -------------------------------------------

bool criterion_8() {
  Criterion c;
  {
    const auto b = gaussian_bump_coefficient(CoeffRole::kDrift, 1.0, 0.8, 0.0, 1);
    const auto a = constant_coefficient(CoeffRole::kDiffusion, 0.0, 1);
    const double eps = 0.15;
    Coefficient b_eps = mollify(b, MollifierSpec{eps});
    std::vector<double> errors, dts;
    for (std::size_t steps : {512u, 1024u}) {
      const SamplePath w = fbm_path(0.5, steps, 3);
      const auto ens = simulate(b, a, mean_functional(1), w, eps, 4, 9, 0.3);
      double x = 0.3;
      std::vector<double> z(1);
      const double dt = w.grid.dt();
      for (std::size_t i = 0; i < steps; ++i) {
        const double wr = w.value(i);
        const double t0 = w.grid.node(i);
        auto f = [&](double t, double y) {
          z[0] = y - wr;
          return b_eps.value(t, z);
        };
        const double k1 = f(t0, x);
        const double k2 = f(t0 + dt / 2, x + dt / 2 * k1);
        const double k3 = f(t0 + dt / 2, x + dt / 2 * k2);
        const double k4 = f(t0 + dt, x + dt * k3);
        x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      }
      errors.push_back(std::abs(ens.state(0, steps) - x));
      dts.push_back(dt);
    }
    c.require(errors[0] <= 5.0 * dts[0] && errors[1] <= 5.0 * dts[1],
              "a=0 reduction: |Euler - RK4| = {%.2e, %.2e} <= 5 dt", errors[0],
              errors[1]);
    c.require(errors[1] <= 0.7 * errors[0], "ODE error shrinks with the step");
  }
  {
    const std::size_t n = 2000;
    const double sigma = 0.8;
    const SamplePath w = fbm_path(0.5, 256, 5);
    const auto b = constant_coefficient(CoeffRole::kDrift, 0.0, 1);
    const auto a = constant_coefficient(CoeffRole::kDiffusion, sigma, 1);
    const auto ens = simulate(b, a, mean_functional(1), w, 0.1, n, 17, 0.0);
    double mean = 0.0, sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      mean += ens.state(p, 256);
      sq += ens.state(p, 256) * ens.state(p, 256);
    }
    mean /= n;
    const double var = sq / n - mean * mean;
    const double se = sigma * sigma * std::sqrt(2.0 / (n - 1.0));
    c.require(std::abs(var - sigma * sigma) <= 3.0 * se,
              "b=0: Var(x_T) = %.4f vs sigma^2 T = %.4f within 3 SE = %.4f", var,
              sigma * sigma, 3.0 * se);
  }
  return c.ok;
}

// ---- 9. epsilon-uniform tightness ------------------------------------------

bool criterion_9() {
  Criterion c;
  const auto cfg = scenario_config("flocking_singular");
  const SamplePath w = sample_fbm(cfg.driver_spec());
  const auto sweep = epsilon_sweep(
      cfg.make_drift(), cfg.make_diffusion(), cfg.make_functional(), w,
      cfg.solver.epsilons, cfg.solver.particles, cfg.solver.seed, cfg.solver.x0,
      cfg.diagnostics.gamma1, cfg.solver.growth_factor);
  double cmin = 1e300, cmax = 0.0;
  for (double v : sweep.c2) {
    cmin = std::min(cmin, v);
    cmax = std::max(cmax, v);
  }
  c.require(cmax / cmin <= 2.0,
            "c_{2,eps,gamma1} varies by factor %.3f <= 2 over eps in "
            "{0.2,0.1,0.05,0.025}",
            cmax / cmin);
  const auto mom = moment_holder(sweep.ensembles.back(), 2.0, cfg.diagnostics.gamma1);
  c.require(mom.fitted_exponent >= cfg.diagnostics.gamma1 - 0.1,
            "fitted increment exponent %.3f >= gamma1 - 0.1 = %.2f",
            mom.fitted_exponent, cfg.diagnostics.gamma1 - 0.1);
  return c.ok;
}

// ---- 10. law-flow continuity ------------------------------------------------

bool criterion_10() {
  Criterion c;
  const auto cfg = scenario_config("flocking_singular");
  const SamplePath w = sample_fbm(cfg.driver_spec());
  const auto ens = simulate(cfg.make_drift(), cfg.make_diffusion(),
                            cfg.make_functional(), w, cfg.solver.epsilons.back(),
                            cfg.solver.particles, cfg.solver.seed, cfg.solver.x0);
  const double path_gamma = cfg.diagnostics.gamma1 / 2.0;  // paths are C^{gamma1/2}
  const auto rep = law_flow_continuity(ens, path_gamma);
  c.require(rep.fitted_exponent >= path_gamma - 0.1,
            "flocking: fitted exponent %.3f >= %.2f - 0.1", rep.fitted_exponent,
            path_gamma);

  const SamplePath wbm = fbm_path(0.5, 512, 3);
  const auto bm = simulate(constant_coefficient(CoeffRole::kDrift, 0.0, 1),
                           constant_coefficient(CoeffRole::kDiffusion, 0.8, 1),
                           mean_functional(1), wbm, 0.2, 2000, 5, 0.0);
  const auto control = law_flow_continuity(bm, 0.5);
  c.require(std::abs(control.fitted_exponent - 0.5) <= 0.05,
            "BM control: fitted exponent %.3f = 0.5 +/- 0.05",
            control.fitted_exponent);
  return c.ok;
}

// ---- 11. Ito isometry --------------------------------------------------------

bool criterion_11() {
  Criterion c;
  const SamplePath w = fbm_path(0.3, 256, 23);
  const SpatialGrid grid = SpatialGrid::cover_cells(w, 256, 1.0);
  const LocalTimeField field = local_time(w, grid, grid.spacing());
  const std::vector<std::pair<std::size_t, std::size_t>> windows{
      {0, 128}, {64, 192}, {128, 256}};
  const auto b = constant_coefficient(CoeffRole::kDrift, 0.0, 1);
  for (const auto& [name, a] : {
           std::pair<const char*, Coefficient>{
               "constant", constant_coefficient(CoeffRole::kDiffusion, 0.6, 1)},
           std::pair<const char*, Coefficient>{
               "smooth",
               gaussian_bump_coefficient(CoeffRole::kDiffusion, 0.5, 1.0, 0.2, 1)},
       }) {
    const auto ens = simulate(b, a, mean_functional(1), w, 0.15, 2000, 25, 0.0);
    const auto rep = ito_isometry(ens, a, field, windows);
    bool all = rep.all_pass;
    double worst = 0.0;
    for (const auto& win : rep.windows)
      worst = std::max(worst, std::abs(win.ratio - 1.0));
    c.require(all, "%s diffusion: all windows |ratio - 1| <= 3 rel SE (worst %.4f)",
              name, worst);
  }
  return c.ok;
}

// ---- 12. martingale identities ----------------------------------------------

bool criterion_12() {
  Criterion c;
  const auto cfg = scenario_config("smooth_drift");
  const SamplePath w = sample_fbm(cfg.driver_spec());
  const auto ens = simulate(cfg.make_drift(), cfg.make_diffusion(),
                            cfg.make_functional(), w, cfg.solver.epsilons.back(),
                            cfg.solver.particles, cfg.solver.seed, cfg.solver.x0);
  const SpatialGrid grid = SpatialGrid::cover_cells(w, 256, 1.0);
  const LocalTimeField field = local_time(w, grid, grid.spacing());
  const auto phis = martingale_phi_presets();
  const std::size_t m = ens.grid.steps;
  const std::vector<std::pair<std::size_t, std::size_t>> pairs{
      {m / 4, (3 * m) / 4}, {m / 2, m}};
  const auto rep = martingale_defect(ens, cfg.make_drift(), cfg.make_diffusion(),
                                     field, phis, pairs, true);
  c.require(rep.all_pass && rep.rows.size() == 24,
            "all %zu defect rows (M, R, N x 4 functionals x 2 pairs) within 3 SE",
            rep.rows.size());

  const auto rigged = martingale_defect(ens, cfg.make_drift(), cfg.make_diffusion(),
                                        field, phis, pairs, false);
  bool m_failed = false;
  for (const auto& row : rigged.rows)
    if (row.process == "M" && !row.pass) m_failed = true;
  c.require(m_failed, "uncompensated adversarial variant fails the M test");
  return c.ok;
}

// ---- 13. hypothesis gate arithmetic -----------------------------------------

bool criterion_13() {
  Criterion c;
  const auto pass = hypothesis_gate(0.2, 0.5, 0.8, 1);
  c.require(pass.pass && std::abs(pass.tightness_slack - 0.3) < 1e-12 &&
                std::abs(pass.drift_slack - 0.2) < 1e-12 &&
                std::abs(pass.holder_slack - 0.1) < 1e-12,
            "worked example (0.2, 0.5, 0.8, k=1) passes with slacks (0.3, 0.2, 0.1)");
  const auto fail = hypothesis_gate(0.3, 0.9, 1.9, 1);
  c.require(!fail.pass && std::abs(fail.tightness_slack + 0.05) < 1e-12,
            "zeta0 = 0.3, k=1 fails with tightness slack -0.05");

  // boundary sweep: the tag flips exactly at (2 + 3k/2) zeta0 = 1
  bool flipped_at_boundary = true;
  for (double z : {0.26, 0.28, 0.2857142857142857, 0.30}) {
    const bool expect = (2.0 + 1.5) * z < 1.0;
    const auto g = hypothesis_gate(z, 2.0, 4.0, 1);
    flipped_at_boundary = flipped_at_boundary && (g.tightness_ok == expect);
  }
  c.require(flipped_at_boundary, "tag flips at (2 + 3k/2) zeta0 = 1");
  return c.ok;
}

// ---- 14. reproducibility -----------------------------------------------------

bool criterion_14() {
  Criterion c;
  namespace fs = std::filesystem;
  const auto cfg = scenario_config("smoke_bm");
  const auto dir_a = fs::temp_directory_path() / "roughmkv_accept_a";
  const auto dir_b = fs::temp_directory_path() / "roughmkv_accept_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const RunManifest ma = run_experiment(cfg, dir_a);
  const RunManifest mb = run_experiment(cfg, dir_b);
  bool identical = ma.artifacts.size() == mb.artifacts.size();
  for (std::size_t i = 0; identical && i < ma.artifacts.size(); ++i)
    identical = ma.artifacts[i].file == mb.artifacts[i].file &&
                ma.artifacts[i].checksum == mb.artifacts[i].checksum;
  c.require(identical, "two smoke_bm runs produce byte-identical artifacts (%zu files)",
            ma.artifacts.size());

  const auto replay = replay_run(dir_a / "manifest.json");
  c.require(replay.reports_match && replay.all_pass,
            "replay verifies checksums and reproduces the reports");
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<const char*, std::function<bool()>>> criteria{
      {1, {"fBm covariance fidelity", criterion_1}},
      {2, {"local non-determinism index recovery", criterion_2}},
      {3, {"averaging identity", criterion_3}},
      {4, {"local-time regularity", criterion_4}},
      {5, {"sewing engine", criterion_5}},
      {6, {"germ identification", criterion_6}},
      {7, {"Wasserstein layer", criterion_7}},
      {8, {"solver degenerate limits", criterion_8}},
      {9, {"epsilon-uniform tightness", criterion_9}},
      {10, {"law-flow continuity", criterion_10}},
      {11, {"Ito isometry", criterion_11}},
      {12, {"martingale identities", criterion_12}},
      {13, {"hypothesis gate arithmetic", criterion_13}},
      {14, {"reproducibility", criterion_14}},
  };
  // stated runtime budgets, seconds
  const std::map<int, double> budgets{{1, 60},  {2, 60},  {3, 120}, {4, 900},
                                      {5, 60},  {6, 120}, {7, 60},  {8, 60},
                                      {9, 600}, {10, 180}, {11, 120}, {12, 300},
                                      {13, 60}, {14, 120}};

  std::vector<int> selection;
  for (int i = 1; i < argc; ++i) selection.push_back(std::atoi(argv[i]));
  if (selection.empty())
    for (const auto& [num, entry] : criteria) selection.push_back(num);

  bool all_ok = true;
  for (int num : selection) {
    const auto it = criteria.find(num);
    if (it == criteria.end()) {
      std::printf("unknown criterion %d\n", num);
      all_ok = false;
      continue;
    }
    std::printf("criterion %d: %s\n", num, it->second.first);
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = it->second.second();
    } catch (const std::exception& e) {
      std::printf("    FAIL exception: %s\n", e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const double budget = budgets.at(num);
    if (elapsed > budget) {
      std::printf("    FAIL runtime %.1f s exceeds the %.0f s budget\n", elapsed,
                  budget);
      ok = false;
    }
    std::printf("[%s] criterion %d (%.1f s)\n", ok ? "PASS" : "FAIL", num, elapsed);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
