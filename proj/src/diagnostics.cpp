#include "roughmkv/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "roughmkv/errors.hpp"
#include "roughmkv/sewing.hpp"
#include "roughmkv/stats.hpp"

namespace roughmkv {

namespace {

// Dyadic gaps in nodes, skipping the two smallest scales (4 dt upward).
std::vector<std::size_t> dyadic_gaps(std::size_t steps) {
  std::vector<std::size_t> gaps;
  for (std::size_t g = 4; g <= steps / 2; g *= 2) gaps.push_back(g);
  return gaps;
}

std::vector<std::size_t> anchor_nodes(std::size_t steps, std::size_t gap) {
  std::vector<std::size_t> anchors;
  const std::size_t last = steps - gap;
  const std::size_t stride = std::max<std::size_t>(1, last / 16);
  for (std::size_t s = 0; s <= last; s += stride) anchors.push_back(s);
  return anchors;
}

double increment_moment(const ParticleEnsemble& e, std::size_t s, std::size_t t,
                        double p) {
  double acc = 0.0;
  for (std::size_t q = 0; q < e.particles; ++q) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < e.state_dim; ++c) {
      const double d = e.state(q, t, c) - e.state(q, s, c);
      d2 += d * d;
    }
    acc += std::pow(std::sqrt(d2), p);
  }
  return acc / static_cast<double>(e.particles);
}

double abs_moment(const ParticleEnsemble& e, std::size_t node, double p) {
  double acc = 0.0;
  for (std::size_t q = 0; q < e.particles; ++q) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < e.state_dim; ++c) {
      const double v = e.state(q, node, c);
      d2 += v * v;
    }
    acc += std::pow(std::sqrt(d2), p);
  }
  return acc / static_cast<double>(e.particles);
}

void require_scalar(const ParticleEnsemble& e, const char* op) {
  if (e.state_dim != 1)
    throw std::invalid_argument(std::string(op) + ": scalar ensembles only");
}

// Step coefficient values a_eps(t_r, F(mu_r) - w_r), shared by all particles.
std::vector<double> step_values(const ParticleEnsemble& e, const Coefficient& c) {
  std::vector<double> vals(e.grid.steps);
  std::vector<double> z(e.flow_dim);
  for (std::size_t r = 0; r < e.grid.steps; ++r) {
    for (std::size_t k = 0; k < e.flow_dim; ++k)
      z[k] = e.f_values[r * e.flow_dim + k] - e.driver.value(r, k);
    vals[r] = c.value(e.grid.node(r), z);
  }
  return vals;
}

}  // namespace

MomentHolderReport moment_holder(const ParticleEnsemble& ensemble, double p,
                                 double gamma1) {
  if (!(p > 0.0)) throw std::invalid_argument("moment_holder: p must be positive");
  if (!(gamma1 > 0.0))
    throw std::invalid_argument("moment_holder: gamma1 must be positive");
  const auto gaps = dyadic_gaps(ensemble.grid.steps);
  if (gaps.size() < 5)
    throw std::invalid_argument(
        "moment_holder: grid too coarse for 5 dyadic scales");

  MomentHolderReport report;
  report.p = p;
  report.gamma1 = gamma1;
  const double dt = ensemble.grid.dt();

  std::vector<double> lx, ly;
  for (std::size_t gap : gaps) {
    double worst = 0.0;
    for (std::size_t s : anchor_nodes(ensemble.grid.steps, gap))
      worst = std::max(worst, increment_moment(ensemble, s, s + gap, p));
    const double gap_t = static_cast<double>(gap) * dt;
    report.table.push_back({gap_t, worst});
    report.c_hat = std::max(report.c_hat, worst / std::pow(gap_t, p * gamma1 / 2.0));
    if (worst > 0.0) {
      lx.push_back(std::log(gap_t));
      ly.push_back(std::log(worst));
    }
  }
  if (lx.size() >= 2) {
    const LinearFit fit = linear_fit(lx, ly);
    report.slope = fit.slope;
    report.fitted_exponent = 2.0 * fit.slope / p;
    report.r2 = fit.r2;
  }
  const std::size_t stride = std::max<std::size_t>(1, ensemble.grid.steps / 32);
  for (std::size_t node = 0; node <= ensemble.grid.steps; node += stride)
    report.sup_moment = std::max(report.sup_moment, abs_moment(ensemble, node, p));
  return report;
}

LawFlowReport law_flow_continuity(const ParticleEnsemble& ensemble, double gamma1) {
  require_scalar(ensemble, "law_flow_continuity");
  const auto gaps = dyadic_gaps(ensemble.grid.steps);
  if (gaps.size() < 3)
    throw std::invalid_argument("law_flow_continuity: grid too coarse");

  LawFlowReport report;
  report.gamma1 = gamma1;
  const double dt = ensemble.grid.dt();
  std::vector<double> lx, ly;
  for (std::size_t gap : gaps) {
    double worst = 0.0;
    for (std::size_t s : anchor_nodes(ensemble.grid.steps, gap))
      worst = std::max(worst, wasserstein1_1d(ensemble.law_at(s),
                                              ensemble.law_at(s + gap)));
    const double gap_t = static_cast<double>(gap) * dt;
    report.table.push_back({gap_t, worst});
    if (worst > 0.0) {
      lx.push_back(std::log(gap_t));
      ly.push_back(std::log(worst));
    }
  }
  if (lx.size() >= 2) {
    const LinearFit fit = linear_fit(lx, ly);
    report.fitted_exponent = fit.slope;
    report.r2 = fit.r2;
  }
  return report;
}

IsometryReport ito_isometry(
    const ParticleEnsemble& ensemble, const Coefficient& diffusion,
    const LocalTimeField& field,
    std::span<const std::pair<std::size_t, std::size_t>> windows, int sew_depth) {
  require_scalar(ensemble, "ito_isometry");
  Coefficient a_eps = mollify(diffusion, MollifierSpec{ensemble.epsilon});
  const auto a_vals = step_values(ensemble, a_eps);
  const SamplePath flow = ensemble.flow_path();
  const Germ a2_germ = quadratic_germ(a_eps.squared(), flow, field);

  IsometryReport report;
  for (const auto& [s, t] : windows) {
    if (t > ensemble.grid.steps || s > t)
      throw std::invalid_argument("ito_isometry: bad window");
    IsometryWindow w;
    w.s = ensemble.grid.node(s);
    w.t = ensemble.grid.node(t);
    if (s == t) {
      w.lhs = w.rhs = 0.0;
      w.ratio = 1.0;
      w.pass = true;
      report.windows.push_back(w);
      continue;
    }
    std::vector<double> sq(ensemble.particles, 0.0);
    for (std::size_t q = 0; q < ensemble.particles; ++q) {
      double acc = 0.0;
      for (std::size_t r = s; r < t; ++r) acc += a_vals[r] * ensemble.noise(q, r);
      sq[q] = acc * acc;
    }
    const MeanVar stats = mean_var(sq);
    w.lhs = stats.mean;
    w.rhs = sew(a2_germ, w.s, w.t, sew_depth).value;
    w.ratio = (w.rhs != 0.0) ? w.lhs / w.rhs : 0.0;
    w.se_rel = (stats.mean != 0.0) ? stats.se / std::abs(stats.mean) : 0.0;
    w.pass = std::abs(w.ratio - 1.0) <= 3.0 * w.se_rel;
    report.windows.push_back(w);
    report.all_pass = report.all_pass && w.pass;
  }
  return report;
}

std::vector<std::string> martingale_phi_presets() {
  return {"one", "tanh_x", "tanh_beta", "tanh_x_tanh_beta"};
}

MartingaleReport martingale_defect(
    const ParticleEnsemble& ensemble, const Coefficient& drift,
    const Coefficient& diffusion, const LocalTimeField& field,
    std::span<const std::string> phis,
    std::span<const std::pair<std::size_t, std::size_t>> pairs, bool compensated,
    int sew_depth) {
  require_scalar(ensemble, "martingale_defect");
  const std::size_t n = ensemble.particles;
  const std::size_t nodes = ensemble.grid.nodes();

  Coefficient b_eps = mollify(drift, MollifierSpec{ensemble.epsilon});
  Coefficient a_eps = mollify(diffusion, MollifierSpec{ensemble.epsilon});
  const SamplePath flow = ensemble.flow_path();
  const Germ b_germ = frozen_coefficient_germ(b_eps, flow, field);
  const Germ a_germ = frozen_coefficient_germ(a_eps, flow, field);
  const Germ a2_germ = quadratic_germ(a_eps.squared(), flow, field);

  // integrals I(0, t) at every pair endpoint, cached by node
  std::vector<std::size_t> endpoints;
  for (const auto& [s, t] : pairs) {
    if (t > ensemble.grid.steps || s >= t)
      throw std::invalid_argument("martingale_defect: need node pairs s < t <= M");
    endpoints.push_back(s);
    endpoints.push_back(t);
  }
  std::sort(endpoints.begin(), endpoints.end());
  endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());
  std::vector<double> ib(nodes, 0.0), ia(nodes, 0.0), ia2(nodes, 0.0);
  for (std::size_t node : endpoints) {
    if (node == 0) continue;
    const double t = ensemble.grid.node(node);
    ib[node] = compensated ? sew(b_germ, 0.0, t, sew_depth).value : 0.0;
    ia[node] = sew(a_germ, 0.0, t, sew_depth).value;
    ia2[node] = sew(a2_germ, 0.0, t, sew_depth).value;
  }

  // Brownian path values per particle at the endpoints.
  auto beta_at = [&](std::size_t q, std::size_t node) {
    double acc = 0.0;
    for (std::size_t r = 0; r < node; ++r) acc += ensemble.noise(q, r);
    return acc;
  };

  MartingaleReport report;
  std::vector<double> contrib(n);
  for (const auto& [s_idx, t_idx] : pairs) {
    const std::size_t mid = s_idx / 2;
    for (const std::string& phi_name : phis) {
      auto phi = [&](std::size_t q) -> double {
        if (phi_name == "one") return 1.0;
        if (phi_name == "tanh_x") return std::tanh(ensemble.state(q, mid));
        if (phi_name == "tanh_beta") return std::tanh(beta_at(q, mid));
        if (phi_name == "tanh_x_tanh_beta")
          return std::tanh(ensemble.state(q, mid)) * std::tanh(beta_at(q, mid));
        throw std::invalid_argument("unknown martingale functional '" + phi_name +
                                    "'");
      };
      auto m_at = [&](std::size_t q, std::size_t node) {
        return ensemble.state(q, node) - ensemble.state(q, 0) - ib[node];
      };
      for (int which = 0; which < 3; ++which) {
        for (std::size_t q = 0; q < n; ++q) {
          double inc = 0.0;
          if (which == 0) {
            inc = m_at(q, t_idx) - m_at(q, s_idx);
          } else if (which == 1) {
            const double mt = m_at(q, t_idx), ms = m_at(q, s_idx);
            inc = mt * mt - ms * ms - (ia2[t_idx] - ia2[s_idx]);
          } else {
            inc = m_at(q, t_idx) * beta_at(q, t_idx) -
                  m_at(q, s_idx) * beta_at(q, s_idx) - (ia[t_idx] - ia[s_idx]);
          }
          contrib[q] = phi(q) * inc;
        }
        const MeanVar stats = mean_var(contrib);
        MartingaleRow row;
        row.process = (which == 0) ? "M" : (which == 1) ? "R" : "N";
        row.phi = phi_name;
        row.s = ensemble.grid.node(s_idx);
        row.t = ensemble.grid.node(t_idx);
        row.estimate = stats.mean;
        row.se = stats.se;
        row.pass = std::abs(stats.mean) <= 3.0 * stats.se;
        report.rows.push_back(row);
        if (!row.pass) ++report.failures;
      }
    }
  }
  report.all_pass = report.failures == 0;
  return report;
}

NSweepReport nsweep_fluctuation(const Coefficient& drift,
                                const Coefficient& diffusion,
                                const MeasureFunctional& functional,
                                const SamplePath& w, double epsilon, double x0,
                                std::span<const std::size_t> sizes,
                                std::uint64_t seed, std::size_t reps) {
  NSweepReport report;
  if (sizes.size() < 2) return report;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i)
    if (!(sizes[i] < sizes[i + 1]))
      throw std::invalid_argument("nsweep: sizes must be strictly increasing");

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    std::vector<double> dists(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const std::uint64_t rep_seed = seed + 1000003ULL * rep;
      const auto small = simulate(drift, diffusion, functional, w, epsilon,
                                  sizes[i], rep_seed, x0);
      const auto large = simulate(drift, diffusion, functional, w, epsilon,
                                  sizes[i + 1], rep_seed, x0);
      dists[rep] = wasserstein1(small.law_at(small.grid.steps),
                                large.law_at(large.grid.steps), rep_seed)
                       .value;
    }
    const MeanVar stats = mean_var(dists);
    NSweepRow row;
    row.n_small = sizes[i];
    row.n_large = sizes[i + 1];
    row.mean_w1 = stats.mean;
    row.se = stats.se;
    report.rows.push_back(row);
    if (row.mean_w1 > 0.0) {
      lx.push_back(std::log(static_cast<double>(sizes[i])));
      ly.push_back(std::log(row.mean_w1));
    }
  }
  if (lx.size() >= 2) {
    const LinearFit fit = linear_fit(lx, ly);
    report.fitted_exponent = fit.slope;
    report.r2 = fit.r2;
    report.has_fit = true;
  }
  return report;
}

}  // namespace roughmkv
