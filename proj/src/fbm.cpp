#include "roughmkv/fbm.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "roughmkv/errors.hpp"
#include "roughmkv/fft.hpp"
#include "roughmkv/rng.hpp"
#include "roughmkv/stats.hpp"

namespace roughmkv {

namespace {

constexpr std::size_t kDenseLimit = 2048;

// fGn autocovariance at integer lag j, spacing dt:
// rho(j) = dt^{2H} * (|j+1|^{2H} - 2|j|^{2H} + |j-1|^{2H}) / 2.
std::vector<double> fgn_autocov(double hurst, double dt, std::size_t lags) {
  std::vector<double> rho(lags + 1);
  const double scale = std::pow(dt, 2.0 * hurst);
  const double h2 = 2.0 * hurst;
  for (std::size_t j = 0; j <= lags; ++j) {
    const double jd = static_cast<double>(j);
    const double left = std::pow(std::abs(jd + 1.0), h2);
    const double mid = 2.0 * std::pow(std::abs(jd), h2);
    const double right = std::pow(std::abs(jd - 1.0), h2);
    rho[j] = 0.5 * scale * (left - mid + right);
  }
  return rho;
}

// Eigenvalues of the 2M circulant embedding of the fGn covariance.
// Empty result means the embedding is not nonnegative definite.
std::vector<double> embedding_eigenvalues(double hurst, double dt, std::size_t steps) {
  const std::size_t n2 = 2 * steps;
  const auto rho = fgn_autocov(hurst, dt, steps);
  std::vector<std::complex<double>> c(n2);
  for (std::size_t j = 0; j <= steps; ++j) c[j] = rho[j];
  for (std::size_t j = 1; j < steps; ++j) c[n2 - j] = rho[j];
  fft::forward({n2}, c);
  std::vector<double> eig(n2);
  double max_eig = 0.0;
  for (std::size_t j = 0; j < n2; ++j) {
    eig[j] = c[j].real();
    max_eig = std::max(max_eig, eig[j]);
  }
  const double floor = -1e-9 * std::max(max_eig, 1e-300);
  for (double& e : eig) {
    if (e < floor) return {};
    e = std::max(e, 0.0);
  }
  return eig;
}

// Davies-Harte draw: Hermitian spectral amplitudes, one FFT, Re part is a
// stationary fGn block of length `steps`.
void synth_circulant(std::span<const double> eig, std::size_t steps,
                     NormalStream& stream, std::size_t comp, SamplePath& out) {
  const std::size_t n2 = eig.size();
  std::vector<std::complex<double>> a(n2);
  a[0] = std::sqrt(eig[0] / static_cast<double>(n2)) * stream.next();
  a[steps] = std::sqrt(eig[steps] / static_cast<double>(n2)) * stream.next();
  for (std::size_t j = 1; j < steps; ++j) {
    const double amp = std::sqrt(eig[j] / (2.0 * static_cast<double>(n2)));
    const double re = stream.next();
    const double im = stream.next();
    a[j] = std::complex<double>(amp * re, amp * im);
    a[n2 - j] = std::conj(a[j]);
  }
  fft::forward({n2}, a);
  double acc = 0.0;
  out.value(0, comp) = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    acc += a[i].real();
    out.value(i + 1, comp) = acc;
  }
}

Eigen::MatrixXd dense_path_factor(const FbmSpec& spec) {
  const std::size_t m = spec.grid.steps;
  Eigen::MatrixXd g(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      g(i, j) = fbm_covariance(spec.grid.node(i + 1), spec.grid.node(j + 1),
                               spec.hurst);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw SynthesisError("dense fBm covariance factorisation failed (H=" +
                         std::to_string(spec.hurst) + ", M=" + std::to_string(m) + ")");
  return llt.matrixL();
}

void synth_dense(const Eigen::MatrixXd& factor, std::size_t steps,
                 NormalStream& stream, std::size_t comp, SamplePath& out) {
  Eigen::VectorXd z(steps);
  for (std::size_t i = 0; i < steps; ++i) z(i) = stream.next();
  Eigen::VectorXd values = factor * z;
  out.value(0, comp) = 0.0;
  for (std::size_t i = 0; i < steps; ++i) out.value(i + 1, comp) = values(i);
}

struct SynthesisPlan {
  std::vector<double> eig;       // circulant route when non-empty
  Eigen::MatrixXd dense_factor;  // otherwise
  bool circulant = false;
};

SynthesisPlan make_plan(const FbmSpec& spec, FbmMethod method) {
  SynthesisPlan plan;
  if (method != FbmMethod::kDenseOnly) {
    plan.eig = embedding_eigenvalues(spec.hurst, spec.grid.dt(), spec.grid.steps);
    if (!plan.eig.empty()) {
      plan.circulant = true;
      return plan;
    }
    if (method == FbmMethod::kCirculantOnly)
      throw SynthesisError("circulant embedding not nonnegative definite (H=" +
                           std::to_string(spec.hurst) + ")");
  }
  if (spec.grid.steps > kDenseLimit)
    throw SynthesisError("embedding failed and M=" + std::to_string(spec.grid.steps) +
                         " exceeds the dense fallback limit " +
                         std::to_string(kDenseLimit));
  plan.dense_factor = dense_path_factor(spec);
  return plan;
}

void synth_one(const SynthesisPlan& plan, const FbmSpec& spec,
               std::size_t realisation, SamplePath& out) {
  NormalStream stream(spec.seed, realisation);
  for (std::size_t c = 0; c < spec.dim; ++c) {
    if (plan.circulant)
      synth_circulant(plan.eig, spec.grid.steps, stream, c, out);
    else
      synth_dense(plan.dense_factor, spec.grid.steps, stream, c, out);
  }
}

// Innovations view over nodes 1..M: w_j = sum_a L(j,a) eps_a with iid eps,
// so Var(w_j | w_1..w_m) = sum_{a>m} L(j,a)^2.
struct Conditioner {
  Eigen::MatrixXd chol;  // lower triangular, nodes 1..M
  std::vector<double> diag;

  double cond_var(std::size_t target_node, std::size_t obs_nodes) const {
    double v = diag[target_node - 1];
    for (std::size_t a = 0; a < obs_nodes; ++a) {
      const double l = chol(static_cast<Eigen::Index>(target_node - 1),
                            static_cast<Eigen::Index>(a));
      v -= l * l;
    }
    return v;
  }
};

Conditioner full_conditioner(const FbmSpec& spec) {
  const std::size_t m = spec.grid.steps;
  Eigen::MatrixXd g(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      g(i, j) = fbm_covariance(spec.grid.node(i + 1), spec.grid.node(j + 1),
                               spec.hurst);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("fBm grid covariance is numerically singular (M=" +
                            std::to_string(m) + ", H=" + std::to_string(spec.hurst) + ")");
  Conditioner c;
  c.chol = llt.matrixL();
  c.diag.resize(m);
  for (std::size_t i = 0; i < m; ++i) c.diag[i] = g(i, i);
  return c;
}

NondeterminismReport regress_profile(const TimeGrid& grid, std::size_t s_index,
                                     const std::vector<std::size_t>& targets,
                                     const std::vector<double>& variances) {
  const double dt = grid.dt();
  const double s = grid.node(s_index);
  const double lo = 4.0 * dt, hi = grid.horizon / 4.0;
  std::vector<double> lx, ly, gaps, vars;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double gap = grid.node(targets[i]) - s;
    if (gap < lo || gap > hi) continue;
    if (!(variances[i] > 0.0)) continue;
    gaps.push_back(gap);
    vars.push_back(variances[i]);
    lx.push_back(std::log(gap));
    ly.push_back(std::log(variances[i]));
  }
  if (lx.size() < 2)
    throw std::invalid_argument(
        "conditional_variance_profile: fewer than 2 usable gaps in [4dt, T/4]");
  const LinearFit fit = linear_fit(lx, ly);
  NondeterminismReport report;
  report.zeta_hat = 0.5 * fit.slope;
  report.regression_r2 = fit.r2;
  report.pair_count = lx.size();
  report.gaps = gaps;
  report.variances = vars;
  report.inf_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gaps.size(); ++i)
    report.inf_ratio = std::min(
        report.inf_ratio, vars[i] / std::pow(gaps[i], 2.0 * report.zeta_hat));
  return report;
}

}  // namespace

void FbmSpec::validate() const {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::invalid_argument("FbmSpec: Hurst parameter must lie in (0,1)");
  if (dim == 0) throw std::invalid_argument("FbmSpec: dim must be >= 1");
  if (grid.steps == 0) throw std::invalid_argument("FbmSpec: empty grid");
}

double fbm_covariance(double s, double t, double hurst) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

SamplePath sample_fbm(const FbmSpec& spec, FbmMethod method) {
  spec.validate();
  const SynthesisPlan plan = make_plan(spec, method);
  SamplePath path(spec.grid, spec.dim);
  synth_one(plan, spec, 0, path);
  return path;
}

std::vector<SamplePath> sample_fbm_batch(const FbmSpec& spec, std::size_t count,
                                         Parallelism par, FbmMethod method) {
  std::vector<SamplePath> out(count, SamplePath(spec.grid, spec.dim));
  sample_fbm_batch_apply(
      spec, count,
      [&out](std::size_t r, const SamplePath& p) { out[r] = p; }, par, method);
  return out;
}

void sample_fbm_batch_apply(
    const FbmSpec& spec, std::size_t count,
    const std::function<void(std::size_t, const SamplePath&)>& visit,
    Parallelism par, FbmMethod method) {
  spec.validate();
  if (count == 0) return;
  const SynthesisPlan plan = make_plan(spec, method);
  if (par == Parallelism::kOpenMP) {
#pragma omp parallel
    {
      SamplePath path(spec.grid, spec.dim);
#pragma omp for schedule(static)
      for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(count); ++r) {
        synth_one(plan, spec, static_cast<std::size_t>(r), path);
        visit(static_cast<std::size_t>(r), path);
      }
    }
  } else {
    SamplePath path(spec.grid, spec.dim);
    for (std::size_t r = 0; r < count; ++r) {
      synth_one(plan, spec, r, path);
      visit(r, path);
    }
  }
}

NondeterminismReport conditional_variance_profile(const FbmSpec& spec,
                                                  std::size_t s_index) {
  spec.validate();
  const std::size_t m = spec.grid.steps;
  if (s_index >= m)
    throw std::invalid_argument("conditional_variance_profile: need s < T");

  std::vector<std::size_t> targets;
  std::vector<double> variances;
  if (s_index == 0) {
    for (std::size_t j = 1; j <= m; ++j) {
      targets.push_back(j);
      variances.push_back(
          std::pow(spec.grid.node(j), 2.0 * spec.hurst));
    }
    return regress_profile(spec.grid, 0, targets, variances);
  }

  // Leading-block Cholesky of the observed nodes, then a Schur complement
  // per target node.
  Eigen::MatrixXd k(s_index, s_index);
  for (std::size_t i = 0; i < s_index; ++i)
    for (std::size_t j = 0; j < s_index; ++j)
      k(i, j) = fbm_covariance(spec.grid.node(i + 1), spec.grid.node(j + 1),
                               spec.hurst);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("singular covariance block for nodes 1.." +
                            std::to_string(s_index));
  for (std::size_t j = s_index + 1; j <= m; ++j) {
    Eigen::VectorXd c(s_index);
    const double tj = spec.grid.node(j);
    for (std::size_t i = 0; i < s_index; ++i)
      c(i) = fbm_covariance(spec.grid.node(i + 1), tj, spec.hurst);
    const Eigen::VectorXd y = llt.matrixL().solve(c);
    targets.push_back(j);
    variances.push_back(fbm_covariance(tj, tj, spec.hurst) - y.squaredNorm());
  }
  return regress_profile(spec.grid, s_index, targets, variances);
}

NondeterminismReport conditional_variance_profile(std::span<const SamplePath> paths,
                                                  std::size_t s_index) {
  if (paths.size() < 1000)
    throw std::invalid_argument(
        "sampled conditional_variance_profile: need >= 1000 realisations");
  const TimeGrid grid = paths.front().grid;
  const std::size_t m = grid.steps;
  if (s_index == 0 || s_index >= m)
    throw std::invalid_argument("sampled profile: need grid node 0 < s < T");

  // Subsample observed nodes so the empirical covariance stays well sized.
  constexpr std::size_t kMaxObs = 24;
  std::vector<std::size_t> obs;
  const std::size_t stride = std::max<std::size_t>(1, s_index / kMaxObs);
  for (std::size_t i = s_index; i >= 1; i -= stride) {
    obs.push_back(i);
    if (i <= stride) break;
  }
  std::sort(obs.begin(), obs.end());

  const double inv_r = 1.0 / static_cast<double>(paths.size());
  const std::size_t q = obs.size();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(q, q);
  for (const SamplePath& p : paths)
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        k(a, b) += p.value(obs[a], 0) * p.value(obs[b], 0);
  k *= inv_r;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = a + 1; b < q; ++b) k(a, b) = k(b, a);

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success || !(k.diagonal().minCoeff() > 0.0))
    throw ConditioningError(
        "empirical covariance block is singular over nodes 1.." +
        std::to_string(s_index) + " (subsampled " + std::to_string(q) + " nodes)");

  std::vector<std::size_t> targets;
  std::vector<double> variances;
  for (std::size_t j = s_index + 1; j <= m; ++j) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(q);
    double gjj = 0.0;
    for (const SamplePath& p : paths) {
      const double wt = p.value(j, 0);
      gjj += wt * wt;
      for (std::size_t a = 0; a < q; ++a) c(a) += wt * p.value(obs[a], 0);
    }
    gjj *= inv_r;
    c *= inv_r;
    const Eigen::VectorXd y = llt.matrixL().solve(c);
    targets.push_back(j);
    variances.push_back(gjj - y.squaredNorm());
  }
  return regress_profile(grid, s_index, targets, variances);
}

NondeterminismReport check_local_nondeterminism(const FbmSpec& spec, double zeta) {
  spec.validate();
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("check_local_nondeterminism: zeta must lie in (0,1)");
  const std::size_t m = spec.grid.steps;
  if (m < 8)
    throw std::invalid_argument("check_local_nondeterminism: grid too coarse");

  const Conditioner cond = full_conditioner(spec);

  // Anchor subsample over (0, 3T/4]; all gaps scanned log-spaced per anchor.
  constexpr std::size_t kMaxAnchors = 16;
  constexpr std::size_t kMaxGaps = 48;
  std::vector<std::size_t> anchors;
  const std::size_t top = std::max<std::size_t>(1, (3 * m) / 4);
  const std::size_t astride = std::max<std::size_t>(1, top / kMaxAnchors);
  for (std::size_t a = astride; a <= top; a += astride) anchors.push_back(a);

  double inf_ratio = std::numeric_limits<double>::infinity();
  std::size_t pair_count = 0;
  for (std::size_t a : anchors) {
    const std::size_t max_gap = m - a;
    std::size_t prev = 0;
    for (std::size_t g = 0; g < kMaxGaps; ++g) {
      const double frac = static_cast<double>(g) / (kMaxGaps - 1);
      auto gap = static_cast<std::size_t>(
          std::round(std::pow(static_cast<double>(max_gap), frac)));
      gap = std::max<std::size_t>(1, std::min(gap, max_gap));
      if (gap == prev) continue;
      prev = gap;
      const double v = cond.cond_var(a + gap, a);
      const double dt_gap = spec.grid.node(a + gap) - spec.grid.node(a);
      inf_ratio = std::min(inf_ratio, v / std::pow(dt_gap, 2.0 * zeta));
      ++pair_count;
    }
  }

  NondeterminismReport report = conditional_variance_profile(
      spec, std::max<std::size_t>(1, m / 4));
  report.inf_ratio = inf_ratio;
  report.pair_count = pair_count;
  return report;
}

}  // namespace roughmkv
