#include "roughmkv/measure.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/rng.hpp"

namespace roughmkv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double euclid(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Resample-with-replacement of the smaller cloud to the larger count; the
// draw order is fixed by the seed, never by thread scheduling.
std::vector<double> resampled_rows(const EmpiricalMeasure& m, std::size_t target,
                                   std::uint64_t seed) {
  std::vector<double> rows(target * m.dim());
  if (m.size() == target) {
    for (std::size_t i = 0; i < target; ++i) {
      const auto s = m.sample(i);
      std::copy(s.begin(), s.end(), rows.begin() + i * m.dim());
    }
    return rows;
  }
  NormalStream stream(seed, 0x7e5a);
  for (std::size_t i = 0; i < target; ++i) {
    const auto pick = static_cast<std::size_t>(stream.uniform() *
                                               static_cast<double>(m.size()));
    const auto s = m.sample(std::min(pick, m.size() - 1));
    std::copy(s.begin(), s.end(), rows.begin() + i * m.dim());
  }
  return rows;
}

void check_pair(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.size() == 0 || nu.size() == 0)
    throw std::invalid_argument("wasserstein: empty measure");
  if (mu.dim() != nu.dim())
    throw std::invalid_argument("wasserstein: dimension mismatch");
}

double sorted_coupling_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                            std::uint64_t seed, int power) {
  check_pair(mu, nu);
  const std::size_t n = std::max(mu.size(), nu.size());
  std::vector<double> a = resampled_rows(mu, n, seed);
  std::vector<double> b = resampled_rows(nu, n, seed + 1);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(a[i] - b[i]);
    acc += (power == 1) ? d : d * d;
  }
  acc /= static_cast<double>(n);
  return (power == 1) ? acc : std::sqrt(acc);
}

// Dense shortest-augmenting-path assignment (Hungarian with potentials),
// O(n^3); returns the mean matched cost.
double assignment_mean_cost(const std::vector<double>& cost, std::size_t n) {
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, kInf);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(p[j] - 1) * n + (j - 1)];
  return total / static_cast<double>(n);
}

std::vector<double> cost_matrix(const std::vector<double>& a,
                                const std::vector<double>& b, std::size_t n,
                                std::size_t dim, double* max_cost) {
  std::vector<double> cost(n * n);
  double cmax = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = euclid({a.data() + i * dim, dim}, {b.data() + j * dim, dim});
      cost[i * n + j] = d;
      cmax = std::max(cmax, d);
    }
  if (max_cost) *max_cost = cmax;
  return cost;
}

// Log-domain Sinkhorn with eta annealing; the returned value is the cost of
// a rounded feasible plan and `gap` certifies value - W1 <= gap via the
// feasible dual (u, v) with v_j = min_i (C_ij - u_i).
double entropic_w1(const std::vector<double>& cost, std::size_t n, double target_gap,
                   double* achieved_gap) {
  const double inv_n = 1.0 / static_cast<double>(n);
  const double log_n = std::log(static_cast<double>(n));
  double cmax = 0.0;
  for (double c : cost) cmax = std::max(cmax, c);

  std::vector<double> f(n, 0.0), g(n, 0.0), row_ls(n), col_ls(n);
  std::vector<double> plan(n * n);
  double best_ub = kInf;
  double best_gap = kInf;

  double eta = std::max(cmax / 8.0, 1e-12);
  for (int stage = 0; stage < 60 && eta > 1e-14 * std::max(cmax, 1.0); ++stage) {
    // Plan convention P_ij = exp((f_i + g_j - C_ij)/eta); the 1/n marginals
    // live inside the potentials (the -eta log n terms below).
    for (int sweep = 0; sweep < 200; ++sweep) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double m = -kInf;
        for (std::size_t j = 0; j < n; ++j)
          m = std::max(m, (g[j] - cost[i * n + j]) / eta);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          acc += std::exp((g[j] - cost[i * n + j]) / eta - m);
        f[i] = -eta * (m + std::log(acc)) - eta * log_n;
      }
      std::vector<double> new_g(n);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(n); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double m = -kInf;
        for (std::size_t i = 0; i < n; ++i)
          m = std::max(m, (f[i] - cost[i * n + j]) / eta);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          acc += std::exp((f[i] - cost[i * n + j]) / eta - m);
        new_g[j] = -eta * (m + std::log(acc)) - eta * log_n;
      }
      double marginal_err = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        marginal_err = std::max(marginal_err, std::abs(new_g[j] - g[j]));
        g[j] = new_g[j];
      }
      if (marginal_err < 1e-3 * eta) break;
    }

    // plan, row/col sums, rounding to the transport polytope
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        plan[i * n + j] = std::exp((f[i] + g[j] - cost[i * n + j]) / eta);
    std::fill(row_ls.begin(), row_ls.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) row_ls[i] += plan[i * n + j];
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = (row_ls[i] > inv_n) ? inv_n / row_ls[i] : 1.0;
      for (std::size_t j = 0; j < n; ++j) plan[i * n + j] *= scale;
    }
    std::fill(col_ls.begin(), col_ls.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) col_ls[j] += plan[i * n + j];
    for (std::size_t j = 0; j < n; ++j) {
      const double scale = (col_ls[j] > inv_n) ? inv_n / col_ls[j] : 1.0;
      if (scale < 1.0)
        for (std::size_t i = 0; i < n; ++i) plan[i * n + j] *= scale;
    }
    std::vector<double> row_def(n, 0.0), col_def(n, 0.0);
    double deficiency = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double rs = 0.0;
      for (std::size_t j = 0; j < n; ++j) rs += plan[i * n + j];
      row_def[i] = inv_n - rs;
      deficiency += row_def[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      double cs = 0.0;
      for (std::size_t i = 0; i < n; ++i) cs += plan[i * n + j];
      col_def[j] = inv_n - cs;
    }
    double ub = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double fill =
            (deficiency > 0.0) ? row_def[i] * col_def[j] / deficiency : 0.0;
        ub += (plan[i * n + j] + fill) * cost[i * n + j];
      }

    // feasible dual lower bound
    double lb = 0.0;
    for (std::size_t i = 0; i < n; ++i) lb += f[i];
    for (std::size_t j = 0; j < n; ++j) {
      double vj = kInf;
      for (std::size_t i = 0; i < n; ++i)
        vj = std::min(vj, cost[i * n + j] - f[i]);
      lb += vj;
    }
    lb *= inv_n;

    if (ub < best_ub) best_ub = ub;
    best_gap = std::min(best_gap, std::max(0.0, best_ub - lb));
    if (best_gap <= target_gap) break;
    eta *= 0.5;
  }
  if (achieved_gap) *achieved_gap = best_gap;
  return best_ub;
}

}  // namespace

EmpiricalMeasure EmpiricalMeasure::own(std::vector<double> samples,
                                       std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("EmpiricalMeasure: dim must be >= 1");
  if (samples.empty() || samples.size() % dim != 0)
    throw std::invalid_argument("EmpiricalMeasure: need N >= 1 complete samples");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
  EmpiricalMeasure m;
  m.storage_ = std::make_shared<const std::vector<double>>(std::move(samples));
  m.base_ = m.storage_->data();
  m.count_ = m.storage_->size() / dim;
  m.dim_ = dim;
  m.stride_ = dim;
  return m;
}

EmpiricalMeasure EmpiricalMeasure::view(const double* base, std::size_t count,
                                        std::size_t dim, std::size_t stride) {
  if (count == 0 || dim == 0 || stride < dim)
    throw std::invalid_argument("EmpiricalMeasure: bad view shape");
  EmpiricalMeasure m;
  m.base_ = base;
  m.count_ = count;
  m.dim_ = dim;
  m.stride_ = stride;
  return m;
}

double wasserstein1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::uint64_t resample_seed) {
  if (mu.dim() != 1 || nu.dim() != 1)
    return wasserstein1_nd(mu, nu, resample_seed).value;
  return sorted_coupling_cost(mu, nu, resample_seed, 1);
}

double wasserstein2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::uint64_t resample_seed) {
  if (mu.dim() != 1 || nu.dim() != 1)
    throw std::invalid_argument("wasserstein2_1d: one-dimensional clouds only");
  return sorted_coupling_cost(mu, nu, resample_seed, 2);
}

double wasserstein1_assignment(const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& nu,
                               std::uint64_t resample_seed) {
  check_pair(mu, nu);
  const std::size_t n = std::max(mu.size(), nu.size());
  const std::size_t dim = mu.dim();
  const auto a = resampled_rows(mu, n, resample_seed);
  const auto b = resampled_rows(nu, n, resample_seed + 1);
  const auto cost = cost_matrix(a, b, n, dim, nullptr);
  return assignment_mean_cost(cost, n);
}

W1Result wasserstein1_nd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         std::uint64_t resample_seed) {
  check_pair(mu, nu);
  const std::size_t n = std::max(mu.size(), nu.size());
  const std::size_t dim = mu.dim();
  const auto a = resampled_rows(mu, n, resample_seed);
  const auto b = resampled_rows(nu, n, resample_seed + 1);
  double cmax = 0.0;
  const auto cost = cost_matrix(a, b, n, dim, &cmax);

  W1Result result;
  if (n <= kExactAssignmentCap) {
    result.value = assignment_mean_cost(cost, n);
    result.exact = true;
    return result;
  }
  const double target = 1e-3 * cmax;
  double gap = 0.0;
  result.value = entropic_w1(cost, n, target, &gap);
  result.exact = false;
  result.tolerance = gap;
  return result;
}

W1Result wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::uint64_t resample_seed) {
  if (mu.dim() == 1 && nu.dim() == 1) {
    W1Result r;
    r.value = wasserstein1_1d(mu, nu, resample_seed);
    r.exact = true;
    return r;
  }
  return wasserstein1_nd(mu, nu, resample_seed);
}

MeasureFunctional mean_functional(std::size_t dim) {
  MeasureFunctional f;
  f.name = "mean";
  f.in_dim = dim;
  f.out_dim = dim;
  f.lipschitz = 1.0;
  f.apply = [](std::span<const double> x, std::span<double> out) {
    std::copy(x.begin(), x.end(), out.begin());
  };
  return f;
}

MeasureFunctional tanh_functional(std::size_t dim) {
  MeasureFunctional f;
  f.name = "tanh";
  f.in_dim = dim;
  f.out_dim = dim;
  f.lipschitz = 1.0;
  f.apply = [](std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < x.size(); ++c) out[c] = std::tanh(x[c]);
  };
  return f;
}

MeasureFunctional mean_tanh_functional(std::size_t dim) {
  MeasureFunctional f;
  f.name = "mean_tanh";
  f.in_dim = dim;
  f.out_dim = 2 * dim;
  f.lipschitz = std::sqrt(2.0);
  f.apply = [dim](std::span<const double> x, std::span<double> out) {
    for (std::size_t c = 0; c < dim; ++c) {
      out[c] = x[c];
      out[dim + c] = std::tanh(x[c]);
    }
  };
  return f;
}

MeasureFunctional functional_preset(const std::string& name, std::size_t dim) {
  if (name == "mean") return mean_functional(dim);
  if (name == "tanh") return tanh_functional(dim);
  if (name == "mean_tanh") return mean_tanh_functional(dim);
  throw std::invalid_argument("unknown measure functional preset '" + name + "'");
}

std::vector<double> apply_functional(const MeasureFunctional& f,
                                     const EmpiricalMeasure& mu) {
  if (mu.dim() != f.in_dim)
    throw std::invalid_argument("apply_functional: dimension mismatch");
  std::vector<double> acc(f.out_dim, 0.0), slot(f.out_dim);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    f.apply(mu.sample(i), slot);
    for (std::size_t c = 0; c < f.out_dim; ++c) acc[c] += slot[c];
  }
  const double inv = 1.0 / static_cast<double>(mu.size());
  for (double& v : acc) {
    v *= inv;
    if (!std::isfinite(v))
      throw EvaluationError("apply_functional: non-finite value for '" + f.name + "'");
  }
  return acc;
}

void write_measure_csv(const std::filesystem::path& file,
                       const EmpiricalMeasure& mu) {
  std::vector<std::string> header;
  for (std::size_t c = 0; c < mu.dim(); ++c)
    header.push_back("x_" + std::to_string(c + 1));
  io::CsvWriter csv(file, header);
  for (std::size_t i = 0; i < mu.size(); ++i) csv.row(mu.sample(i));
  csv.flush();
}

double kantorovich_lower_bound(
    const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
    std::span<const std::function<double(std::span<const double>)>> tests) {
  check_pair(mu, nu);
  // verify 1-Lipschitz on sampled difference quotients over the pooled cloud
  std::vector<std::span<const double>> pool;
  for (std::size_t i = 0; i < mu.size(); ++i) pool.push_back(mu.sample(i));
  for (std::size_t i = 0; i < nu.size(); ++i) pool.push_back(nu.sample(i));
  const std::size_t stride = std::max<std::size_t>(1, pool.size() / 64);

  double best = 0.0;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    const auto& phi = tests[k];
    for (std::size_t i = 0; i < pool.size(); i += stride) {
      for (std::size_t j = i + stride; j < pool.size(); j += stride) {
        const double gap = euclid(pool[i], pool[j]);
        if (gap < 1e-12) continue;
        const double quot = std::abs(phi(pool[i]) - phi(pool[j])) / gap;
        if (quot > 1.0 + 1e-9)
          throw std::invalid_argument(
              "kantorovich_lower_bound: test function " + std::to_string(k) +
              " violates the 1-Lipschitz requirement (quotient " +
              std::to_string(quot) + ")");
      }
    }
    double mean_mu = 0.0, mean_nu = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) mean_mu += phi(mu.sample(i));
    for (std::size_t i = 0; i < nu.size(); ++i) mean_nu += phi(nu.sample(i));
    mean_mu /= static_cast<double>(mu.size());
    mean_nu /= static_cast<double>(nu.size());
    best = std::max(best, std::abs(mean_mu - mean_nu));
  }
  return best;
}

}  // namespace roughmkv
