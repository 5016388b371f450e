#include "roughmkv/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "roughmkv/errors.hpp"
#include "roughmkv/fft.hpp"

namespace roughmkv {

double averaging_direct(const std::function<double(std::span<const double>)>& f,
                        const SamplePath& path, std::size_t s_index,
                        std::size_t t_index, std::span<const double> x) {
  if (s_index > t_index)
    throw std::invalid_argument("averaging_direct: need s <= t");
  if (t_index > path.grid.steps)
    throw std::invalid_argument("averaging_direct: node index out of range");
  if (x.size() != path.dim)
    throw std::invalid_argument("averaging_direct: dimension mismatch");
  const double dt = path.grid.dt();
  std::vector<double> arg(path.dim);
  double acc = 0.0;
  for (std::size_t r = s_index; r < t_index; ++r) {
    for (std::size_t c = 0; c < path.dim; ++c) arg[c] = x[c] - path.value(r, c);
    const double v = f(arg);
    if (!std::isfinite(v))
      throw EvaluationError("averaging_direct: integrand non-finite at node " +
                            std::to_string(r));
    acc += v * dt;
  }
  return acc;
}

double ConvolutionLattice::at(std::span<const double> x) const {
  const std::size_t k = grid.dim;
  if (x.size() != k) throw std::invalid_argument("lattice: dimension mismatch");
  const double dx = grid.spacing();
  const std::size_t n = grid.points;  // 2P
  // lattice point n_a at coordinate -2R + (n_a + 1) dx
  std::size_t strides[3] = {0, 0, 0};
  std::size_t stride = 1;
  for (std::size_t a = k; a-- > 0;) {
    strides[a] = stride;
    stride *= n;
  }
  std::size_t base = 0;
  double frac[3] = {0, 0, 0};
  for (std::size_t a = 0; a < k; ++a) {
    const double pos = (x[a] + grid.radius) / dx - 1.0;
    if (pos < 0.0 || pos > static_cast<double>(n - 1))
      throw std::invalid_argument("lattice: point outside the convolution box");
    const auto lo = std::min(static_cast<std::size_t>(pos), n - 2);
    frac[a] = pos - static_cast<double>(lo);
    base += strides[a] * lo;
  }
  double value = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t(1) << k); ++mask) {
    double weight = 1.0;
    std::size_t flat = base;
    for (std::size_t a = 0; a < k; ++a) {
      const bool hi = (mask >> a) & 1;
      weight *= hi ? frac[a] : (1.0 - frac[a]);
      if (hi) flat += strides[a];
    }
    value += weight * values[flat];
  }
  return value;
}

ConvolutionLattice convolve_increment(std::span<const double> f_samples,
                                      const LocalTimeField& field,
                                      std::size_t s_index, std::size_t t_index) {
  const SpatialGrid& grid = field.sgrid;
  const std::size_t cells = grid.cells();
  if (f_samples.size() != cells)
    throw std::invalid_argument(
        "convolve_increment: f sample count does not match the field grid");
  if (s_index > t_index || t_index > field.tgrid.steps)
    throw std::invalid_argument("convolve_increment: bad node indices");

  const std::size_t k = grid.dim;
  const std::size_t p = grid.points;
  const std::size_t n = 2 * p;
  std::size_t padded = 1;
  for (std::size_t a = 0; a < k; ++a) padded *= n;

  std::vector<std::size_t> dims(k, n);
  std::vector<std::complex<double>> fa(padded, 0.0), da(padded, 0.0);

  // Embed P^k arrays into the low corner of the 2P^k boxes.
  const auto sa = field.slice(s_index);
  const auto sb = field.slice(t_index);
  std::vector<std::size_t> idx(k, 0);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    std::size_t rem = flat, pos = 0;
    for (std::size_t a = k; a-- > 0;) {
      idx[a] = rem % p;
      rem /= p;
    }
    for (std::size_t a = 0; a < k; ++a) pos = pos * n + idx[a];
    fa[pos] = f_samples[flat];
    da[pos] = sb[flat] - sa[flat];
  }

  fft::forward(dims, fa);
  fft::forward(dims, da);
  const double scale = grid.cell_volume() / static_cast<double>(padded);
  for (std::size_t i = 0; i < padded; ++i) fa[i] *= da[i] * scale;
  fft::inverse_unnormalised(dims, fa);

  ConvolutionLattice lattice;
  lattice.grid = SpatialGrid(2.0 * grid.radius, n, k);
  lattice.values.resize(padded);
  for (std::size_t i = 0; i < padded; ++i) lattice.values[i] = fa[i].real();
  return lattice;
}

double averaging_via_local_time(std::span<const double> f_samples,
                                const LocalTimeField& field, std::size_t s_index,
                                std::size_t t_index, std::span<const double> x) {
  if (s_index == t_index) return 0.0;
  const ConvolutionLattice lattice =
      convolve_increment(f_samples, field, s_index, t_index);
  return lattice.at(x);
}

double sup_bessel_norm(std::span<const double> samples, double order,
                       const SpatialGrid& grid) {
  const std::size_t cells = grid.cells();
  if (samples.size() != cells)
    throw std::invalid_argument("sup_bessel_norm: sample count mismatch");
  std::vector<std::complex<double>> spec(samples.begin(), samples.end());
  std::vector<std::size_t> dims(grid.dim, grid.points);
  fft::forward(dims, spec);
  const double dxi = M_PI / grid.radius;
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double xi2 = 0.0;
    std::size_t rem = flat;
    for (std::size_t a = grid.dim; a-- > 0;) {
      const double f = fft::bin_frequency(rem % grid.points, grid.points) * dxi;
      xi2 += f * f;
      rem /= grid.points;
    }
    spec[flat] *= std::pow(1.0 + xi2, order / 2.0);
  }
  fft::inverse_unnormalised(dims, spec);
  double sup = 0.0;
  const double inv = 1.0 / static_cast<double>(cells);
  for (std::size_t i = 0; i < cells; ++i)
    sup = std::max(sup, std::abs(spec[i].real() * inv));
  return sup;
}

YoungCheckReport young_convolution_check(std::span<const double> g_samples,
                                         const LocalTimeField& field, double alpha,
                                         double lambda,
                                         const HolderEstimate& field_reg) {
  const TimeGrid& tg = field.tgrid;
  const std::size_t steps = tg.steps;
  if (steps < 32)
    throw std::invalid_argument("young check: need at least 32 time steps");

  YoungCheckReport report;
  report.g_norm = sobolev_norm(g_samples, alpha, field.sgrid);

  const double dt = tg.dt();
  const double lo = 8.0 * dt, hi = tg.horizon / 2.0;
  constexpr std::size_t kGaps = 12;
  const std::size_t anchors[2] = {0, steps / 4};

  double worst = 0.0;
  double min_pos = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < kGaps; ++g) {
    const double frac = static_cast<double>(g) / (kGaps - 1);
    auto gap = static_cast<std::size_t>(std::round(lo * std::pow(hi / lo, frac) / dt));
    gap = std::clamp<std::size_t>(gap, 8, steps / 2);
    for (std::size_t s : anchors) {
      const std::size_t t = s + gap;
      if (t > steps) continue;
      const ConvolutionLattice lattice = convolve_increment(g_samples, field, s, t);
      YoungCheckRow row;
      row.s = tg.node(s);
      row.t = tg.node(t);
      row.lhs = sup_bessel_norm(lattice.values, alpha + lambda, lattice.grid);
      row.rhs = report.g_norm * field_reg.constant *
                std::pow(row.t - row.s, field_reg.exponent);
      row.ratio = (row.rhs > 0.0) ? row.lhs / row.rhs : 0.0;
      report.rows.push_back(row);
      worst = std::max(worst, row.ratio);
      if (row.ratio > 0.0) min_pos = std::min(min_pos, row.ratio);
    }
  }
  report.worst_ratio = worst;
  report.stability = (worst > 0.0 && std::isfinite(min_pos)) ? worst / min_pos : 0.0;
  return report;
}

}  // namespace roughmkv
