#include "roughmkv/local_time.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <sstream>

#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/fft.hpp"
#include "roughmkv/stats.hpp"

namespace roughmkv {

namespace {

constexpr std::size_t kMaxCells = std::size_t(1) << 26;

// Sparse kernel stamp of one path visit: cell indices and weights summing to
// dt / cell_volume * cell_volume = dt in mass.
struct Stamp {
  std::vector<std::size_t> cells;
  std::vector<double> weights;
};

Stamp make_stamp(const SpatialGrid& grid, std::span<const double> point,
                 double bandwidth, double dt, std::size_t node) {
  const std::size_t center = grid.cell_of(point);
  if (center == SpatialGrid::npos)
    throw CoverageError("path leaves the spatial box at node " + std::to_string(node),
                        node);
  Stamp stamp;
  const double dx = grid.spacing();
  if (bandwidth <= 0.0) {
    stamp.cells.push_back(center);
    stamp.weights.push_back(dt / grid.cell_volume());
    return stamp;
  }
  // Per-axis windows out to 4h, clamped to the box.
  const auto reach = static_cast<std::size_t>(std::ceil(4.0 * bandwidth / dx));
  std::vector<std::size_t> lo(grid.dim), hi(grid.dim);
  for (std::size_t a = 0; a < grid.dim; ++a) {
    const double pos = (point[a] + grid.radius) / dx - 0.5;
    const auto c = static_cast<std::ptrdiff_t>(std::llround(pos));
    const std::ptrdiff_t p = static_cast<std::ptrdiff_t>(grid.points);
    lo[a] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c - reach, 0, p - 1));
    hi[a] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c + reach, 0, p - 1));
  }
  std::vector<std::size_t> idx(lo);
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  double total = 0.0;
  while (true) {
    double d2 = 0.0;
    std::size_t flat = 0;
    for (std::size_t a = 0; a < grid.dim; ++a) {
      const double d = grid.axis_center(idx[a]) - point[a];
      d2 += d * d;
      flat = flat * grid.points + idx[a];
    }
    const double w = std::exp(-d2 * inv2h2);
    stamp.cells.push_back(flat);
    stamp.weights.push_back(w);
    total += w;
    std::size_t a = grid.dim;
    while (a > 0) {
      --a;
      if (idx[a] < hi[a]) {
        ++idx[a];
        break;
      }
      idx[a] = lo[a];
      if (a == 0) goto done;
    }
  }
done:
  const double scale = dt / (total * grid.cell_volume());
  for (double& w : stamp.weights) w *= scale;
  return stamp;
}

}  // namespace

SpatialGrid::SpatialGrid(double radius_, std::size_t points_, std::size_t dim_)
    : radius(radius_), points(points_), dim(dim_) {
  if (radius <= 0.0) throw std::invalid_argument("SpatialGrid: radius must be > 0");
  if (points == 0 || dim == 0)
    throw std::invalid_argument("SpatialGrid: points and dim must be >= 1");
  if (cells() > kMaxCells)
    throw std::invalid_argument("SpatialGrid: cell count too large");
}

std::size_t SpatialGrid::cells() const {
  std::size_t n = 1;
  for (std::size_t a = 0; a < dim; ++a) n *= points;
  return n;
}

double SpatialGrid::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dim; ++a) v *= spacing();
  return v;
}

void SpatialGrid::cell_center(std::size_t flat, std::span<double> out) const {
  for (std::size_t a = dim; a-- > 0;) {
    out[a] = axis_center(flat % points);
    flat /= points;
  }
}

std::size_t SpatialGrid::cell_of(std::span<const double> z) const {
  if (z.size() != dim) throw std::invalid_argument("cell_of: dimension mismatch");
  std::size_t flat = 0;
  const double dx = spacing();
  for (std::size_t a = 0; a < dim; ++a) {
    const double pos = (z[a] + radius) / dx;
    if (pos < 0.0 || pos >= static_cast<double>(points)) return npos;
    flat = flat * points + static_cast<std::size_t>(pos);
  }
  return flat;
}

SpatialGrid SpatialGrid::cover(const SamplePath& path, double bandwidth,
                               std::size_t points) {
  const double extent = path.max_abs() + 3.0 * bandwidth;
  const double margin = 2.0 * extent / static_cast<double>(points);
  return SpatialGrid(extent + std::max(margin, 1e-9), points, path.dim);
}

SpatialGrid SpatialGrid::cover_cells(const SamplePath& path, std::size_t points,
                                     double bandwidth_cells) {
  // R = max|w| + (3c + 1) * (2R/P)  =>  R = max|w| / (1 - (6c + 2)/P)
  const double p = static_cast<double>(points);
  const double denom = 1.0 - (6.0 * bandwidth_cells + 2.0) / p;
  if (denom <= 0.0)
    throw std::invalid_argument("cover_cells: grid too coarse for this bandwidth");
  const double extent = std::max(path.max_abs(), 1e-9);
  return SpatialGrid(extent / denom * (1.0 + 1e-12), points, path.dim);
}

void LocalTimeField::slice_at(double t, std::span<double> out) const {
  const std::size_t cells = sgrid.cells();
  if (out.size() != cells) throw std::invalid_argument("slice_at: bad output size");
  double pos = t / tgrid.dt();
  pos = std::clamp(pos, 0.0, static_cast<double>(tgrid.steps));
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, tgrid.steps);
  const double frac = pos - static_cast<double>(lo);
  const auto a = slice(lo);
  const auto b = slice(hi);
  for (std::size_t c = 0; c < cells; ++c)
    out[c] = (1.0 - frac) * a[c] + frac * b[c];
}

void LocalTimeField::increment(double s, double t, std::span<double> out) const {
  std::vector<double> low(sgrid.cells());
  slice_at(s, low);
  slice_at(t, out);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] -= low[c];
}

std::vector<double> occupation_measure(const SamplePath& path, std::size_t t_index,
                                       const SpatialGrid& grid) {
  if (path.dim != grid.dim)
    throw std::invalid_argument("occupation_measure: dimension mismatch");
  if (t_index > path.grid.steps)
    throw std::invalid_argument("occupation_measure: node index out of range");
  std::vector<double> density(grid.cells(), 0.0);
  const double dt = path.grid.dt();
  const double w = dt / grid.cell_volume();
  for (std::size_t r = 0; r < t_index; ++r) {
    const std::size_t cell = grid.cell_of(path.at_node(r));
    if (cell == SpatialGrid::npos)
      throw CoverageError("path leaves the spatial box at node " + std::to_string(r),
                          r);
    density[cell] += w;
  }
  return density;
}

LocalTimeField local_time(const SamplePath& path, const SpatialGrid& grid,
                          double bandwidth, Parallelism par) {
  if (bandwidth < 0.0) throw std::invalid_argument("local_time: bandwidth must be >= 0");
  if (path.dim != grid.dim)
    throw std::invalid_argument("local_time: dimension mismatch");
  if (bandwidth > 0.0 && path.max_abs() + 3.0 * bandwidth > grid.radius) {
    std::size_t worst = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < path.grid.nodes(); ++i)
      for (std::size_t c = 0; c < path.dim; ++c)
        if (std::abs(path.value(i, c)) > best) {
          best = std::abs(path.value(i, c));
          worst = i;
        }
    throw CoverageError("kernel margin 3h exceeds the box near node " +
                        std::to_string(worst),
                        worst);
  }

  const std::size_t steps = path.grid.steps;
  const std::size_t cells = grid.cells();
  const double dt = path.grid.dt();

  std::vector<Stamp> stamps(steps);
  for (std::size_t r = 0; r < steps; ++r)
    stamps[r] = make_stamp(grid, path.at_node(r), bandwidth, dt, r);

  LocalTimeField field;
  field.tgrid = path.grid;
  field.sgrid = grid;
  field.bandwidth = bandwidth;
  field.data.assign((steps + 1) * cells, 0.0);

  // Cumulative sum over time, independently per cell range; ranges write
  // disjoint slots so the parallel result is bit-identical to the serial one.
  auto run_range = [&](std::size_t c0, std::size_t c1) {
    for (std::size_t i = 0; i < steps; ++i) {
      const double* prev = field.data.data() + i * cells;
      double* next = field.data.data() + (i + 1) * cells;
      std::copy(prev + c0, prev + c1, next + c0);
      const Stamp& st = stamps[i];
      for (std::size_t e = 0; e < st.cells.size(); ++e) {
        const std::size_t c = st.cells[e];
        if (c >= c0 && c < c1) next[c] += st.weights[e];
      }
    }
  };

  if (par == Parallelism::kOpenMP && cells >= 64) {
#pragma omp parallel
    {
      const int nt = omp_get_num_threads();
      const int id = omp_get_thread_num();
      const std::size_t chunk = (cells + nt - 1) / nt;
      const std::size_t c0 = std::min(cells, chunk * static_cast<std::size_t>(id));
      const std::size_t c1 = std::min(cells, c0 + chunk);
      if (c0 < c1) run_range(c0, c1);
    }
  } else {
    run_range(0, cells);
  }
  return field;
}

double sobolev_norm(std::span<const double> samples, double lambda,
                    const SpatialGrid& grid) {
  const std::size_t cells = grid.cells();
  if (samples.size() != cells)
    throw std::invalid_argument("sobolev_norm: sample count must match the grid");
  std::vector<std::complex<double>> spectrum(samples.begin(), samples.end());
  std::vector<std::size_t> dims(grid.dim, grid.points);
  fft::forward(dims, spectrum);

  const double dxi = M_PI / grid.radius;  // frequency spacing of the box
  double norm2 = 0.0;
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double xi2 = 0.0;
    std::size_t rem = flat;
    for (std::size_t a = grid.dim; a-- > 0;) {
      const double f = fft::bin_frequency(rem % grid.points, grid.points) * dxi;
      xi2 += f * f;
      rem /= grid.points;
    }
    norm2 += std::pow(1.0 + xi2, lambda) * std::norm(spectrum[flat]);
  }
  double scale = 1.0;
  for (std::size_t a = 0; a < grid.dim; ++a)
    scale *= grid.spacing() / static_cast<double>(grid.points);
  return std::sqrt(norm2 * scale);
}

HolderEstimate local_time_holder_profile(const LocalTimeField& field, double lambda,
                                         double zeta, Parallelism par) {
  const TimeGrid& tg = field.tgrid;
  const std::size_t steps = tg.steps;
  if (steps < 32)
    throw std::invalid_argument("holder profile: need at least 32 time steps");
  const double dt = tg.dt();
  const double lo = 8.0 * dt;
  const double hi = tg.horizon / 2.0;
  if (lo >= hi)
    throw std::invalid_argument("holder profile: gap window [8dt, T/2] is empty");

  constexpr std::size_t kGaps = 40;
  const std::size_t anchors[4] = {0, steps / 8, steps / 4, (3 * steps) / 8};

  std::vector<std::size_t> gap_nodes;
  std::size_t prev = 0;
  for (std::size_t g = 0; g < kGaps; ++g) {
    const double frac = static_cast<double>(g) / (kGaps - 1);
    const double gap = lo * std::pow(hi / lo, frac);
    auto nodes = static_cast<std::size_t>(std::round(gap / dt));
    nodes = std::clamp<std::size_t>(nodes, 8, steps / 2);
    if (nodes != prev) gap_nodes.push_back(nodes);
    prev = nodes;
  }
  if (gap_nodes.size() < 20)
    throw std::invalid_argument("holder profile: fewer than 20 usable gaps");

  const std::size_t cells = field.sgrid.cells();
  std::vector<double> worst(gap_nodes.size(), 0.0);

  auto eval_gap = [&](std::size_t g) {
    std::vector<double> diff(cells);
    double best = 0.0;
    for (std::size_t s : anchors) {
      const std::size_t t = s + gap_nodes[g];
      if (t > steps) continue;
      const auto a = field.slice(s);
      const auto b = field.slice(t);
      for (std::size_t c = 0; c < cells; ++c) diff[c] = b[c] - a[c];
      best = std::max(best, sobolev_norm(diff, lambda, field.sgrid));
    }
    worst[g] = best;
  };

  if (par == Parallelism::kOpenMP) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t g = 0; g < static_cast<std::ptrdiff_t>(gap_nodes.size()); ++g)
      eval_gap(static_cast<std::size_t>(g));
  } else {
    for (std::size_t g = 0; g < gap_nodes.size(); ++g) eval_gap(g);
  }

  HolderEstimate est;
  std::vector<double> lx, ly;
  for (std::size_t g = 0; g < gap_nodes.size(); ++g) {
    if (!(worst[g] > 0.0)) continue;
    const double gap = static_cast<double>(gap_nodes[g]) * dt;
    est.gaps.push_back(gap);
    est.norms.push_back(worst[g]);
    lx.push_back(std::log(gap));
    ly.push_back(std::log(worst[g]));
  }
  if (lx.size() < 20)
    throw std::invalid_argument("holder profile: fewer than 20 valid pairs");
  const LinearFit fit = linear_fit(lx, ly);
  est.exponent = fit.slope;
  est.constant = std::exp(fit.intercept);
  est.r2 = fit.r2;
  est.pair_count = lx.size();
  est.ceiling = 1.0 - (lambda + static_cast<double>(field.sgrid.dim) / 2.0) * zeta;
  return est;
}

void write_field(const std::filesystem::path& file, const LocalTimeField& field) {
  std::ostringstream header;
  header << "ltf v1 dim=" << field.sgrid.dim << " points=" << field.sgrid.points
         << " radius=" << io::format_double(field.sgrid.radius)
         << " bandwidth=" << io::format_double(field.bandwidth)
         << " horizon=" << io::format_double(field.tgrid.horizon)
         << " steps=" << field.tgrid.steps;
  io::write_tensor(file, header.str(), field.data);
}

LocalTimeField read_field(const std::filesystem::path& file) {
  const io::Tensor t = io::read_tensor(file);
  LocalTimeField field;
  std::size_t dim = 0, points = 0, steps = 0;
  double radius = 0, bandwidth = 0, horizon = 0;
  std::istringstream ss(t.header);
  std::string tag, version, kv;
  ss >> tag >> version;
  if (tag != "ltf") throw std::runtime_error("not a field tensor: " + file.string());
  while (ss >> kv) {
    const auto eq = kv.find('=');
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "dim") dim = std::stoul(val);
    else if (key == "points") points = std::stoul(val);
    else if (key == "radius") radius = std::stod(val);
    else if (key == "bandwidth") bandwidth = std::stod(val);
    else if (key == "horizon") horizon = std::stod(val);
    else if (key == "steps") steps = std::stoul(val);
  }
  field.sgrid = SpatialGrid(radius, points, dim);
  field.tgrid = TimeGrid(horizon, steps);
  field.bandwidth = bandwidth;
  if (t.data.size() != (steps + 1) * field.sgrid.cells())
    throw std::runtime_error("field tensor payload size mismatch: " + file.string());
  field.data = t.data;
  return field;
}

}  // namespace roughmkv
