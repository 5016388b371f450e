#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "roughmkv/grid.hpp"
#include "roughmkv/parallel.hpp"

namespace roughmkv {

// Uniform box [-R, R)^k with P cells per axis; cell centers at
// -R + (j + 1/2) dx.
struct SpatialGrid {
  double radius = 1.0;
  std::size_t points = 64;  // per axis
  std::size_t dim = 1;

  SpatialGrid() = default;
  SpatialGrid(double radius_, std::size_t points_, std::size_t dim_);

  double spacing() const { return 2.0 * radius / static_cast<double>(points); }
  std::size_t cells() const;
  double cell_volume() const;
  double axis_center(std::size_t j) const {
    return -radius + (static_cast<double>(j) + 0.5) * spacing();
  }
  void cell_center(std::size_t flat, std::span<double> out) const;
  // Flat cell index of point z, or npos when z leaves the box.
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t cell_of(std::span<const double> z) const;

  // Box sized for a path: R = max|w| + 3h plus one cell of margin.
  static SpatialGrid cover(const SamplePath& path, double bandwidth,
                           std::size_t points);

  // Same margin rule with the bandwidth expressed in cells of the resulting
  // grid (h = bandwidth_cells * spacing); the fixed point is closed-form.
  static SpatialGrid cover_cells(const SamplePath& path, std::size_t points,
                                 double bandwidth_cells);
};

// Space-time grid of the occupation density L_t(x), cumulative in t.
// slice(i) integrates to t_i over the box (up to rounding).
struct LocalTimeField {
  TimeGrid tgrid;
  SpatialGrid sgrid;
  double bandwidth = 0.0;
  std::vector<double> data;  // (M+1) x cells, node-major

  std::span<const double> slice(std::size_t node) const {
    return {data.data() + node * sgrid.cells(), sgrid.cells()};
  }
  // Linear interpolation between slices; exact for the piecewise-constant
  // path convention used to build the field.
  void slice_at(double t, std::span<double> out) const;
  void increment(double s, double t, std::span<double> out) const;
};

// Histogram density of the occupation measure of [0, t]: each time node
// r < t_index contributes dt to its cell; total mass is exactly t.
std::vector<double> occupation_measure(const SamplePath& path, std::size_t t_index,
                                       const SpatialGrid& grid);

// Gaussian-kernel smoothed occupation density for every node (h = 0 means the
// raw histogram). Kernel mass is renormalised over in-box cells, so the mass
// identity holds for every bandwidth.
LocalTimeField local_time(const SamplePath& path, const SpatialGrid& grid,
                          double bandwidth,
                          Parallelism par = Parallelism::kOpenMP);

// Spectral Bessel-potential norm || (I - Laplace)^{lambda/2} g ||_{L^2} on the
// box; lambda may be negative. Exact Parseval at lambda = 0.
double sobolev_norm(std::span<const double> samples, double lambda,
                    const SpatialGrid& grid);

struct HolderEstimate {
  double exponent = 0.0;   // fitted gamma
  double constant = 0.0;   // exp(intercept)
  double r2 = 0.0;
  std::size_t pair_count = 0;
  double ceiling = 0.0;    // 1 - (lambda + k/2) * zeta
  std::vector<double> gaps;
  std::vector<double> norms;
};

// Log-log fit of ||L_t - L_s||_{H^lambda} over gaps in [8 dt, T/2]
// (40 log-spaced gaps, each taking the max over four anchors s).
HolderEstimate local_time_holder_profile(const LocalTimeField& field, double lambda,
                                         double zeta,
                                         Parallelism par = Parallelism::kOpenMP);

void write_field(const std::filesystem::path& file, const LocalTimeField& field);
LocalTimeField read_field(const std::filesystem::path& file);

}  // namespace roughmkv
