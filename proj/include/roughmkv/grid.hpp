#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace roughmkv {

// Uniform grid t_i = i*T/M on [0,T].
struct TimeGrid {
  double horizon = 1.0;
  std::size_t steps = 0;

  TimeGrid() = default;
  TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
    if (horizon <= 0.0) throw std::invalid_argument("TimeGrid: horizon must be > 0");
    if (steps == 0) throw std::invalid_argument("TimeGrid: steps must be >= 1");
  }

  double dt() const { return horizon / static_cast<double>(steps); }
  std::size_t nodes() const { return steps + 1; }
  double node(std::size_t i) const { return static_cast<double>(i) * dt(); }

  bool operator==(const TimeGrid& o) const {
    return horizon == o.horizon && steps == o.steps;
  }
};

// One realisation of a vector-valued process on a TimeGrid.
// values is node-major: values[i*dim + c].
struct SamplePath {
  TimeGrid grid;
  std::size_t dim = 1;
  std::vector<double> values;

  SamplePath() = default;
  SamplePath(TimeGrid g, std::size_t d)
      : grid(g), dim(d), values(g.nodes() * d, 0.0) {
    if (dim == 0) throw std::invalid_argument("SamplePath: dim must be >= 1");
  }

  double value(std::size_t node, std::size_t comp = 0) const {
    return values[node * dim + comp];
  }
  double& value(std::size_t node, std::size_t comp = 0) {
    return values[node * dim + comp];
  }
  std::span<const double> at_node(std::size_t node) const {
    return {values.data() + node * dim, dim};
  }

  // Linear time interpolation of each component at real time t in [0,T].
  void interpolate(double t, std::span<double> out) const;

  // Sup of |value| over all nodes and components.
  double max_abs() const;
};

// Columnar text format: header "t,w_1,...,w_k", 17 significant digits.
void write_path_csv(const std::filesystem::path& file, const SamplePath& path);
SamplePath read_path_csv(const std::filesystem::path& file);

}  // namespace roughmkv
