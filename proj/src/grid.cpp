#include "roughmkv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "roughmkv/io.hpp"

namespace roughmkv {

void SamplePath::interpolate(double t, std::span<double> out) const {
  if (out.size() != dim) throw std::invalid_argument("interpolate: bad output size");
  const double dt = grid.dt();
  double pos = t / dt;
  pos = std::clamp(pos, 0.0, static_cast<double>(grid.steps));
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, grid.steps);
  const double frac = pos - static_cast<double>(lo);
  for (std::size_t c = 0; c < dim; ++c)
    out[c] = (1.0 - frac) * value(lo, c) + frac * value(hi, c);
}

double SamplePath::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void write_path_csv(const std::filesystem::path& file, const SamplePath& path) {
  std::vector<std::string> header;
  header.emplace_back("t");
  for (std::size_t c = 0; c < path.dim; ++c)
    header.push_back("w_" + std::to_string(c + 1));
  io::CsvWriter csv(file, header);
  std::vector<double> row(path.dim + 1);
  for (std::size_t i = 0; i < path.grid.nodes(); ++i) {
    row[0] = path.grid.node(i);
    for (std::size_t c = 0; c < path.dim; ++c) row[c + 1] = path.value(i, c);
    csv.row(row);
  }
  csv.flush();
}

SamplePath read_path_csv(const std::filesystem::path& file) {
  const auto rows = io::read_csv(file);
  if (rows.size() < 3 || rows[0].size() < 2)
    throw std::runtime_error("path csv too small: " + file.string());
  const std::size_t dim = rows[0].size() - 1;
  const std::size_t steps = rows.size() - 2;
  const double horizon = std::strtod(rows.back()[0].c_str(), nullptr);
  SamplePath path(TimeGrid(horizon, steps), dim);
  for (std::size_t i = 0; i < steps + 1; ++i) {
    const auto& r = rows[i + 1];
    if (r.size() != dim + 1)
      throw std::runtime_error("ragged path csv row in " + file.string());
    for (std::size_t c = 0; c < dim; ++c)
      path.value(i, c) = std::strtod(r[c + 1].c_str(), nullptr);
  }
  return path;
}

}  // namespace roughmkv
