#include "roughmkv/sewing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "roughmkv/io.hpp"
#include "roughmkv/stats.hpp"

namespace roughmkv {

double coboundary(const Germ& germ, double s, double u, double t) {
  if (!(s <= u && u <= t))
    throw std::invalid_argument("coboundary: need s <= u <= t");
  return germ.eval(s, t) - germ.eval(s, u) - germ.eval(u, t);
}

GermNorms germ_norms(const Germ& germ, double alpha, double beta,
                     std::span<const double> nodes) {
  if (nodes.size() < 16)
    throw std::invalid_argument("germ_norms: need a grid of >= 16 nodes");
  // Subsample to <= 64 nodes; the scan stays quadratic in the node count.
  std::vector<double> pts;
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / 64);
  for (std::size_t i = 0; i < nodes.size(); i += stride) pts.push_back(nodes[i]);
  if (pts.back() != nodes.back()) pts.push_back(nodes.back());

  GermNorms norms;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double s = pts[i], t = pts[j];
      const double gap = t - s;
      norms.alpha_norm =
          std::max(norms.alpha_norm, std::abs(germ.eval(s, t)) / std::pow(gap, alpha));
      const double mid = 0.5 * (s + t);
      norms.beta_norm = std::max(
          norms.beta_norm, std::abs(coboundary(germ, s, mid, t)) / std::pow(gap, beta));
      ++norms.pair_count;
    }
  }
  return norms;
}

SewingResult sew(const Germ& germ, double s, double t, int max_depth) {
  if (!(s < t)) throw std::invalid_argument("sew: need s < t");
  if (max_depth < 1 || max_depth > 16)
    throw std::invalid_argument("sew: depth must lie in [1,16]");

  SewingResult result;
  result.trace.reserve(max_depth + 1);
  for (int n = 0; n <= max_depth; ++n) {
    const std::size_t pieces = std::size_t(1) << n;
    const double width = (t - s) / static_cast<double>(pieces);
    double sum = 0.0;
    for (std::size_t i = 0; i < pieces; ++i) {
      const double a = s + static_cast<double>(i) * width;
      const double b = (i + 1 == pieces) ? t : a + width;
      sum += germ.eval(a, b);
    }
    result.trace.push_back(sum);
  }
  result.value = result.trace.back();
  result.germ_gap = std::abs(result.value - result.trace.front());

  // Successive differences and their decay rate against the mesh. The noise
  // floor grows with the summand count: level n accumulates ~2^n eps scale
  // of rounding, so differences below that tell us nothing.
  const double scale = std::max(
      1e-300, std::abs(*std::max_element(result.trace.begin(), result.trace.end(),
                                         [](double a, double b) {
                                           return std::abs(a) < std::abs(b);
                                         })));
  std::vector<double> lmesh, ldiff, diffs, floors;
  for (int n = 0; n + 1 <= max_depth; ++n) {
    const double d = std::abs(result.trace[n + 1] - result.trace[n]);
    const double floor_n =
        32.0 * std::numeric_limits<double>::epsilon() * scale * std::pow(2.0, n + 1);
    diffs.push_back(d);
    floors.push_back(floor_n);
    if (d > floor_n) {
      lmesh.push_back(std::log((t - s) / std::pow(2.0, n)));
      ldiff.push_back(std::log(d));
    }
  }

  if (lmesh.empty()) {
    // telescoping germ: every refinement already agrees
    result.observed_order = std::numeric_limits<double>::infinity();
    result.certified = true;
    return result;
  }
  if (lmesh.size() == 1) {
    result.observed_order = 0.0;
    result.certified = false;
    return result;
  }
  const LinearFit fit = linear_fit(lmesh, ldiff);
  result.observed_order = fit.slope;

  std::size_t shrinking = 0, comparisons = 0;
  for (std::size_t n = 0; n + 1 < diffs.size(); ++n) {
    if (diffs[n] <= floors[n] && diffs[n + 1] <= floors[n + 1]) continue;
    ++comparisons;
    if (diffs[n + 1] < diffs[n] || diffs[n + 1] <= floors[n + 1]) ++shrinking;
  }
  const bool geometric =
      comparisons == 0 ||
      (3 * shrinking >= 2 * comparisons &&
       diffs.back() <= std::max(floors.back(), 0.5 * diffs.front()));
  result.certified = result.observed_order > 0.05 && geometric;
  return result;
}

Germ frozen_coefficient_germ(const Coefficient& coeff, const SamplePath& flow,
                             const LocalTimeField& field) {
  if (!(flow.grid == field.tgrid))
    throw std::invalid_argument("frozen germ: flow and field time grids differ");
  if (flow.dim != field.sgrid.dim || coeff.dim() != field.sgrid.dim)
    throw std::invalid_argument("frozen germ: spatial dimension mismatch");

  const Coefficient coeff_copy = coeff;
  const SamplePath* flow_ptr = &flow;
  const LocalTimeField* field_ptr = &field;

  Germ germ;
  germ.eval = [coeff_copy, flow_ptr, field_ptr](double s, double t) {
    const SpatialGrid& grid = field_ptr->sgrid;
    const std::size_t cells = grid.cells();
    const std::size_t k = grid.dim;
    std::vector<double> increment(cells);
    field_ptr->increment(s, t, increment);
    std::vector<double> anchor(k);
    flow_ptr->interpolate(s, anchor);
    std::vector<double> arg(k), center(k);
    const double vol = grid.cell_volume();
    double acc = 0.0;
    for (std::size_t c = 0; c < cells; ++c) {
      if (increment[c] == 0.0) continue;
      grid.cell_center(c, center);
      for (std::size_t a = 0; a < k; ++a) arg[a] = anchor[a] - center[a];
      acc += coeff_copy.value(s, arg) * increment[c] * vol;
    }
    return acc;
  };
  return germ;
}

Germ drift_germ(const Coefficient& drift, const SamplePath& flow,
                const LocalTimeField& field) {
  return frozen_coefficient_germ(drift, flow, field);
}

Germ quadratic_germ(const Coefficient& diffusion_sq, const SamplePath& flow,
                    const LocalTimeField& field) {
  if (diffusion_sq.role() != CoeffRole::kDiffusionSquared)
    throw std::invalid_argument(
        "quadratic_germ: coefficient must carry the squared-diffusion role");
  return frozen_coefficient_germ(diffusion_sq, flow, field);
}

void write_sewing_trace(const std::filesystem::path& file,
                        const SewingResult& result) {
  io::CsvWriter csv(file, {"level", "sum", "delta"});
  for (std::size_t n = 0; n < result.trace.size(); ++n) {
    const double delta =
        (n + 1 < result.trace.size()) ? result.trace[n + 1] - result.trace[n] : 0.0;
    const double row[3] = {static_cast<double>(n), result.trace[n], delta};
    csv.row(row);
  }
  csv.flush();
}

}  // namespace roughmkv
