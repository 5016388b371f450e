#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include <filesystem>

#include "roughmkv/averaging.hpp"
#include "roughmkv/io.hpp"
#include "roughmkv/coefficient.hpp"
#include "roughmkv/errors.hpp"
#include "roughmkv/fbm.hpp"
#include "roughmkv/stats.hpp"

using namespace roughmkv;

namespace {

SamplePath brownian(std::size_t steps, std::uint64_t seed) {
  FbmSpec spec;
  spec.hurst = 0.5;
  spec.grid = TimeGrid(1.0, steps);
  spec.seed = seed;
  return sample_fbm(spec);
}

double gauss_bump(std::span<const double> z) {
  double r2 = 0.0;
  for (double v : z) r2 += v * v;
  return std::exp(-0.5 * r2);
}

}  // namespace

TEST_CASE("averaging of a constant is c (t - s) exactly") {
  const SamplePath path = brownian(256, 1);
  const std::vector<double> x{0.3};
  const double v = averaging_direct([](std::span<const double>) { return 2.5; },
                                    path, 64, 192, x);
  CHECK(v == doctest::Approx(2.5 * 0.5).epsilon(1e-14));
}

TEST_CASE("averaging along a frozen path returns f(x) (t - s)") {
  SamplePath still(TimeGrid(1.0, 128), 1);
  const std::vector<double> x{0.7};
  const double v = averaging_direct(gauss_bump, still, 0, 128, x);
  CHECK(v == doctest::Approx(gauss_bump(x)).epsilon(1e-14));
}

TEST_CASE("linear integrand against the trapezoid oracle") {
  // f(z) = z: T^w f(x) = x (t-s) - integral of w; left sums vs trapezoid
  // differ by O(dt).
  const std::size_t steps = 1024;
  const SamplePath path = brownian(steps, 7);
  const std::vector<double> x{0.2};
  const double left = averaging_direct(
      [](std::span<const double> z) { return z[0]; }, path, 0, steps, x);
  double trap = 0.0;
  const double dt = path.grid.dt();
  for (std::size_t r = 0; r < steps; ++r)
    trap += 0.5 * ((x[0] - path.value(r)) + (x[0] - path.value(r + 1))) * dt;
  CHECK(std::abs(left - trap) < 5.0 * dt);
}

TEST_CASE("linearity of the averaging operator is exact") {
  const SamplePath path = brownian(256, 3);
  const std::vector<double> x{0.1};
  auto f = gauss_bump;
  auto g = [](std::span<const double> z) { return std::cos(z[0]); };
  auto combo = [&](std::span<const double> z) { return 2.0 * f(z) - 3.0 * g(z); };
  const double lhs = averaging_direct(combo, path, 16, 240, x);
  const double rhs = 2.0 * averaging_direct(f, path, 16, 240, x) -
                     3.0 * averaging_direct(g, path, 16, 240, x);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("representation identity: direct quadrature vs local-time convolution") {
  // Eq-level identity T^w f = f * L^w; with one-cell smoothing the gap is
  // O(dt + h). Checked at 2 percent relative, M = 2^12.
  const std::size_t steps = 4096;
  const SamplePath path = brownian(steps, 11);
  // box covers the path range AND the bump's support around x, so the
  // zero-extension of the f samples costs nothing
  const SpatialGrid grid(path.max_abs() + 3.5, 1024, 1);
  const LocalTimeField field = local_time(path, grid, grid.spacing());
  const auto f_samples = [&] {
    std::vector<double> s(grid.cells());
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double z[1] = {grid.axis_center(j)};
      s[j] = gauss_bump(std::span<const double>(z, 1));
    }
    return s;
  }();
  const std::vector<double> x{0.25};
  const double direct = averaging_direct(gauss_bump, path, 0, steps, x);
  const double conv = averaging_via_local_time(f_samples, field, 0, steps, x);
  CHECK(std::abs(conv - direct) / std::abs(direct) < 0.02);
}

TEST_CASE("representation identity error decays with the grid, slope >= 0.8") {
  const std::size_t steps = 2048;
  const SamplePath path = brownian(steps, 13);
  const std::vector<double> x{0.25};
  const double direct = averaging_direct(gauss_bump, path, 0, steps, x);
  const double radius = path.max_abs() + 3.5;  // fixed across the sweep
  std::vector<double> lh, le;
  for (std::size_t p : {128u, 256u, 512u, 1024u}) {
    const SpatialGrid grid(radius, p, 1);
    const LocalTimeField field = local_time(path, grid, grid.spacing());
    std::vector<double> f_samples(grid.cells());
    for (std::size_t j = 0; j < f_samples.size(); ++j) {
      const double z[1] = {grid.axis_center(j)};
      f_samples[j] = gauss_bump(std::span<const double>(z, 1));
    }
    const double conv = averaging_via_local_time(f_samples, field, 0, steps, x);
    lh.push_back(std::log(grid.spacing()));
    le.push_back(std::log(std::abs(conv - direct) + 1e-16));
  }
  const LinearFit fit = linear_fit(lh, le);
  CHECK(fit.slope >= 0.8);
}

TEST_CASE("single-cell indicator picks out the occupation density") {
  const std::size_t steps = 512;
  const SamplePath path = brownian(steps, 5);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 128, 0.0);
  const LocalTimeField field = local_time(path, grid, 0.0);
  const std::size_t q = 70;
  std::vector<double> f_samples(grid.cells(), 0.0);
  f_samples[q] = 1.0;
  const std::size_t j = 64;
  // evaluation point c_j + c_q is exactly a lattice node
  const std::vector<double> x{grid.axis_center(j) + grid.axis_center(q)};
  const double v = averaging_via_local_time(f_samples, field, 0, steps, x);
  CHECK(v == doctest::Approx(field.slice(steps)[j] * grid.cell_volume())
                 .epsilon(1e-10));
}

TEST_CASE("empty interval gives exactly zero") {
  const SamplePath path = brownian(64, 2);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 64, 0.0);
  const LocalTimeField field = local_time(path, grid, 0.0);
  std::vector<double> f_samples(grid.cells(), 1.0);
  const std::vector<double> x{0.0};
  CHECK(averaging_via_local_time(f_samples, field, 17, 17, x) == 0.0);
}

TEST_CASE("sample count mismatch raises a shape error") {
  const SamplePath path = brownian(64, 2);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 64, 0.0);
  const LocalTimeField field = local_time(path, grid, 0.0);
  std::vector<double> bad(grid.cells() - 1, 1.0);
  const std::vector<double> x{0.0};
  CHECK_THROWS_AS(averaging_via_local_time(bad, field, 0, 64, x),
                  std::invalid_argument);
}

TEST_CASE("mollifying a constant returns the same constant") {
  const auto c = constant_coefficient(CoeffRole::kDrift, 3.75, 1);
  const auto c_eps = mollify(c, MollifierSpec{0.1});
  const std::vector<double> z{0.4};
  CHECK(c_eps.value(0.0, z) == doctest::Approx(3.75).epsilon(1e-14));
}

TEST_CASE("mollified step is one half at the origin") {
  CoefficientMeta meta;
  const Coefficient step(CoeffRole::kDrift, "step", 1, [](double) { return 1.0; },
                         [](std::span<const double> z) {
                           return z[0] > 0.0 ? 1.0 : 0.0;
                         },
                         meta);
  const auto smooth = mollify(step, MollifierSpec{0.2});
  const std::vector<double> zero{0.0};
  CHECK(std::abs(smooth.value(0.0, zero) - 0.5) < 1e-12);
}

TEST_CASE("mollification error in H^{-1} decreases monotonically") {
  CoefficientMeta meta;
  const Coefficient tent(CoeffRole::kDrift, "tent", 1, [](double) { return 1.0; },
                         [](std::span<const double> z) {
                           return std::max(0.0, 1.0 - std::abs(z[0]));
                         },
                         meta);
  const SpatialGrid grid(4.0, 512, 1);
  const auto base = tent.sample_profile(grid);
  std::vector<double> errs;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto smooth = mollify(tent, MollifierSpec{eps});
    auto diff = smooth.sample_profile(grid);
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] -= base[j];
    errs.push_back(sobolev_norm(diff, -1.0, grid));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("epsilon must be positive") {
  const auto c = constant_coefficient(CoeffRole::kDrift, 1.0, 1);
  CHECK_THROWS_AS(mollify(c, MollifierSpec{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(mollify(c, MollifierSpec{-0.1}), std::invalid_argument);
}

TEST_CASE("mollifier contraction bound from the metadata holds on the grid") {
  // |a_eps| <= ||J_eps||_L2 ||a||_L2, the display inside the well-posedness
  // lemma for the mollified system.
  const auto a = singular_kernel_coefficient(CoeffRole::kDiffusion, 0.3, 0.01);
  const auto a_eps = mollify(a, MollifierSpec{0.1});
  REQUIRE(std::isfinite(a_eps.meta().sup_bound));
  const SpatialGrid grid(2.0, 256, 1);
  const auto samples = a_eps.sample_profile(grid);
  double sup = 0.0;
  for (double v : samples) sup = std::max(sup, std::abs(v));
  CHECK(sup <= a_eps.meta().sup_bound * (1.0 + 1e-9));
}

TEST_CASE("singular kernel metadata matches the sampled L2 norm") {
  const auto a = singular_kernel_coefficient(CoeffRole::kDrift, 0.3, 1e-3);
  const SpatialGrid grid(2.0, 4096, 1);
  const MetaCheck check = verify_metadata(a, grid, 0.1);
  CHECK(check.consistent);
  const auto g = gaussian_bump_coefficient(CoeffRole::kDrift, 1.3, 0.7, 0.0, 1);
  const SpatialGrid wide(8.0, 1024, 1);
  CHECK(verify_metadata(g, wide, 0.05).consistent);
}

TEST_CASE("grid cache reproduces direct evaluation inside the box") {
  auto g = gaussian_bump_coefficient(CoeffRole::kDrift, 1.0, 0.5, 0.1, 1);
  const SpatialGrid grid(3.0, 1024, 1);
  auto cached = g;
  cached.build_cache(grid);
  const std::vector<double> z{0.377};
  CHECK(cached.value(0.0, z) == doctest::Approx(g.value(0.0, z)).epsilon(1e-5));
}

TEST_CASE("non-finite coefficient values raise an evaluation error") {
  CoefficientMeta meta;
  const Coefficient bad(CoeffRole::kDrift, "bad", 1, [](double) { return 1.0; },
                        [](std::span<const double> z) { return 1.0 / z[0]; }, meta);
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(bad.value(0.0, zero), EvaluationError);
}

TEST_CASE("young convolution: smooth g against a Brownian local time") {
  const std::size_t steps = 1024;
  const SamplePath path = brownian(steps, 17);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 256, 1.0);
  const LocalTimeField field = local_time(path, grid, grid.spacing());
  const HolderEstimate reg = local_time_holder_profile(field, 1.0, 0.5);

  std::vector<double> g(grid.cells());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double z[1] = {grid.axis_center(j)};
    g[j] = gauss_bump(std::span<const double>(z, 1));
  }
  const auto report = young_convolution_check(g, field, 0.0, 1.0, reg);
  REQUIRE(!report.rows.empty());
  CHECK(report.worst_ratio > 0.0);
  CHECK(std::isfinite(report.worst_ratio));
  CHECK(report.stability < 10.0);
  for (const auto& row : report.rows) CHECK(row.t > row.s);
}

TEST_CASE("young convolution: singular g still lands in W^{1,inf}") {
  // alpha = 0 and lambda = 1: one derivative gained against an L2 drift.
  const std::size_t steps = 1024;
  const SamplePath path = brownian(steps, 19);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 256, 1.0);
  const LocalTimeField field = local_time(path, grid, grid.spacing());
  const HolderEstimate reg = local_time_holder_profile(field, 1.0, 0.5);
  const auto b = singular_kernel_coefficient(CoeffRole::kDrift, 0.3, grid.spacing());
  const auto g = b.sample_profile(grid);
  const auto report = young_convolution_check(g, field, 0.0, 1.0, reg);
  CHECK(std::isfinite(report.worst_ratio));
  CHECK(report.worst_ratio < 20.0);
}

TEST_CASE("young convolution: zero g gives zero left sides") {
  const std::size_t steps = 256;
  const SamplePath path = brownian(steps, 23);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 64, 1.0);
  const LocalTimeField field = local_time(path, grid, grid.spacing());
  HolderEstimate reg;
  reg.constant = 1.0;
  reg.exponent = 0.5;
  std::vector<double> g(grid.cells(), 0.0);
  const auto report = young_convolution_check(g, field, 0.0, 1.0, reg);
  for (const auto& row : report.rows) CHECK(row.lhs == 0.0);
  CHECK(report.worst_ratio == 0.0);
}

TEST_CASE("coefficient slices export in the field tensor format") {
  const auto g = gaussian_bump_coefficient(CoeffRole::kDrift, 1.0, 0.5, 0.0, 1);
  const SpatialGrid grid(2.0, 64, 1);
  const auto file = std::filesystem::temp_directory_path() / "roughmkv_coeff.bin";
  write_coefficient_slice(file, g, grid);
  const auto tensor = io::read_tensor(file);
  CHECK(tensor.data.size() == 64);
  CHECK(tensor.header.find("coeff v1") == 0);
  std::filesystem::remove(file);
}
