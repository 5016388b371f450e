// Serial vs OpenMP timings for the hot kernels. The parallel variants are
// bit-identical to the serial references (see tests/test_parallel_agreement);
// this target only reports throughput.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <utility>
#include <vector>

#include "roughmkv/diagnostics.hpp"
#include "roughmkv/fbm.hpp"
#include "roughmkv/local_time.hpp"
#include "roughmkv/solver.hpp"

using namespace roughmkv;

namespace {

double seconds(const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %8.3f s   openmp %8.3f s   speedup %.2fx\n", name,
              serial, parallel, serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n\n", omp_get_max_threads());

  {
    FbmSpec spec;
    spec.hurst = 0.3;
    spec.grid = TimeGrid(1.0, 4096);
    spec.seed = 1;
    const std::size_t reps = 2000;
    std::vector<double> sink(reps);
    auto visit = [&](std::size_t r, const SamplePath& p) {
      sink[r] = p.value(spec.grid.steps);
    };
    const double ts = seconds([&] {
      sample_fbm_batch_apply(spec, reps, visit, Parallelism::kSerial);
    });
    const double tp = seconds([&] {
      sample_fbm_batch_apply(spec, reps, visit, Parallelism::kOpenMP);
    });
    report("fbm batch (2000 x 4096)", ts, tp);
  }

  FbmSpec spec;
  spec.hurst = 0.3;
  spec.grid = TimeGrid(1.0, 4096);
  spec.seed = 7;
  const SamplePath path = sample_fbm(spec);
  const SpatialGrid grid = SpatialGrid::cover_cells(path, 512, 1.0);

  {
    const double ts = seconds(
        [&] { local_time(path, grid, grid.spacing(), Parallelism::kSerial); });
    const double tp = seconds(
        [&] { local_time(path, grid, grid.spacing(), Parallelism::kOpenMP); });
    report("local time field (4096x512)", ts, tp);
  }

  const LocalTimeField field = local_time(path, grid, grid.spacing());
  {
    const double ts = seconds(
        [&] { local_time_holder_profile(field, 1.0, 0.3, Parallelism::kSerial); });
    const double tp = seconds(
        [&] { local_time_holder_profile(field, 1.0, 0.3, Parallelism::kOpenMP); });
    report("holder profile (40 gaps)", ts, tp);
  }

  {
    const auto b = gaussian_bump_coefficient(CoeffRole::kDrift, 0.8, 1.0, 0.0, 1);
    const auto a = gaussian_bump_coefficient(CoeffRole::kDiffusion, 0.4, 1.2, 0.2, 1);
    const auto f = mean_functional(1);
    const double ts = seconds(
        [&] { simulate(b, a, f, path, 0.1, 4000, 3, 0.0, Parallelism::kSerial); });
    const double tp = seconds(
        [&] { simulate(b, a, f, path, 0.1, 4000, 3, 0.0, Parallelism::kOpenMP); });
    report("particle solver (4000x4096)", ts, tp);

    FbmSpec wide;
    wide.hurst = 0.3;
    wide.grid = TimeGrid(1.0, 512);
    wide.seed = 9;
    const SamplePath w2 = sample_fbm(wide);
    const double ts2 = seconds(
        [&] { simulate(b, a, f, w2, 0.1, 32768, 3, 0.0, Parallelism::kSerial); });
    const double tp2 = seconds(
        [&] { simulate(b, a, f, w2, 0.1, 32768, 3, 0.0, Parallelism::kOpenMP); });
    report("particle solver (32768x512)", ts2, tp2);
  }
  return 0;
}
