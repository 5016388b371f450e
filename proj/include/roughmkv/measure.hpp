#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace roughmkv {

// Uniformly weighted sample cloud standing in for a law. Either owns its
// samples or views rows of an external array (law snapshots are zero-copy
// cross-sections of the particle tensor).
class EmpiricalMeasure {
 public:
  static EmpiricalMeasure own(std::vector<double> samples, std::size_t dim);
  static EmpiricalMeasure view(const double* base, std::size_t count,
                               std::size_t dim, std::size_t stride);

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> sample(std::size_t i) const {
    return {base_ + i * stride_, dim_};
  }
  double scalar(std::size_t i) const { return base_[i * stride_]; }

 private:
  std::shared_ptr<const std::vector<double>> storage_;
  const double* base_ = nullptr;
  std::size_t count_ = 0, dim_ = 1, stride_ = 1;
};

// Exact 1-D W1: mean absolute difference of sorted samples (the monotone
// coupling is optimal). Unequal counts are resampled with replacement to the
// larger one, seeded, before sorting.
double wasserstein1_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::uint64_t resample_seed = 0);

// Exact 1-D W2 through the same monotone coupling (comparison oracle).
double wasserstein2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       std::uint64_t resample_seed = 0);

struct W1Result {
  double value = 0.0;
  bool exact = true;
  double tolerance = 0.0;  // certified additive gap when not exact
};

// Exact optimal-assignment W1 for any N (O(N^3)); the uniform-weight problem
// is an assignment problem.
double wasserstein1_assignment(const EmpiricalMeasure& mu,
                               const EmpiricalMeasure& nu,
                               std::uint64_t resample_seed = 0);

inline constexpr std::size_t kExactAssignmentCap = 512;

// n-D W1: exact assignment up to the cap, then an entropic approximation
// rounded to a feasible plan with a certified duality gap no larger than
// 1e-3 times the cloud diameter.
W1Result wasserstein1_nd(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                         std::uint64_t resample_seed = 0);

// Dispatcher: 1-D goes to the sort formula, higher dimensions to the
// assignment path.
W1Result wasserstein1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                      std::uint64_t resample_seed = 0);

// Named F(mu) = (1/N) sum f(x_i) with a recorded Lipschitz constant.
struct MeasureFunctional {
  std::string name;
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  double lipschitz = 1.0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
};

MeasureFunctional mean_functional(std::size_t dim);
MeasureFunctional tanh_functional(std::size_t dim);
// Stacks mean and tanh: out_dim = 2 * dim, exercising k > 1.
MeasureFunctional mean_tanh_functional(std::size_t dim);
MeasureFunctional functional_preset(const std::string& name, std::size_t dim);

std::vector<double> apply_functional(const MeasureFunctional& f,
                                     const EmpiricalMeasure& mu);

// Sample CSV: header x_1..x_n, one row per sample, 17 significant digits.
void write_measure_csv(const std::filesystem::path& file,
                       const EmpiricalMeasure& mu);

// Kantorovich-Rubenstein lower bound: max over the supplied 1-Lipschitz test
// functions of |int phi d(mu - nu)|. Lipschitz constants are verified on
// sampled difference quotients; a violating function is rejected.
double kantorovich_lower_bound(
    const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
    std::span<const std::function<double(std::span<const double>)>> tests);

}  // namespace roughmkv
