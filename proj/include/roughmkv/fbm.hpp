#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "roughmkv/grid.hpp"
#include "roughmkv/parallel.hpp"

namespace roughmkv {

// Exact synthesis of k iid scalar fractional Brownian motions,
// Cov(B_s, B_t) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
struct FbmSpec {
  double hurst = 0.5;
  std::size_t dim = 1;
  TimeGrid grid;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FbmMethod { kAuto, kCirculantOnly, kDenseOnly };

double fbm_covariance(double s, double t, double hurst);

// One realisation (stream index 0 of the batch).
SamplePath sample_fbm(const FbmSpec& spec, FbmMethod method = FbmMethod::kAuto);

// `count` realisations; realisation r draws from stream (seed, r), so the
// batch is schedule-independent and batch[0] == sample_fbm(spec).
std::vector<SamplePath> sample_fbm_batch(const FbmSpec& spec, std::size_t count,
                                         Parallelism par = Parallelism::kOpenMP,
                                         FbmMethod method = FbmMethod::kAuto);

// Streaming variant for large ensembles: visit(r, path) is called once per
// realisation; slots written by visit must be disjoint per r.
void sample_fbm_batch_apply(const FbmSpec& spec, std::size_t count,
                            const std::function<void(std::size_t, const SamplePath&)>& visit,
                            Parallelism par = Parallelism::kOpenMP,
                            FbmMethod method = FbmMethod::kAuto);

struct NondeterminismReport {
  double zeta_hat = 0.0;       // slope/2 of log Var(w_t|F_s) vs log(t-s)
  double inf_ratio = 0.0;      // smallest conditional-variance quotient seen
  double regression_r2 = 0.0;
  std::size_t pair_count = 0;
  std::vector<double> gaps;    // t-s per regression pair
  std::vector<double> variances;
};

// Exact conditional variance of one component at every node t > s given the
// observed nodes (0, s]: Schur complement of the closed-form covariance.
// Regression restricted to gaps in [4*dt, T/4].
NondeterminismReport conditional_variance_profile(const FbmSpec& spec,
                                                  std::size_t s_index);

// Sample cross-check: conditions on an empirical covariance estimated from
// the realisations (>= 1000 required). Throws ConditioningError when the
// empirical covariance block is singular (e.g. a degenerate w == 0 batch).
NondeterminismReport conditional_variance_profile(std::span<const SamplePath> paths,
                                                  std::size_t s_index);

// Grid-level evaluation of the local non-determinism quotient
// inf Var(w_t|F_s) / (t-s)^{2 zeta} over sampled (s,t); candidate zeta in (0,1).
// For iid components the conditional covariance is scalar x identity, so the
// unit-direction infimum is the scalar quotient itself.
NondeterminismReport check_local_nondeterminism(const FbmSpec& spec, double zeta);

}  // namespace roughmkv
