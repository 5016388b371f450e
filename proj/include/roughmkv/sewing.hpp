#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "roughmkv/coefficient.hpp"
#include "roughmkv/local_time.hpp"

namespace roughmkv {

// Two-parameter germ A_{s,t} on the simplex 0 <= s <= t <= T. Evaluators
// must be pure: sewing windows run in parallel.
struct Germ {
  std::function<double(double, double)> eval;
  double claimed_alpha = 0.0;
  double claimed_beta = 0.0;
};

// Three-point defect (delta A)_{s,u,t} = A_{s,t} - A_{s,u} - A_{u,t}.
double coboundary(const Germ& germ, double s, double u, double t);

struct GermNorms {
  double alpha_norm = 0.0;  // sup |A_{s,t}| / (t-s)^alpha
  double beta_norm = 0.0;   // sup |delta A| / (t-s)^beta, u at dyadic midpoints
  std::size_t pair_count = 0;
};

// Discrete suprema over pairs of `nodes` (>= 16 required, subsampled to keep
// the scan quadratic, u restricted to interval midpoints).
GermNorms germ_norms(const Germ& germ, double alpha, double beta,
                     std::span<const double> nodes);

struct SewingResult {
  std::vector<double> trace;    // dyadic Riemann sums S_0..S_depth
  double value = 0.0;           // last iterate
  double observed_order = 0.0;  // slope of log |S_{n+1} - S_n| vs log mesh
  bool certified = false;       // order > 0 and geometric Cauchy differences
  double germ_gap = 0.0;        // |value - A_{s,t}|
};

// Dyadic sewing over [s,t]; non-Cauchy traces come back flagged, never as
// exceptions, so exponent scans can chart the failure boundary.
SewingResult sew(const Germ& germ, double s, double t, int max_depth);

// A(s,t) = coeff(s, .) * (L_t - L_s) evaluated at flow(s): the frozen-slice
// germ whose sewing identifies the unfrozen time integral. `flow` holds the
// measure-functional values F(mu_t) on the field's time grid.
Germ frozen_coefficient_germ(const Coefficient& coeff, const SamplePath& flow,
                             const LocalTimeField& field);

Germ drift_germ(const Coefficient& drift, const SamplePath& flow,
                const LocalTimeField& field);

// Same construction for the squared-diffusion slice; the coefficient must
// carry the kDiffusionSquared role.
Germ quadratic_germ(const Coefficient& diffusion_sq, const SamplePath& flow,
                    const LocalTimeField& field);

// CSV rows: level, sum, delta.
void write_sewing_trace(const std::filesystem::path& file, const SewingResult& result);

}  // namespace roughmkv
