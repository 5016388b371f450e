#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "roughmkv/local_time.hpp"
#include "roughmkv/solver.hpp"

namespace roughmkv {

struct ScaleRow {
  double gap = 0.0;        // |t - s|
  double statistic = 0.0;  // per-scale max of the tested quantity
};

// Increment-moment profile across dyadic scales:
//   c_hat = max over scales of E|x_{s,t}|^p / |t-s|^{p gamma1 / 2};
// fitted_exponent = 2 slope / p estimates gamma1. The two smallest dyadic
// scales are excluded (Euler discretisation bias region).
struct MomentHolderReport {
  double p = 2.0;
  double gamma1 = 1.0;
  double c_hat = 0.0;
  double sup_moment = 0.0;  // sup_t E |x_t|^p
  double slope = 0.0;
  double fitted_exponent = 0.0;
  double r2 = 0.0;
  std::vector<ScaleRow> table;
};

MomentHolderReport moment_holder(const ParticleEnsemble& ensemble, double p,
                                 double gamma1);

struct LawFlowReport {
  double gamma1 = 1.0;
  double fitted_exponent = 0.0;
  double r2 = 0.0;
  std::vector<ScaleRow> table;  // per-scale max W1(law_s, law_t)
};

LawFlowReport law_flow_continuity(const ParticleEnsemble& ensemble, double gamma1);

struct IsometryWindow {
  double s = 0.0, t = 0.0;
  double lhs = 0.0;     // Monte Carlo E[( sum a_eps dBeta )^2]
  double rhs = 0.0;     // sewn quadratic germ over [s,t]
  double ratio = 0.0;
  double se_rel = 0.0;  // relative standard error of the Monte Carlo side
  bool pass = false;    // |ratio - 1| <= 3 se_rel
};

struct IsometryReport {
  std::vector<IsometryWindow> windows;
  bool all_pass = true;
};

// Both sides of the Ito isometry on node windows: the diffusion coefficient
// is re-mollified at the ensemble's epsilon (matching the solver draw for
// draw) and the right side is the sewing of the frozen squared-diffusion
// germ against the driver's local time. Scalar ensembles only.
IsometryReport ito_isometry(const ParticleEnsemble& ensemble,
                            const Coefficient& diffusion,
                            const LocalTimeField& field,
                            std::span<const std::pair<std::size_t, std::size_t>> windows,
                            int sew_depth = 10);

struct MartingaleRow {
  std::string process;  // "M", "R" or "N"
  std::string phi;
  double s = 0.0, t = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  bool pass = false;  // |estimate| <= 3 se
};

struct MartingaleReport {
  std::vector<MartingaleRow> rows;
  std::size_t failures = 0;
  bool all_pass = true;
};

// Cylinder functionals of the stopped pair (x|[0,s], beta|[0,s]); presets
// evaluate at the midpoint node s/2.
std::vector<std::string> martingale_phi_presets();

// Monte Carlo defects E[phi (X_t - X_s)] for the compensated processes
//   M = x - x0 - I(b_eps),  R = M^2 - I(a_eps^2),  N = M beta - I(a_eps),
// with every time integral interpreted as a sewing of its frozen germ.
// `compensated = false` drops the drift compensator (the adversarial
// variant, expected to fail on a drifted preset). Scalar ensembles only.
MartingaleReport martingale_defect(
    const ParticleEnsemble& ensemble, const Coefficient& drift,
    const Coefficient& diffusion, const LocalTimeField& field,
    std::span<const std::string> phis,
    std::span<const std::pair<std::size_t, std::size_t>> pairs,
    bool compensated = true, int sew_depth = 10);

struct NSweepRow {
  std::size_t n_small = 0, n_large = 0;
  double mean_w1 = 0.0;
  double se = 0.0;  // over the seed replicates
};

struct NSweepReport {
  std::vector<NSweepRow> rows;
  double fitted_exponent = 0.0;  // expected near -1/2 in one dimension
  double r2 = 0.0;
  bool has_fit = false;
};

// Terminal-law W1 between consecutive ensemble sizes under a common seed
// schedule (particle p draws stream (seed, p) at every N), averaged over
// `reps` seed replicates.
NSweepReport nsweep_fluctuation(const Coefficient& drift,
                                const Coefficient& diffusion,
                                const MeasureFunctional& functional,
                                const SamplePath& w, double epsilon, double x0,
                                std::span<const std::size_t> sizes,
                                std::uint64_t seed, std::size_t reps = 4);

}  // namespace roughmkv
