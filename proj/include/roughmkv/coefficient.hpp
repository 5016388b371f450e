#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "roughmkv/local_time.hpp"

namespace roughmkv {

enum class CoeffRole { kDrift, kDiffusion, kDiffusionSquared };

struct CoefficientMeta {
  double gamma0 = 1.0;  // time-Hölder index toward H^{-1}
  double l2_norm = std::numeric_limits<double>::infinity();
  double l4_norm = std::numeric_limits<double>::infinity();
  double sup_bound = std::numeric_limits<double>::infinity();
  double lip_bound = std::numeric_limits<double>::infinity();
};

// Separable coefficient c(t, z) = theta(t) * g(z), z in R^k, scalar valued.
// Every preset the pipeline ships has this structure; mollification acts on
// the spatial factor only.
class Coefficient {
 public:
  Coefficient(CoeffRole role, std::string name, std::size_t dim,
              std::function<double(double)> theta,
              std::function<double(std::span<const double>)> profile,
              CoefficientMeta meta);

  double value(double t, std::span<const double> z) const;
  double theta_at(double t) const { return theta_(t); }
  double profile_at(std::span<const double> z) const;

  CoeffRole role() const { return role_; }
  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  const CoefficientMeta& meta() const { return meta_; }

  // Samples g at the cell centers of `grid`; later profile evaluations inside
  // the box interpolate the cache multilinearly. Grid caching makes the
  // per-step solver evaluation O(2^k) instead of a quadrature.
  void build_cache(const SpatialGrid& grid);
  bool has_cache() const { return cache_ != nullptr; }
  std::vector<double> sample_profile(const SpatialGrid& grid) const;

  // Pointwise square of the spatial factor (role kDiffusionSquared); this is
  // the quadratic-variation density of a diffusion with this coefficient.
  Coefficient squared() const;

 private:
  struct Cache {
    SpatialGrid grid;
    std::vector<double> samples;
  };

  CoeffRole role_;
  std::string name_;
  std::size_t dim_;
  std::function<double(double)> theta_;
  std::function<double(std::span<const double>)> profile_;
  CoefficientMeta meta_;
  std::shared_ptr<const Cache> cache_;
};

// Friedrichs mollifier: J(z) = C_k exp(-1 / (1 - |z|^2)) on |z| < 1,
// J_eps(z) = eps^-k J(z/eps); unit mass.
struct MollifierSpec {
  double epsilon = 0.1;
};

double mollifier_value(const MollifierSpec& spec, std::span<const double> z);
double mollifier_l2(const MollifierSpec& spec, std::size_t dim);
double mollifier_grad_l2(const MollifierSpec& spec, std::size_t dim);

// eps-smoothing by quadrature convolution against the bump; discrete kernel
// weights are renormalised to unit mass, so constants are fixed points.
// Records the Young bounds ||a_eps||_inf <= ||J_eps||_L2 ||a||_L2 and
// ||d a_eps||_inf <= ||dJ_eps||_L2 ||a||_L2 in the metadata.
Coefficient mollify(const Coefficient& coeff, const MollifierSpec& spec);

// Presets. `dim` is the dimension k of the spatial argument.
Coefficient constant_coefficient(CoeffRole role, double value, std::size_t dim);
Coefficient gaussian_bump_coefficient(CoeffRole role, double amplitude,
                                      double width, double offset,
                                      std::size_t dim);
// Flocking kernel |z|^{-gamma} 1_{|z|<=1} (k = 1 only); evaluations inside the
// central cell return the cell average, never the pointwise singularity.
Coefficient singular_kernel_coefficient(CoeffRole role, double gamma_exp,
                                        double cell_width);
// theta(t) = 1 + amplitude * t^{gamma0}: a C^{gamma0} time modulation with
// known modulus |theta(s) - theta(t)| <= amplitude |s - t|^{gamma0}.
Coefficient modulate(const Coefficient& base, double gamma0, double amplitude);

// Sampled profile slice in the same binary tensor format as the field.
void write_coefficient_slice(const std::filesystem::path& file,
                             const Coefficient& coeff, const SpatialGrid& grid);

struct MetaCheck {
  double sampled_l2 = 0.0;
  double declared_l2 = 0.0;
  double rel_dev = 0.0;
  bool consistent = false;
};

// Spot-check: discrete L2 norm of the sampled profile against the declared
// metadata (infinite declarations are never contradicted by a finite sample).
MetaCheck verify_metadata(const Coefficient& coeff, const SpatialGrid& grid,
                          double tolerance = 0.1);

}  // namespace roughmkv
