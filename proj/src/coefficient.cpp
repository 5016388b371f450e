#include "roughmkv/coefficient.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

#include "roughmkv/errors.hpp"
#include "roughmkv/io.hpp"

namespace roughmkv {

namespace {

double bump_raw(double r2) {
  // exp(-1/(1-r^2)) on r^2 < 1, else 0
  if (r2 >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - r2));
}

// Normalisation of the unit bump per dimension, cached. Radial midpoint
// quadrature; the integrand is smooth and compactly supported.
double bump_mass(std::size_t dim) {
  static double cached[4] = {0, 0, 0, 0};
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("mollifier: dim must be 1, 2 or 3");
  if (cached[dim] > 0.0) return cached[dim];
  const std::size_t n = 40000;
  double mass = 0.0;
  const double surface[4] = {0.0, 2.0, 2.0 * M_PI, 4.0 * M_PI};
  for (std::size_t j = 0; j < n; ++j) {
    const double r = (j + 0.5) / n;
    mass += surface[dim] * std::pow(r, static_cast<double>(dim - 1)) *
            bump_raw(r * r) / n;
  }
  cached[dim] = mass;
  return mass;
}

double bump_l2(std::size_t dim) {
  static double cached[4] = {0, 0, 0, 0};
  if (cached[dim] > 0.0) return cached[dim];
  const std::size_t n = 40000;
  const double c = 1.0 / bump_mass(dim);
  const double surface[4] = {0.0, 2.0, 2.0 * M_PI, 4.0 * M_PI};
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = (j + 0.5) / n;
    const double v = c * bump_raw(r * r);
    acc += surface[dim] * std::pow(r, static_cast<double>(dim - 1)) * v * v / n;
  }
  cached[dim] = std::sqrt(acc);
  return cached[dim];
}

double bump_grad_l2(std::size_t dim) {
  static double cached[4] = {0, 0, 0, 0};
  if (cached[dim] > 0.0) return cached[dim];
  const std::size_t n = 40000;
  const double c = 1.0 / bump_mass(dim);
  const double surface[4] = {0.0, 2.0, 2.0 * M_PI, 4.0 * M_PI};
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double r = (j + 0.5) / n;
    const double r2 = r * r;
    if (r2 >= 1.0) continue;
    const double d = 1.0 - r2;
    // |grad J|(r) = c * exp(-1/d) * 2r / d^2
    const double g = c * bump_raw(r2) * 2.0 * r / (d * d);
    acc += surface[dim] * std::pow(r, static_cast<double>(dim - 1)) * g * g / n;
  }
  cached[dim] = std::sqrt(acc);
  return cached[dim];
}

// Multilinear interpolation between cell centers; NaN signals that z left
// the interpolable region and the caller should evaluate directly.
double interp_cache(const SpatialGrid& grid, std::span<const double> samples,
                    std::span<const double> z) {
  const double dx = grid.spacing();
  const std::size_t p = grid.points;
  if (p < 2) return std::numeric_limits<double>::quiet_NaN();
  std::size_t strides[3] = {0, 0, 0};
  std::size_t stride = 1;
  for (std::size_t a = grid.dim; a-- > 0;) {
    strides[a] = stride;
    stride *= p;
  }
  std::size_t base = 0;
  double frac[3] = {0, 0, 0};
  for (std::size_t a = 0; a < grid.dim; ++a) {
    const double pos = (z[a] + grid.radius) / dx - 0.5;
    if (pos < 0.0 || pos > static_cast<double>(p - 1))
      return std::numeric_limits<double>::quiet_NaN();
    const auto lo = std::min(static_cast<std::size_t>(pos), p - 2);
    frac[a] = pos - static_cast<double>(lo);
    base += strides[a] * lo;
  }
  double value = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t(1) << grid.dim); ++mask) {
    double weight = 1.0;
    std::size_t flat = base;
    for (std::size_t a = 0; a < grid.dim; ++a) {
      const bool hi = (mask >> a) & 1;
      weight *= hi ? frac[a] : (1.0 - frac[a]);
      if (hi) flat += strides[a];
    }
    value += weight * samples[flat];
  }
  return value;
}

}  // namespace

Coefficient::Coefficient(CoeffRole role, std::string name, std::size_t dim,
                         std::function<double(double)> theta,
                         std::function<double(std::span<const double>)> profile,
                         CoefficientMeta meta)
    : role_(role),
      name_(std::move(name)),
      dim_(dim),
      theta_(std::move(theta)),
      profile_(std::move(profile)),
      meta_(meta) {
  if (dim_ == 0) throw std::invalid_argument("Coefficient: dim must be >= 1");
}

double Coefficient::profile_at(std::span<const double> z) const {
  if (z.size() != dim_)
    throw std::invalid_argument("Coefficient: argument dimension mismatch");
  if (cache_) {
    const double v = interp_cache(cache_->grid, cache_->samples, z);
    if (std::isfinite(v)) return v;
  }
  return profile_(z);
}

double Coefficient::value(double t, std::span<const double> z) const {
  const double v = theta_(t) * profile_at(z);
  if (!std::isfinite(v))
    throw EvaluationError("coefficient '" + name_ + "' produced a non-finite value");
  return v;
}

void Coefficient::build_cache(const SpatialGrid& grid) {
  if (grid.dim != dim_)
    throw std::invalid_argument("build_cache: grid dimension mismatch");
  auto cache = std::make_shared<Cache>();
  cache->grid = grid;
  cache->samples = sample_profile(grid);
  cache_ = std::move(cache);
}

std::vector<double> Coefficient::sample_profile(const SpatialGrid& grid) const {
  if (grid.dim != dim_)
    throw std::invalid_argument("sample_profile: grid dimension mismatch");
  const std::size_t cells = grid.cells();
  std::vector<double> out(cells);
#pragma omp parallel
  {
    std::vector<double> z(dim_);
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells); ++c) {
      grid.cell_center(static_cast<std::size_t>(c), z);
      out[c] = profile_(z);
    }
  }
  return out;
}

Coefficient Coefficient::squared() const {
  CoefficientMeta meta;
  meta.gamma0 = meta_.gamma0;
  meta.l2_norm = meta_.l4_norm * meta_.l4_norm;  // ||g^2||_2 = ||g||_4^2
  meta.sup_bound = meta_.sup_bound * meta_.sup_bound;
  if (std::isfinite(meta_.sup_bound) && std::isfinite(meta_.lip_bound))
    meta.lip_bound = 2.0 * meta_.sup_bound * meta_.lip_bound;
  auto base_theta = theta_;
  auto base_profile = profile_;
  auto cache = cache_;
  std::function<double(std::span<const double>)> profile;
  if (cache) {
    const SpatialGrid grid = cache->grid;
    auto samples = std::make_shared<std::vector<double>>(cache->samples);
    profile = [grid, samples, base_profile](std::span<const double> z) {
      const double v = interp_cache(grid, *samples, z);
      const double g = std::isfinite(v) ? v : base_profile(z);
      return g * g;
    };
  } else {
    profile = [base_profile](std::span<const double> z) {
      const double g = base_profile(z);
      return g * g;
    };
  }
  return Coefficient(CoeffRole::kDiffusionSquared, name_ + "^2", dim_,
                     [base_theta](double t) {
                       const double th = base_theta(t);
                       return th * th;
                     },
                     std::move(profile), meta);
}

double mollifier_value(const MollifierSpec& spec, std::span<const double> z) {
  const std::size_t dim = z.size();
  const double c = 1.0 / bump_mass(dim);
  double r2 = 0.0;
  for (double v : z) r2 += v * v;
  const double eps = spec.epsilon;
  return c * bump_raw(r2 / (eps * eps)) / std::pow(eps, static_cast<double>(dim));
}

double mollifier_l2(const MollifierSpec& spec, std::size_t dim) {
  // ||J_eps||_2 = eps^{-k/2} ||J||_2
  return bump_l2(dim) * std::pow(spec.epsilon, -static_cast<double>(dim) / 2.0);
}

double mollifier_grad_l2(const MollifierSpec& spec, std::size_t dim) {
  return bump_grad_l2(dim) *
         std::pow(spec.epsilon, -static_cast<double>(dim) / 2.0 - 1.0);
}

Coefficient mollify(const Coefficient& coeff, const MollifierSpec& spec) {
  if (!(spec.epsilon > 0.0))
    throw std::invalid_argument("mollify: epsilon must be > 0");
  const std::size_t dim = coeff.dim();
  if (dim > 2)
    throw std::invalid_argument("mollify: quadrature convolution supports k <= 2");

  // Tensor midpoint nodes over [-eps, eps]^k, weights J_eps * volume,
  // renormalised to unit mass. Even node counts keep the rule symmetric with
  // no node at the origin.
  const std::size_t per_axis = (dim == 1) ? 128 : 32;
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;
  const double eps = spec.epsilon;
  const double step = 2.0 * eps / static_cast<double>(per_axis);
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> y(dim);
  double total = 0.0;
  while (true) {
    for (std::size_t a = 0; a < dim; ++a)
      y[a] = -eps + (static_cast<double>(idx[a]) + 0.5) * step;
    const double w = mollifier_value(spec, y);
    if (w > 0.0) {
      nodes.push_back(y);
      weights.push_back(w);
      total += w;
    }
    std::size_t a = dim;
    bool done = true;
    while (a > 0) {
      --a;
      if (++idx[a] < per_axis) {
        done = false;
        break;
      }
      idx[a] = 0;
    }
    if (done) break;
  }
  for (double& w : weights) w /= total;

  const Coefficient base = coeff;  // value copy keeps the closure self-contained
  auto profile = [base, nodes, weights, dim](std::span<const double> z) {
    std::vector<double> shifted(dim);
    double acc = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) {
      for (std::size_t a = 0; a < dim; ++a) shifted[a] = z[a] - nodes[q][a];
      acc += weights[q] * base.profile_at(shifted);
    }
    return acc;
  };

  CoefficientMeta meta = coeff.meta();
  if (std::isfinite(meta.l2_norm)) {
    meta.sup_bound = mollifier_l2(spec, dim) * meta.l2_norm;
    meta.lip_bound = mollifier_grad_l2(spec, dim) * meta.l2_norm;
  }
  auto theta = [base](double t) { return base.theta_at(t); };
  return Coefficient(coeff.role(),
                     coeff.name() + "_eps" + std::to_string(spec.epsilon),
                     dim, theta, profile, meta);
}

Coefficient constant_coefficient(CoeffRole role, double value, std::size_t dim) {
  CoefficientMeta meta;
  meta.gamma0 = 1.0;
  meta.sup_bound = std::abs(value);
  meta.lip_bound = 0.0;
  return Coefficient(role, "constant", dim, [](double) { return 1.0; },
                     [value](std::span<const double>) { return value; }, meta);
}

Coefficient gaussian_bump_coefficient(CoeffRole role, double amplitude,
                                      double width, double offset,
                                      std::size_t dim) {
  if (!(width > 0.0))
    throw std::invalid_argument("gaussian_bump: width must be > 0");
  CoefficientMeta meta;
  meta.gamma0 = 1.0;
  meta.sup_bound = std::abs(offset) + std::abs(amplitude);
  meta.lip_bound = std::abs(amplitude) / width * std::exp(-0.5);
  if (offset == 0.0) {
    // || A exp(-|z|^2 / 2s^2) ||_p = |A| (s sqrt(pi) )^{k/p} (2/p)^{k/(2p)}... keep p=2,4 closed forms
    const double s = width;
    meta.l2_norm = std::abs(amplitude) *
                   std::pow(s * std::sqrt(M_PI), static_cast<double>(dim) / 2.0);
    meta.l4_norm = std::abs(amplitude) *
                   std::pow(s * std::sqrt(M_PI / 2.0), static_cast<double>(dim) / 4.0);
  }
  return Coefficient(role, "gaussian_bump", dim, [](double) { return 1.0; },
                     [amplitude, width, offset](std::span<const double> z) {
                       double r2 = 0.0;
                       for (double v : z) r2 += v * v;
                       return offset +
                              amplitude * std::exp(-0.5 * r2 / (width * width));
                     },
                     meta);
}

Coefficient singular_kernel_coefficient(CoeffRole role, double gamma_exp,
                                        double cell_width) {
  if (!(gamma_exp > 0.0 && gamma_exp < 0.5))
    throw std::invalid_argument(
        "singular_kernel: need 0 < gamma < 1/2 so |z|^-gamma is in L2");
  if (!(cell_width > 0.0))
    throw std::invalid_argument("singular_kernel: cell width must be > 0");
  CoefficientMeta meta;
  meta.gamma0 = 1.0;
  meta.l2_norm = std::sqrt(2.0 / (1.0 - 2.0 * gamma_exp));
  if (4.0 * gamma_exp < 1.0)
    meta.l4_norm = std::pow(2.0 / (1.0 - 4.0 * gamma_exp), 0.25);
  const double half_cell = cell_width / 2.0;
  // mean of |z|^-gamma over [-half, half]
  const double cell_avg = std::pow(half_cell, -gamma_exp) / (1.0 - gamma_exp);
  meta.sup_bound = cell_avg;
  return Coefficient(role, "singular_kernel", 1, [](double) { return 1.0; },
                     [gamma_exp, half_cell, cell_avg](std::span<const double> z) {
                       const double r = std::abs(z[0]);
                       if (r > 1.0) return 0.0;
                       if (r < half_cell) return cell_avg;
                       return std::pow(r, -gamma_exp);
                     },
                     meta);
}

Coefficient modulate(const Coefficient& base, double gamma0, double amplitude) {
  if (!(gamma0 > 0.0 && gamma0 <= 1.0))
    throw std::invalid_argument("modulate: gamma0 must lie in (0,1]");
  CoefficientMeta meta = base.meta();
  meta.gamma0 = gamma0;
  const double sup_theta = 1.0 + std::abs(amplitude);
  meta.sup_bound *= sup_theta;
  if (std::isfinite(meta.l2_norm)) meta.l2_norm *= sup_theta;
  if (std::isfinite(meta.l4_norm)) meta.l4_norm *= sup_theta;
  const Coefficient copy = base;
  return Coefficient(base.role(), base.name() + "_modulated", base.dim(),
                     [gamma0, amplitude](double t) {
                       return 1.0 + amplitude * std::pow(std::max(t, 0.0), gamma0);
                     },
                     [copy](std::span<const double> z) { return copy.profile_at(z); },
                     meta);
}

void write_coefficient_slice(const std::filesystem::path& file,
                             const Coefficient& coeff, const SpatialGrid& grid) {
  const auto samples = coeff.sample_profile(grid);
  io::write_tensor(file,
                   "coeff v1 dim=" + std::to_string(grid.dim) +
                       " points=" + std::to_string(grid.points) +
                       " radius=" + io::format_double(grid.radius) + " name=" +
                       coeff.name(),
                   samples);
}

MetaCheck verify_metadata(const Coefficient& coeff, const SpatialGrid& grid,
                          double tolerance) {
  MetaCheck check;
  const auto samples = coeff.sample_profile(grid);
  check.sampled_l2 = sobolev_norm(samples, 0.0, grid);
  check.declared_l2 = coeff.meta().l2_norm;
  if (!std::isfinite(check.declared_l2)) {
    check.rel_dev = 0.0;
    check.consistent = true;  // a finite sample never contradicts an infinite norm
    return check;
  }
  check.rel_dev = std::abs(check.sampled_l2 - check.declared_l2) /
                  std::max(check.declared_l2, 1e-300);
  check.consistent = check.rel_dev <= tolerance;
  return check;
}

}  // namespace roughmkv
