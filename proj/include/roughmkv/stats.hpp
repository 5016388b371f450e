#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

namespace roughmkv {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

// Ordinary least squares y = slope*x + intercept.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.count = x.size();
  return fit;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double se = 0.0;   // standard error of the mean
  std::size_t count = 0;
};

inline MeanVar mean_var(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean_var: empty sample");
  MeanVar s;
  s.count = v.size();
  double acc = 0;
  for (double x : v) acc += x;
  s.mean = acc / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) {
      const double d = x - s.mean;
      ss += d * d;
    }
    s.var = ss / static_cast<double>(v.size() - 1);
    s.se = std::sqrt(s.var / static_cast<double>(v.size()));
  }
  return s;
}

}  // namespace roughmkv
