#pragma once

#include <functional>
#include <span>
#include <vector>

#include "roughmkv/local_time.hpp"

namespace roughmkv {

// T^w f(x) over [s,t]: left-endpoint quadrature of integral f(x - w_r) dr on
// the path grid; O(dt) for Lipschitz f.
double averaging_direct(const std::function<double(std::span<const double>)>& f,
                        const SamplePath& path, std::size_t s_index,
                        std::size_t t_index, std::span<const double> x);

// Lattice of the discrete convolution output: points -2R + (n+1) dx per axis,
// 2P points per axis (sums of two cell centers).
struct ConvolutionLattice {
  SpatialGrid grid;  // radius 2R, 2P points per axis, same spacing
  std::vector<double> values;

  // Multilinear interpolation at x; x must lie inside the lattice box.
  double at(std::span<const double> x) const;
};

// FFT convolution of f samples (cell centers) with the field increment
// L_t - L_s: out(y) = sum_j f(y - x_j) (L_t - L_s)(x_j) dx^k.
ConvolutionLattice convolve_increment(std::span<const double> f_samples,
                                      const LocalTimeField& field,
                                      std::size_t s_index, std::size_t t_index);

// (f * (L_t - L_s))(x) through the lattice; the Eq-level identity partner of
// averaging_direct.
double averaging_via_local_time(std::span<const double> f_samples,
                                const LocalTimeField& field, std::size_t s_index,
                                std::size_t t_index, std::span<const double> x);

// sup | (I - Laplace)^{order/2} g | on the grid, spectrally.
double sup_bessel_norm(std::span<const double> samples, double order,
                       const SpatialGrid& grid);

struct YoungCheckRow {
  double s = 0.0;
  double t = 0.0;
  double lhs = 0.0;    // ||g * L_{s,t}||_{W^{alpha+lambda, inf}}
  double rhs = 0.0;    // ||g||_{H^alpha} C_fit |t-s|^{gamma_fit}
  double ratio = 0.0;  // lhs / rhs
};

struct YoungCheckReport {
  std::vector<YoungCheckRow> rows;
  double worst_ratio = 0.0;
  double stability = 0.0;  // max ratio / min positive ratio across scales
  double g_norm = 0.0;
};

// Empirical constant of the Young convolution estimate
// ||g * L_{s,t}||_{W^{alpha+lambda,inf}} <= C ||g||_{H^alpha} ||L||_{C^gamma H^lambda} |t-s|^gamma
// over log-spaced (s,t) pairs; `field_reg` supplies the fitted gamma and C of
// the local-time field at the same lambda. Pairs with s = t never occur.
YoungCheckReport young_convolution_check(std::span<const double> g_samples,
                                         const LocalTimeField& field, double alpha,
                                         double lambda,
                                         const HolderEstimate& field_reg);

}  // namespace roughmkv
