#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace roughmkv::fft {

// In-place complex DFT (unnormalised, FFTW sign convention: forward = -1).
// `dims` is row-major; data.size() must equal the product of dims.
// Plans are cached per shape behind a mutex; execution is thread-safe.
void transform(const std::vector<std::size_t>& dims, std::complex<double>* data,
               int sign);

inline void forward(const std::vector<std::size_t>& dims,
                    std::vector<std::complex<double>>& data) {
  transform(dims, data.data(), -1);
}

inline void inverse_unnormalised(const std::vector<std::size_t>& dims,
                                 std::vector<std::complex<double>>& data) {
  transform(dims, data.data(), +1);
}

// Frequency of DFT bin m out of n, in cycles (fftfreq layout, integer units).
inline double bin_frequency(std::size_t m, std::size_t n) {
  return (m < (n + 1) / 2) ? static_cast<double>(m)
                           : static_cast<double>(m) - static_cast<double>(n);
}

}  // namespace roughmkv::fft
