#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace roughmkv {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Sub-stream seed for (seed, index) pairs. Parallel workers each own one
// stream, so thread scheduling never changes what a stream produces.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 1));
}

// mt19937_64 + Box-Muller. The standard normal_distribution is
// implementation-defined; this one is pinned so artifacts are stable.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : rng_(seed) {}

  NormalStream(std::uint64_t seed, std::uint64_t index)
      : rng_(derive_stream(seed, index)) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = unit_open();  // (0,1], log stays finite
    const double u2 = unit_half_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double uniform() { return unit_half_open(); }

  std::uint64_t raw() { return rng_(); }

 private:
  double unit_half_open() {  // [0,1)
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }
  double unit_open() {  // (0,1]
    return static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
  }

  std::mt19937_64 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace roughmkv
