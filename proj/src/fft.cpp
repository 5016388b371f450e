#include "roughmkv/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace roughmkv::fft {

namespace {

struct PlanKey {
  std::vector<std::size_t> dims;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (sign != o.sign) return sign < o.sign;
    return dims < o.dims;
  }
};

// FFTW planning is not thread-safe; execution on caller buffers is.
// FFTW_UNALIGNED keeps plans valid for any std::complex<double> buffer.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(const std::vector<std::size_t>& dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    PlanKey key{dims, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;

    std::size_t total = 1;
    std::vector<int> n;
    n.reserve(dims.size());
    for (std::size_t d : dims) {
      total *= d;
      n.push_back(static_cast<int>(d));
    }
    std::vector<std::complex<double>> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan =
        fftw_plan_dft(static_cast<int>(n.size()), n.data(), buf, buf, sign,
                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan) throw std::runtime_error("fftw_plan_dft failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void transform(const std::vector<std::size_t>& dims, std::complex<double>* data,
               int sign) {
  if (dims.empty()) throw std::invalid_argument("fft: empty shape");
  for (std::size_t d : dims)
    if (d == 0) throw std::invalid_argument("fft: zero-length axis");
  fftw_plan plan = cache().get(dims, sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(plan, buf, buf);
}

}  // namespace roughmkv::fft
