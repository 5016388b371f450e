#include "roughmkv/parallel.hpp"

#include <omp.h>

namespace roughmkv {

void set_max_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace roughmkv
