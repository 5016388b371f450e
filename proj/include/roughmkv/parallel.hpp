#pragma once

namespace roughmkv {

// Every parallel kernel keeps a serial twin. Outputs are bit-identical:
// work items own disjoint slots and reductions run in a fixed order.
enum class Parallelism { kSerial, kOpenMP };

void set_max_threads(int n);  // caps OpenMP workers; never changes results

}  // namespace roughmkv
