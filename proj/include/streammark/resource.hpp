#pragma once

#include <cstdint>
#include <string>

namespace streammark {

struct CpuMemReading {
  double cpu_percent = 0;  // mean busy fraction across logical cores
  double mem_percent = 0;  // host memory in use
  bool ok = false;
};

// Host-wide CPU/memory probe over /proc. CPU is computed from counter deltas
// between successive samples, so the first call only primes the state.
class ResourceProbe {
 public:
  CpuMemReading sample();

 private:
  uint64_t prev_busy_ = 0;
  uint64_t prev_total_ = 0;
  bool primed_ = false;
};

std::string host_name();

}  // namespace streammark
