#pragma once

#include <functional>
#include <vector>

#include "streammark/topologies.hpp"

namespace streammark {

struct PeakSearchOptions {
  double probe_duration_s = 1.5;
  double min_rate = 50;
  double max_rate = 4e6;
  double resolution = 0.10;        // stop when bad/good <= 1 + resolution
  double jitter_threshold = 0.05;  // sustained: median |J_t| within this
  double achieve_fraction = 0.95;  // and the requested input rate was reached
  size_t queue_capacity = 2000;
  uint64_t seed = 1;
};

struct ProbeResult {
  double requested_rate = 0;
  double achieved_rate = 0;
  double median_abs_jitter = 0;
  bool queue_growth = false;
  bool sustained = false;
};

struct PeakSearchResult {
  double peak_rate = 0;       // highest sustained constant rate found
  bool any_sustained = false; // false: unsustainable at every probed rate
  std::vector<ProbeResult> probes;
};

// Builds a fresh topology per probe at the requested constant rate.
using TopologyFactory = std::function<TopologyBundle(double rate)>;

// Doubling then bisection over constant input rates. A rate is sustained iff
// the probe window reaches the requested rate, the median |J_t| stays inside
// the threshold, and queue depth does not grow monotonically.
PeakSearchResult peak_rate_search(const TopologyFactory& factory,
                                  const PeakSearchOptions& opt);

ProbeResult probe_rate(const TopologyFactory& factory, double rate,
                       const PeakSearchOptions& opt);

}  // namespace streammark
