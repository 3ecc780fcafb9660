#include "streammark/peak.hpp"

#include <cmath>

#include "streammark/metrics.hpp"

namespace streammark {

ProbeResult probe_rate(const TopologyFactory& factory, double rate,
                       const PeakSearchOptions& opt) {
  TopologyBundle bundle = factory(rate);
  RunOptions run_opt;
  run_opt.duration_ns = static_cast<int64_t>(opt.probe_duration_s * 1e9);
  run_opt.queue_capacity = opt.queue_capacity;
  run_opt.jitter_interval_s = std::max(0.25, opt.probe_duration_s / 4.0);
  run_opt.drain = false;  // abort: probes measure, they do not finish work
  run_opt.sample_resources = false;
  run_opt.seed = opt.seed;
  run_opt.expected_ratio = bundle.expected_ratio;
  run_opt.topology_label = bundle.label;

  RawTelemetry t = run(std::move(bundle.dataflow), std::move(bundle.registry),
                       run_opt);

  ProbeResult r;
  r.requested_rate = rate;
  r.achieved_rate =
      static_cast<double>(t.total_source_emissions) / opt.probe_duration_s;
  r.median_abs_jitter = median_abs_jitter(t).value_or(1.0);
  r.queue_growth = queue_growth_monotonic(t);
  r.sustained = r.achieved_rate >= opt.achieve_fraction * rate &&
                r.median_abs_jitter <= opt.jitter_threshold && !r.queue_growth;
  return r;
}

PeakSearchResult peak_rate_search(const TopologyFactory& factory,
                                  const PeakSearchOptions& opt) {
  PeakSearchResult result;

  double good = 0;
  double bad = 0;
  double rate = opt.min_rate;

  // Doubling phase.
  while (rate <= opt.max_rate) {
    ProbeResult p = probe_rate(factory, rate, opt);
    result.probes.push_back(p);
    if (p.sustained) {
      result.any_sustained = true;
      good = rate;
      rate *= 2;
    } else {
      bad = rate;
      break;
    }
  }
  if (!result.any_sustained) return result;  // unsustainable everywhere probed
  if (bad == 0) {
    // Sustained through the cap.
    result.peak_rate = good;
    return result;
  }

  // Bisection (log midpoint) until the bracket is tight.
  while (bad / good > 1.0 + opt.resolution) {
    double mid = std::sqrt(good * bad);
    ProbeResult p = probe_rate(factory, mid, opt);
    result.probes.push_back(p);
    if (p.sustained)
      good = mid;
    else
      bad = mid;
  }
  result.peak_rate = good;
  return result;
}

}  // namespace streammark
