#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streammark/telemetry.hpp"

namespace streammark {

// Normalized deviation of the observed output rate from the
// selectivity-expected output rate over one interval:
//   J = (out_rate - sigma * in_rate) / (sigma * long_run_mean_in)
// Returns NaN when the denominator is zero; callers exclude such samples.
inline double compute_jitter(double out_rate, double sigma, double in_rate,
                             double long_run_mean_in) {
  const double denom = sigma * long_run_mean_in;
  if (denom == 0.0 || !std::isfinite(denom)) return std::nan("");
  return (out_rate - sigma * in_rate) / denom;
}

// Five-number summary plus mean. Quartiles use linear interpolation between
// order statistics (the R-7 convention), so summaries are recomputable from
// retained raw samples.
struct DistributionSummary {
  size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;

  static DistributionSummary from(std::vector<double> values);
};

// End-to-end latency distribution in milliseconds from sink-side records.
// Records with negative latency (clock anomaly after correction) are flagged
// and excluded; the count of exclusions is returned via `flagged`.
DistributionSummary end_to_end_latency(std::span<const LatencyRecord> records,
                                       uint64_t* flagged = nullptr);

// Shifts per-host timestamps onto the reference clock. Offsets map host name
// to the amount to add to that host's clock readings. Records whose latency
// turns negative after correction are flagged (counted), not dropped here.
struct SkewCorrection {
  std::map<std::string, int64_t> offsets_ns;
  int64_t residual_bound_ns = 0;
};

uint64_t skew_correct(std::vector<LatencyRecord>& records,
                      const SkewCorrection& correction);

// Conservation audit: expected sink arrivals from source emissions and the
// declared dataflow ratio, versus observed.
struct ConservationAudit {
  uint64_t source_emissions = 0;
  uint64_t sink_arrivals = 0;
  double expected_ratio = 1.0;
  double expected_arrivals() const { return expected_ratio * static_cast<double>(source_emissions); }
};

ConservationAudit audit_conservation(const RawTelemetry& t);

// Median of the defined jitter samples; nullopt when the series is empty.
std::optional<double> median_abs_jitter(const RawTelemetry& t);
std::optional<double> median_jitter(const RawTelemetry& t);

// True when the per-interval queue depth series grows monotonically
// (strictly, over at least `min_samples` samples) — the instability signal
// used by the peak-rate search.
bool queue_growth_monotonic(const RawTelemetry& t, size_t min_samples = 3);

// Stationarity under sustained load: splits the records (arrival order) into
// successive windows and checks that the median latency shows no increasing
// trend — the second half's median stays within `tolerance` times the
// first half's.
bool latency_trend_stationary(std::span<const LatencyRecord> records,
                              double tolerance = 1.5);

}  // namespace streammark
