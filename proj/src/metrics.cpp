#include "streammark/metrics.hpp"

#include <algorithm>

namespace streammark {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  double pos = q * static_cast<double>(v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

}  // namespace

DistributionSummary DistributionSummary::from(std::vector<double> values) {
  DistributionSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  return s;
}

DistributionSummary end_to_end_latency(std::span<const LatencyRecord> records,
                                       uint64_t* flagged) {
  std::vector<double> ms;
  ms.reserve(records.size());
  uint64_t bad = 0;
  for (const auto& r : records) {
    double v = r.latency_ms();
    if (v < 0) {
      ++bad;
      continue;
    }
    ms.push_back(v);
  }
  if (flagged) *flagged = bad;
  return DistributionSummary::from(std::move(ms));
}

uint64_t skew_correct(std::vector<LatencyRecord>& records,
                      const SkewCorrection& correction) {
  uint64_t flagged = 0;
  for (auto& r : records) {
    auto it = correction.offsets_ns.find(r.host);
    if (it != correction.offsets_ns.end()) r.sink_arrival_ns += it->second;
    if (r.sink_arrival_ns < r.source_ingress_ns) ++flagged;
  }
  return flagged;
}

ConservationAudit audit_conservation(const RawTelemetry& t) {
  ConservationAudit a;
  a.source_emissions = t.total_source_emissions;
  a.sink_arrivals = t.total_sink_arrivals;
  a.expected_ratio = t.expected_ratio;
  return a;
}

std::optional<double> median_abs_jitter(const RawTelemetry& t) {
  std::vector<double> v;
  for (const auto& s : t.jitter)
    if (s.defined) v.push_back(std::fabs(s.value));
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

std::optional<double> median_jitter(const RawTelemetry& t) {
  std::vector<double> v;
  for (const auto& s : t.jitter)
    if (s.defined) v.push_back(s.value);
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.5);
}

bool queue_growth_monotonic(const RawTelemetry& t, size_t min_samples) {
  const auto& q = t.queue_depths;
  if (q.size() < min_samples) return false;
  for (size_t i = 1; i < q.size(); ++i)
    if (q[i].max_depth <= q[i - 1].max_depth) return false;
  return true;
}

bool latency_trend_stationary(std::span<const LatencyRecord> records,
                              double tolerance) {
  if (records.size() < 16) return true;  // too few samples to call a trend
  std::vector<LatencyRecord> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LatencyRecord& a, const LatencyRecord& b) {
              return a.sink_arrival_ns < b.sink_arrival_ns;
            });
  const size_t half = sorted.size() / 2;
  auto median_of = [](std::span<const LatencyRecord> part) {
    std::vector<double> ms;
    ms.reserve(part.size());
    for (const auto& r : part) ms.push_back(r.latency_ms());
    std::sort(ms.begin(), ms.end());
    return ms[ms.size() / 2];
  };
  const double first = median_of({sorted.data(), half});
  const double second = median_of({sorted.data() + half, sorted.size() - half});
  // Sub-millisecond medians are treated as noise-floor flat.
  return second <= std::max(first * tolerance, first + 0.5);
}

}  // namespace streammark
