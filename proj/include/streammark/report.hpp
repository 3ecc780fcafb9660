#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "streammark/metrics.hpp"
#include "streammark/telemetry.hpp"

namespace streammark {

// Report derived from raw telemetry; everything here is recomputable from
// the retained samples.
struct MetricsReport {
  RawTelemetry raw;
  DistributionSummary e2e_latency_ms;
  std::map<std::string, DistributionSummary> per_sink_latency_ms;
  uint64_t negative_latency_flagged = 0;
  std::optional<double> peak_rate;
  bool empty_data = false;

  static MetricsReport build(RawTelemetry raw);
};

// Writes latency.csv, throughput.csv, jitter.csv, resources.csv, queues.csv,
// counters.csv, summary.json, telemetry.json and charts/*.svg. Idempotent:
// identical reports produce byte-identical files.
void emit_report(const MetricsReport& report, const std::filesystem::path& outdir);

std::string summary_json(const MetricsReport& report);

}  // namespace streammark
