#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace streammark {

// One end-to-end latency observation, recorded at a sink. Timestamps are
// harness-clock nanoseconds; latency is their difference after any skew
// correction.
struct LatencyRecord {
  uint64_t msg_id = 0;
  int64_t source_ingress_ns = 0;
  int64_t sink_arrival_ns = 0;
  std::string host;
  std::string sink_task;

  double latency_ms() const {
    return static_cast<double>(sink_arrival_ns - source_ingress_ns) / 1e6;
  }
};

struct ThroughputSample {
  double interval_start_s = 0;
  double interval_len_s = 0;
  double input_rate = 0;        // source emissions / s over the interval
  double output_rate = 0;       // sink arrivals / s over the interval
  double long_run_mean_input = 0;
};

struct JitterSample {
  double interval_start_s = 0;
  double value = 0;
  bool defined = true;  // false: excluded from the series (zero denominator)
};

struct ResourceSample {
  double at_s = 0;
  std::string host;
  double cpu_percent = 0;  // mean across logical cores
  double mem_percent = 0;
};

struct QueueSample {
  double at_s = 0;
  uint64_t max_depth = 0;  // deepest instance queue at sample time
};

struct TaskCounterSnapshot {
  std::string task;
  int instance = 0;
  uint64_t in = 0;
  uint64_t out = 0;
  uint64_t queue_high_water = 0;
  std::map<std::string, uint64_t> named;  // error/drop counters etc.
};

// Everything a run leaves behind. Reports are derived from this and from
// nothing else, so re-emission is idempotent.
struct RawTelemetry {
  std::string topology;
  uint64_t seed = 0;
  double duration_s = 0;        // source-active window
  double expected_ratio = 1.0;  // dataflow selectivity used for jitter
  std::string mode;             // "threads" or "sim"
  std::string config_json;      // run configuration, for auditability

  std::vector<LatencyRecord> latency;
  std::vector<ThroughputSample> throughput;
  std::vector<JitterSample> jitter;
  std::vector<ResourceSample> resources;
  std::vector<QueueSample> queue_depths;
  std::vector<TaskCounterSnapshot> counters;

  uint64_t total_source_emissions = 0;
  uint64_t total_sink_arrivals = 0;
  uint64_t latency_records_dropped = 0;  // reservoir overflow

  std::string to_json() const;
  static RawTelemetry from_json(const std::string& text);

  uint64_t counter_total(const std::string& name) const;
  uint64_t task_in(const std::string& task) const;
  uint64_t task_out(const std::string& task) const;
  uint64_t task_queue_high_water(const std::string& task) const;
};

}  // namespace streammark
