#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace streammark {

// One declarative document per run; every tunable surfaces here and is
// echoed into the report for auditability.
struct RunConfig {
  std::string topology;            // micro code, STATS or PRED
  std::string dataset = "CITY";    // CITY or TAXI
  double rate = 0;                 // constant msg/s; 0 = max_rate (micro)
  bool search_peak = false;
  double scale = 1000.0;           // temporal scaling for replay
  double duration_s = 0;           // 0 = replay-natural end
  uint64_t seed = 1;
  std::string mode = "threads";    // threads | sim
  int parallelism = 1;
  // Per-task instance-count overrides, applied after the topology is built.
  std::map<std::string, int> task_parallelism;
  std::filesystem::path out_dir = "out";
  std::filesystem::path fixture_dir = "fixtures";
  double fixture_hours = 1.0;
  double jitter_interval_s = 1.0;
  double resource_interval_s = 5.0;
  size_t queue_capacity = 10000;
  int bloom_bits = 9586;
  int bloom_hashes = 7;
  int loglog_bits = 10;
  double kalman_q = 1e-4;
  double kalman_r = 1e-2;
  int ams_rows = 5;
  int ams_cols = 20;
  int avg_window = 0;              // 0 = dataset default
  int slr_window = 10;
  int slr_horizon = 1;
  int chart_window = 100;
  double refresh_period_s = 60.0;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);

  // Non-empty on invalid configuration.
  std::string validate() const;
};

}  // namespace streammark
