#include "streammark/config.hpp"

#include <nlohmann/json.hpp>

namespace streammark {

using nlohmann::json;

std::string RunConfig::to_json() const {
  json j;
  j["topology"] = topology;
  j["dataset"] = dataset;
  j["rate"] = rate;
  j["search_peak"] = search_peak;
  j["scale"] = scale;
  j["duration_s"] = duration_s;
  j["seed"] = seed;
  j["mode"] = mode;
  j["parallelism"] = parallelism;
  j["task_parallelism"] = task_parallelism;
  j["out_dir"] = out_dir.string();
  j["fixture_dir"] = fixture_dir.string();
  j["fixture_hours"] = fixture_hours;
  j["jitter_interval_s"] = jitter_interval_s;
  j["resource_interval_s"] = resource_interval_s;
  j["queue_capacity"] = queue_capacity;
  j["bloom_bits"] = bloom_bits;
  j["bloom_hashes"] = bloom_hashes;
  j["loglog_bits"] = loglog_bits;
  j["kalman_q"] = kalman_q;
  j["kalman_r"] = kalman_r;
  j["ams_rows"] = ams_rows;
  j["ams_cols"] = ams_cols;
  j["avg_window"] = avg_window;
  j["slr_window"] = slr_window;
  j["slr_horizon"] = slr_horizon;
  j["chart_window"] = chart_window;
  j["refresh_period_s"] = refresh_period_s;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  RunConfig c;
  c.topology = j.value("topology", "");
  c.dataset = j.value("dataset", "CITY");
  c.rate = j.value("rate", 0.0);
  c.search_peak = j.value("search_peak", false);
  c.scale = j.value("scale", 1000.0);
  c.duration_s = j.value("duration_s", 0.0);
  c.seed = j.value("seed", uint64_t{1});
  c.mode = j.value("mode", "threads");
  c.parallelism = j.value("parallelism", 1);
  if (j.contains("task_parallelism"))
    c.task_parallelism = j.at("task_parallelism").get<std::map<std::string, int>>();
  c.out_dir = j.value("out_dir", std::string("out"));
  c.fixture_dir = j.value("fixture_dir", std::string("fixtures"));
  c.fixture_hours = j.value("fixture_hours", 1.0);
  c.jitter_interval_s = j.value("jitter_interval_s", 1.0);
  c.resource_interval_s = j.value("resource_interval_s", 5.0);
  c.queue_capacity = j.value("queue_capacity", size_t{10000});
  c.bloom_bits = j.value("bloom_bits", 9586);
  c.bloom_hashes = j.value("bloom_hashes", 7);
  c.loglog_bits = j.value("loglog_bits", 10);
  c.kalman_q = j.value("kalman_q", 1e-4);
  c.kalman_r = j.value("kalman_r", 1e-2);
  c.ams_rows = j.value("ams_rows", 5);
  c.ams_cols = j.value("ams_cols", 20);
  c.avg_window = j.value("avg_window", 0);
  c.slr_window = j.value("slr_window", 10);
  c.slr_horizon = j.value("slr_horizon", 1);
  c.chart_window = j.value("chart_window", 100);
  c.refresh_period_s = j.value("refresh_period_s", 60.0);
  return c;
}

std::string RunConfig::validate() const {
  if (topology.empty()) return "topology is required";
  if (mode != "threads" && mode != "sim") return "mode must be threads or sim";
  if (scale <= 0) return "scale must be > 0";
  if (parallelism < 1) return "parallelism must be >= 1";
  if (topology != "STATS" && topology != "PRED") {
    if (!search_peak && rate <= 0 && duration_s <= 0)
      return "micro runs need --rate/--duration or --search-peak";
    if (!search_peak && duration_s <= 0) return "duration must be > 0";
  } else {
    if (dataset != "CITY" && dataset != "TAXI")
      return "dataset must be CITY or TAXI";
  }
  return "";
}

}  // namespace streammark
