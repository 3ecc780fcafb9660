#include "streammark/telemetry.hpp"

#include <nlohmann/json.hpp>

namespace streammark {

using nlohmann::json;

std::string RawTelemetry::to_json() const {
  json j;
  j["topology"] = topology;
  j["seed"] = seed;
  j["duration_s"] = duration_s;
  j["expected_ratio"] = expected_ratio;
  j["mode"] = mode;
  j["config"] = config_json;
  j["total_source_emissions"] = total_source_emissions;
  j["total_sink_arrivals"] = total_sink_arrivals;
  j["latency_records_dropped"] = latency_records_dropped;

  json lat = json::array();
  for (const auto& r : latency)
    lat.push_back({r.msg_id, r.source_ingress_ns, r.sink_arrival_ns, r.host,
                   r.sink_task});
  j["latency"] = std::move(lat);

  json thr = json::array();
  for (const auto& s : throughput)
    thr.push_back({s.interval_start_s, s.interval_len_s, s.input_rate,
                   s.output_rate, s.long_run_mean_input});
  j["throughput"] = std::move(thr);

  json jit = json::array();
  for (const auto& s : jitter)
    jit.push_back({s.interval_start_s, s.value, s.defined});
  j["jitter"] = std::move(jit);

  json res = json::array();
  for (const auto& s : resources)
    res.push_back({s.at_s, s.host, s.cpu_percent, s.mem_percent});
  j["resources"] = std::move(res);

  json qd = json::array();
  for (const auto& s : queue_depths) qd.push_back({s.at_s, s.max_depth});
  j["queue_depths"] = std::move(qd);

  json cnt = json::array();
  for (const auto& c : counters) {
    json e;
    e["task"] = c.task;
    e["instance"] = c.instance;
    e["in"] = c.in;
    e["out"] = c.out;
    e["queue_high_water"] = c.queue_high_water;
    e["named"] = c.named;
    cnt.push_back(std::move(e));
  }
  j["counters"] = std::move(cnt);
  return j.dump();
}

RawTelemetry RawTelemetry::from_json(const std::string& text) {
  json j = json::parse(text);
  RawTelemetry t;
  t.topology = j.value("topology", "");
  t.seed = j.value("seed", uint64_t{0});
  t.duration_s = j.value("duration_s", 0.0);
  t.expected_ratio = j.value("expected_ratio", 1.0);
  t.mode = j.value("mode", "");
  t.config_json = j.value("config", "");
  t.total_source_emissions = j.value("total_source_emissions", uint64_t{0});
  t.total_sink_arrivals = j.value("total_sink_arrivals", uint64_t{0});
  t.latency_records_dropped = j.value("latency_records_dropped", uint64_t{0});

  for (const auto& r : j["latency"])
    t.latency.push_back(LatencyRecord{r[0].get<uint64_t>(), r[1].get<int64_t>(),
                                      r[2].get<int64_t>(),
                                      r[3].get<std::string>(),
                                      r[4].get<std::string>()});
  for (const auto& s : j["throughput"])
    t.throughput.push_back(ThroughputSample{s[0], s[1], s[2], s[3], s[4]});
  for (const auto& s : j["jitter"])
    t.jitter.push_back(JitterSample{s[0], s[1], s[2].get<bool>()});
  for (const auto& s : j["resources"])
    t.resources.push_back(
        ResourceSample{s[0], s[1].get<std::string>(), s[2], s[3]});
  for (const auto& s : j["queue_depths"])
    t.queue_depths.push_back(QueueSample{s[0], s[1].get<uint64_t>()});
  for (const auto& c : j["counters"]) {
    TaskCounterSnapshot snap;
    snap.task = c["task"].get<std::string>();
    snap.instance = c["instance"].get<int>();
    snap.in = c["in"].get<uint64_t>();
    snap.out = c["out"].get<uint64_t>();
    snap.queue_high_water = c["queue_high_water"].get<uint64_t>();
    snap.named = c["named"].get<std::map<std::string, uint64_t>>();
    t.counters.push_back(std::move(snap));
  }
  return t;
}

uint64_t RawTelemetry::counter_total(const std::string& name) const {
  uint64_t total = 0;
  for (const auto& c : counters) {
    auto it = c.named.find(name);
    if (it != c.named.end()) total += it->second;
  }
  return total;
}

uint64_t RawTelemetry::task_in(const std::string& task) const {
  uint64_t total = 0;
  for (const auto& c : counters)
    if (c.task == task) total += c.in;
  return total;
}

uint64_t RawTelemetry::task_out(const std::string& task) const {
  uint64_t total = 0;
  for (const auto& c : counters)
    if (c.task == task) total += c.out;
  return total;
}

uint64_t RawTelemetry::task_queue_high_water(const std::string& task) const {
  uint64_t hw = 0;
  for (const auto& c : counters)
    if (c.task == task && c.queue_high_water > hw) hw = c.queue_high_water;
  return hw;
}

}  // namespace streammark
