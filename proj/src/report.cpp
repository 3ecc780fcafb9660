#include "streammark/report.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "streammark/chart.hpp"

namespace streammark {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json summary_of(const DistributionSummary& s) {
  return json{{"count", s.count}, {"min", s.min},   {"q1", s.q1},
              {"median", s.median}, {"q3", s.q3},   {"max", s.max},
              {"mean", s.mean}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::trunc | std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report file: " + p.string());
  f << text;
}

}  // namespace

MetricsReport MetricsReport::build(RawTelemetry raw) {
  MetricsReport r;
  r.e2e_latency_ms = end_to_end_latency(raw.latency, &r.negative_latency_flagged);
  std::map<std::string, std::vector<double>> by_sink;
  for (const auto& rec : raw.latency) {
    double v = rec.latency_ms();
    if (v >= 0) by_sink[rec.sink_task].push_back(v);
  }
  for (auto& [sink, values] : by_sink)
    r.per_sink_latency_ms[sink] = DistributionSummary::from(std::move(values));
  r.empty_data = raw.latency.empty() && raw.throughput.empty() &&
                 raw.total_sink_arrivals == 0;
  r.raw = std::move(raw);
  return r;
}

std::string summary_json(const MetricsReport& report) {
  const RawTelemetry& t = report.raw;
  json j;
  j["topology"] = t.topology;
  j["mode"] = t.mode;
  j["seed"] = t.seed;
  j["duration_s"] = t.duration_s;
  j["expected_ratio"] = t.expected_ratio;
  j["total_source_emissions"] = t.total_source_emissions;
  j["total_sink_arrivals"] = t.total_sink_arrivals;
  j["latency_records"] = t.latency.size();
  j["latency_records_dropped"] = t.latency_records_dropped;
  j["negative_latency_flagged"] = report.negative_latency_flagged;
  j["end_to_end_latency_ms"] = summary_of(report.e2e_latency_ms);
  json sinks;
  for (const auto& [sink, s] : report.per_sink_latency_ms)
    sinks[sink] = summary_of(s);
  j["per_sink_latency_ms"] = std::move(sinks);

  std::optional<double> med = median_jitter(t);
  std::optional<double> med_abs = median_abs_jitter(t);
  if (med) j["median_jitter"] = *med;
  if (med_abs) j["median_abs_jitter"] = *med_abs;

  uint64_t max_hw = 0;
  json tasks = json::array();
  for (const auto& c : t.counters) {
    max_hw = std::max(max_hw, c.queue_high_water);
    json e;
    e["task"] = c.task;
    e["instance"] = c.instance;
    e["in"] = c.in;
    e["out"] = c.out;
    e["queue_high_water"] = c.queue_high_water;
    if (!c.named.empty()) e["counters"] = c.named;
    tasks.push_back(std::move(e));
  }
  j["max_queue_high_water"] = max_hw;
  j["tasks"] = std::move(tasks);
  if (report.peak_rate) j["peak_rate_msg_s"] = *report.peak_rate;
  if (report.empty_data) j["no_data"] = true;
  if (!t.config_json.empty()) {
    try {
      j["config"] = json::parse(t.config_json);
    } catch (...) {
      j["config"] = t.config_json;
    }
  }
  return j.dump(2) + "\n";
}

void emit_report(const MetricsReport& report, const std::filesystem::path& outdir) {
  const RawTelemetry& t = report.raw;
  std::filesystem::create_directories(outdir / "charts");

  {
    std::string csv = "msg_id,source_ingress_ns,sink_arrival_ns,latency_ms,host,sink\n";
    for (const auto& r : t.latency) {
      char line[256];
      std::snprintf(line, sizeof line, "%" PRIu64 ",%" PRId64 ",%" PRId64 ",%.6f,",
                    r.msg_id, r.source_ingress_ns, r.sink_arrival_ns,
                    r.latency_ms());
      csv += line;
      csv += r.host;
      csv += ',';
      csv += r.sink_task;
      csv += '\n';
    }
    write_file(outdir / "latency.csv", csv);
  }
  {
    std::string csv =
        "interval_start_s,interval_len_s,input_rate,output_rate,long_run_mean_input\n";
    for (const auto& s : t.throughput)
      csv += fmt(s.interval_start_s) + "," + fmt(s.interval_len_s) + "," +
             fmt(s.input_rate) + "," + fmt(s.output_rate) + "," +
             fmt(s.long_run_mean_input) + "\n";
    write_file(outdir / "throughput.csv", csv);
  }
  {
    std::string csv = "interval_start_s,jitter,defined\n";
    for (const auto& s : t.jitter)
      csv += fmt(s.interval_start_s) + "," + fmt(s.value) + "," +
             (s.defined ? "1" : "0") + "\n";
    write_file(outdir / "jitter.csv", csv);
  }
  {
    std::string csv = "at_s,host,cpu_percent,mem_percent\n";
    for (const auto& s : t.resources)
      csv += fmt(s.at_s) + "," + s.host + "," + fmt(s.cpu_percent) + "," +
             fmt(s.mem_percent) + "\n";
    write_file(outdir / "resources.csv", csv);
  }
  {
    std::string csv = "at_s,max_queue_depth\n";
    for (const auto& s : t.queue_depths)
      csv += fmt(s.at_s) + "," + std::to_string(s.max_depth) + "\n";
    write_file(outdir / "queues.csv", csv);
  }
  {
    std::string csv = "task,instance,in,out,queue_high_water,counter,value\n";
    for (const auto& c : t.counters) {
      csv += c.task + "," + std::to_string(c.instance) + "," +
             std::to_string(c.in) + "," + std::to_string(c.out) + "," +
             std::to_string(c.queue_high_water) + ",,\n";
      for (const auto& [name, value] : c.named)
        csv += c.task + "," + std::to_string(c.instance) + ",,,," + name + "," +
               std::to_string(value) + "\n";
    }
    write_file(outdir / "counters.csv", csv);
  }
  write_file(outdir / "summary.json", summary_json(report));
  write_file(outdir / "telemetry.json", t.to_json() + "\n");

  // Charts mirroring the box-plot / time-series panels.
  {
    std::vector<std::pair<std::string, DistributionSummary>> boxes(
        report.per_sink_latency_ms.begin(), report.per_sink_latency_ms.end());
    ChartOptions opt;
    opt.title = "end-to-end latency (ms)";
    write_file(outdir / "charts" / "latency_box.svg",
               render_box_plot(boxes, opt));
  }
  {
    ChartSeries in{"input_rate", {}}, out{"output_rate", {}};
    for (const auto& s : t.throughput) {
      in.points.emplace_back(s.interval_start_s, s.input_rate);
      out.points.emplace_back(s.interval_start_s, s.output_rate);
    }
    std::vector<ChartSeries> series{in, out};
    ChartOptions opt;
    opt.title = "throughput (msg/s)";
    write_file(outdir / "charts" / "throughput.svg",
               render_line_chart(series, opt));
  }
  {
    ChartSeries js{"jitter", {}};
    for (const auto& s : t.jitter)
      if (s.defined) js.points.emplace_back(s.interval_start_s, s.value);
    std::vector<ChartSeries> series{js};
    ChartOptions opt;
    opt.title = "jitter";
    write_file(outdir / "charts" / "jitter.svg", render_line_chart(series, opt));
  }
  {
    ChartSeries cpu{"cpu_percent", {}}, mem{"mem_percent", {}};
    for (const auto& s : t.resources) {
      cpu.points.emplace_back(s.at_s, s.cpu_percent);
      mem.points.emplace_back(s.at_s, s.mem_percent);
    }
    std::vector<ChartSeries> series{cpu, mem};
    ChartOptions opt;
    opt.title = "resource utilization (%)";
    write_file(outdir / "charts" / "resources.svg",
               render_line_chart(series, opt));
  }
}

}  // namespace streammark
