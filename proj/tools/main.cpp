#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "streammark/config.hpp"
#include "streammark/metrics.hpp"
#include "streammark/peak.hpp"
#include "streammark/report.hpp"
#include "streammark/runtime.hpp"
#include "streammark/topologies.hpp"

namespace {

using namespace streammark;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRun = 2;
constexpr int kExitNoData = 3;

RunOptions options_from(const RunConfig& cfg, const TopologyBundle& bundle) {
  RunOptions opt;
  opt.duration_ns = static_cast<int64_t>(cfg.duration_s * 1e9);
  opt.queue_capacity = cfg.queue_capacity;
  opt.jitter_interval_s = cfg.jitter_interval_s;
  opt.resource_interval_s = cfg.resource_interval_s;
  opt.seed = cfg.seed;
  opt.expected_ratio = bundle.expected_ratio;
  opt.topology_label = bundle.label;
  opt.config_json = cfg.to_json();
  opt.sample_resources = cfg.mode == "threads";
  return opt;
}

int finish_run(RawTelemetry telemetry, const RunConfig& cfg,
               std::optional<double> peak = std::nullopt) {
  MetricsReport report = MetricsReport::build(std::move(telemetry));
  report.peak_rate = peak;
  emit_report(report, cfg.out_dir);
  std::printf("report: %s\n", cfg.out_dir.string().c_str());
  std::printf("  emissions=%llu arrivals=%llu\n",
              static_cast<unsigned long long>(report.raw.total_source_emissions),
              static_cast<unsigned long long>(report.raw.total_sink_arrivals));
  if (auto j = median_abs_jitter(report.raw))
    std::printf("  median |jitter|=%.4f\n", *j);
  if (report.e2e_latency_ms.count)
    std::printf("  latency ms: median=%.3f q3=%.3f max=%.3f\n",
                report.e2e_latency_ms.median, report.e2e_latency_ms.q3,
                report.e2e_latency_ms.max);
  if (peak) std::printf("  peak rate: %.1f msg/s\n", *peak);
  if (report.empty_data) {
    std::fprintf(stderr, "warning: run produced no data\n");
    return kExitNoData;
  }
  return kExitOk;
}

MicroConfig micro_config_from(const RunConfig& cfg) {
  MicroConfig mc;
  mc.seed = cfg.seed;
  mc.parallelism = cfg.parallelism;
  mc.io_parallelism = cfg.parallelism;
  mc.bloom_bits = static_cast<size_t>(cfg.bloom_bits);
  mc.bloom_hashes = cfg.bloom_hashes;
  mc.loglog_bits = cfg.loglog_bits;
  mc.kalman_q = cfg.kalman_q;
  mc.kalman_r = cfg.kalman_r;
  mc.ams_rows = cfg.ams_rows;
  mc.ams_cols = cfg.ams_cols;
  if (cfg.avg_window > 0) mc.avg_window = cfg.avg_window;
  mc.slr_window = cfg.slr_window;
  if (cfg.rate > 0)
    mc.rate = RateSpec{RateMode::constant, cfg.rate, 1.0};
  else
    mc.rate = RateSpec{RateMode::max_rate, 0, 1.0};
  return mc;
}

int cmd_micro(RunConfig cfg) {
  if (auto err = cfg.validate(); !err.empty()) {
    std::fprintf(stderr, "config error: %s\n", err.c_str());
    return kExitConfig;
  }
  if (!catalog_find(cfg.topology)) {
    std::fprintf(stderr, "config error: unknown topology '%s'\n",
                 cfg.topology.c_str());
    return kExitConfig;
  }
  try {
    std::optional<double> peak;
    if (cfg.search_peak) {
      PeakSearchOptions popt;
      popt.seed = cfg.seed;
      auto factory = [&](double rate) {
        Backends backends;
        MicroConfig mc = micro_config_from(cfg);
        mc.rate = RateSpec{RateMode::constant, rate, 1.0};
        return build_micro(cfg.topology, mc, backends);
      };
      PeakSearchResult search = peak_rate_search(factory, popt);
      if (!search.any_sustained) {
        std::fprintf(stderr,
                     "run failure: task unsustainable at every probed rate "
                     "(%zu probes)\n",
                     search.probes.size());
        return kExitRun;
      }
      peak = search.peak_rate;
      // Confirmation run at the found peak.
      cfg.rate = search.peak_rate;
      if (cfg.duration_s <= 0) cfg.duration_s = 3.0;
    }
    Backends backends;
    TopologyBundle bundle = build_micro(cfg.topology, micro_config_from(cfg), backends);
    apply_parallelism_overrides(bundle.dataflow, cfg.task_parallelism);
    RunOptions opt = options_from(cfg, bundle);
    RawTelemetry t = cfg.mode == "sim"
                         ? run_sim(std::move(bundle.dataflow),
                                   std::move(bundle.registry), opt)
                         : run(std::move(bundle.dataflow),
                               std::move(bundle.registry), opt);
    return finish_run(std::move(t), cfg, peak);
  } catch (const StartupError& e) {
    std::fprintf(stderr, "startup failure: %s\n", e.what());
    return kExitRun;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}

int cmd_app(RunConfig cfg) {
  if (auto err = cfg.validate(); !err.empty()) {
    std::fprintf(stderr, "config error: %s\n", err.c_str());
    return kExitConfig;
  }
  try {
    AppConfig app;
    app.dataset = cfg.dataset;
    app.fixture_dir = cfg.fixture_dir;
    app.scale_factor = cfg.scale;
    app.seed = cfg.seed;
    app.avg_window = cfg.avg_window;
    app.slr_window = cfg.slr_window;
    app.slr_horizon = cfg.slr_horizon;
    app.chart_window = cfg.chart_window;
    app.refresh_period_s = cfg.refresh_period_s;
    app.parallelism = cfg.parallelism;
    AppRun prepared = prepare_app(cfg.topology, app, cfg.fixture_hours);
    apply_parallelism_overrides(prepared.bundle.dataflow, cfg.task_parallelism);
    RunOptions opt = options_from(cfg, prepared.bundle);
    RawTelemetry t =
        cfg.mode == "sim"
            ? run_sim(std::move(prepared.bundle.dataflow),
                      std::move(prepared.bundle.registry), opt)
            : run(std::move(prepared.bundle.dataflow),
                  std::move(prepared.bundle.registry), opt);
    return finish_run(std::move(t), cfg);
  } catch (const StartupError& e) {
    std::fprintf(stderr, "startup failure: %s\n", e.what());
    return kExitRun;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}

int cmd_report(const std::string& telemetry_file, const RunConfig& cfg) {
  try {
    std::ifstream f(telemetry_file);
    if (!f) {
      std::fprintf(stderr, "config error: cannot open %s\n", telemetry_file.c_str());
      return kExitConfig;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    RawTelemetry t = RawTelemetry::from_json(ss.str());
    return finish_run(std::move(t), cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}

int cmd_fixture(const RunConfig& cfg, int sensors, double outlier_fraction) {
  try {
    FixtureSpec spec;
    spec.dataset = cfg.dataset;
    spec.hours = cfg.fixture_hours;
    spec.sensors = sensors > 0 ? sensors : (cfg.dataset == "CITY" ? 24 : 40);
    spec.outlier_fraction = outlier_fraction;
    spec.seed = cfg.seed;
    spec.out_dir = cfg.fixture_dir;
    FixtureMeta meta = synthesize_fixture(spec);
    ModelFixture models = write_fixture_models(cfg.fixture_dir / "models", cfg.dataset);
    std::printf("fixture: %s (%llu rows, mean %.1f B, pass %.4f)\n",
                meta.csv_file.c_str(), static_cast<unsigned long long>(meta.rows),
                meta.mean_row_bytes, meta.bloom_pass_fraction);
    std::printf("models: %s %s\n", models.dtc_v1.string().c_str(),
                models.mlr_v1.string().c_str());
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}

int cmd_plan(const std::string& reports_dir, const RunConfig& cfg,
             double input_rate) {
  // Advisory sizing: parallelism per task from measured micro peaks and the
  // expected per-task inflow at the requested input rate.
  std::map<std::string, double> peaks;
  std::error_code ec;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(reports_dir, ec)) {
    if (entry.path().filename() != "summary.json") continue;
    std::ifstream f(entry.path());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      auto j = nlohmann::json::parse(ss.str());
      if (j.contains("peak_rate_msg_s") && j.contains("topology"))
        peaks[j["topology"].get<std::string>()] =
            j["peak_rate_msg_s"].get<double>();
    } catch (...) {
    }
  }
  if (ec) {
    std::fprintf(stderr, "config error: cannot read %s\n", reports_dir.c_str());
    return kExitConfig;
  }

  // Task-to-micro-code mapping for the applications.
  const std::map<std::string, std::string> task_code = {
      {"parse", "XML"}, {"blf", "BLF"}, {"avg", "AVG"}, {"kal", "KAL"},
      {"slr", "SLR"},   {"dac", "DAC"}, {"mqp", "MQP"}, {"dtc", "DTC"},
      {"mlr", "MLR"},   {"fetch", "ABD"}, {"upload", "ABU"},
  };

  try {
    AppConfig app;
    app.dataset = cfg.dataset;
    app.fixture_dir = cfg.fixture_dir;
    app.seed = cfg.seed;
    AppRun prepared = prepare_app(cfg.topology, app, cfg.fixture_hours);
    auto inflow = expected_task_inflow(prepared.bundle.dataflow);
    std::printf("%-8s %12s %12s %12s\n", "task", "rate(msg/s)", "peak(msg/s)",
                "parallelism");
    for (const auto& t : prepared.bundle.dataflow.tasks) {
      if (t.kind == TaskKind::source) continue;
      double rate = inflow.count(t.name) ? inflow[t.name] * input_rate : 0.0;
      auto code = task_code.find(t.name);
      if (code != task_code.end() && peaks.count(code->second)) {
        double peak = peaks[code->second];
        int par = std::max(1, static_cast<int>(std::ceil(rate / peak)));
        std::printf("%-8s %12.1f %12.1f %12d\n", t.name.c_str(), rate, peak, par);
      } else {
        std::printf("%-8s %12.1f %12s %12s\n", t.name.c_str(), rate, "-", "1*");
      }
    }
    std::printf("(* no micro peak available; defaulting to 1)\n");
    return kExitOk;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run failure: %s\n", e.what());
    return kExitRun;
  }
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  static std::string config_echo;  // consumed by the pre-scan; registered so
                                   // CLI11 accepts the flag in any position
  sub->add_option("--config", config_echo, "JSON run configuration (flags override)");
  sub->add_option("--seed", cfg.seed, "run seed (recorded in reports)")
      ->envname("STREAMMARK_SEED");
  sub->add_option("--out", cfg.out_dir, "report output directory")
      ->envname("STREAMMARK_OUT");
  sub->add_option("--mode", cfg.mode, "threads | sim (deterministic)")
      ->envname("STREAMMARK_MODE");
  sub->add_option("--duration", cfg.duration_s, "run duration in seconds");
  sub->add_option("--queue-capacity", cfg.queue_capacity,
                  "bounded queue capacity per task instance");
  sub->add_option("--jitter-interval", cfg.jitter_interval_s,
                  "jitter/throughput sampling interval (s)");
  sub->add_option("--resource-interval", cfg.resource_interval_s,
                  "CPU/memory sampling interval (s)");
  sub->add_option("--parallelism", cfg.parallelism, "benchmark task instances");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streammark: a dataflow micro/application benchmark harness"};
  app.require_subcommand(1);

  RunConfig cfg;

  // The config file loads first so command-line flags override it.
  std::string config_file;
  if (const char* env = std::getenv("STREAMMARK_CONFIG")) config_file = env;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc)
      config_file = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0)
      config_file = a.substr(9);
  }
  if (!config_file.empty()) {
    std::ifstream f(config_file);
    if (!f) {
      std::fprintf(stderr, "config error: cannot open %s\n", config_file.c_str());
      return kExitConfig;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      cfg = RunConfig::from_json(ss.str());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return kExitConfig;
    }
  }
  std::string config_file_opt;
  app.add_option("--config", config_file_opt,
                 "JSON run configuration (flags override)");

  CLI::App* micro = app.add_subcommand("micro", "run a micro-benchmark topology");
  micro->add_option("--topology,-t", cfg.topology, "task code (XML, BLF, ...)");
  micro->add_option("--rate", cfg.rate, "constant input rate (msg/s); 0 = max");
  micro->add_flag("--search-peak", cfg.search_peak,
                  "binary-search the peak sustained rate first");
  add_common(micro, cfg);

  CLI::App* appsub = app.add_subcommand("app", "run an application benchmark");
  appsub->add_option("--topology,-t", cfg.topology, "STATS or PRED");
  appsub->add_option("--dataset", cfg.dataset, "CITY or TAXI")
      ->envname("STREAMMARK_DATASET");
  appsub->add_option("--scale", cfg.scale, "temporal scaling factor");
  appsub->add_option("--fixture-dir", cfg.fixture_dir,
                     "fixture directory (synthesized when missing)")
      ->envname("STREAMMARK_FIXTURES");
  appsub->add_option("--fixture-hours", cfg.fixture_hours,
                     "span of auto-synthesized fixtures");
  appsub->add_option("--refresh-period", cfg.refresh_period_s,
                     "model refresh period (scaled seconds, PRED)");
  add_common(appsub, cfg);

  CLI::App* search = app.add_subcommand("search-peak",
                                        "peak-rate search for a micro task");
  search->add_option("--topology,-t", cfg.topology, "task code");
  add_common(search, cfg);

  CLI::App* plan = app.add_subcommand(
      "plan", "suggest per-task parallelism from micro peak reports");
  add_common(plan, cfg);
  std::string reports_dir = "out";
  double input_rate = 1000;
  plan->add_option("--reports", reports_dir, "directory with micro reports");
  plan->add_option("--input-rate", input_rate, "application input rate (msg/s)");
  plan->add_option("--topology,-t", cfg.topology, "STATS or PRED");
  plan->add_option("--dataset", cfg.dataset, "CITY or TAXI");
  plan->add_option("--fixture-dir", cfg.fixture_dir, "fixture directory");

  CLI::App* report = app.add_subcommand("report",
                                        "re-emit report files from telemetry");
  std::string telemetry_file;
  report->add_option("--telemetry", telemetry_file, "telemetry.json path")
      ->required();
  report->add_option("--out", cfg.out_dir, "report output directory");

  CLI::App* fixture = app.add_subcommand("fixture", "synthesize dataset fixtures");
  int sensors = 0;
  double outlier_fraction = 0.02;
  fixture->add_option("--dataset", cfg.dataset, "CITY or TAXI");
  fixture->add_option("--hours", cfg.fixture_hours, "fixture span (native hours)");
  fixture->add_option("--sensors", sensors, "emitting devices");
  fixture->add_option("--outlier-fraction", outlier_fraction,
                      "per-observation outlier probability");
  fixture->add_option("--seed", cfg.seed, "fixture seed");
  fixture->add_option("--out-dir", cfg.fixture_dir, "fixture directory");

  CLI11_PARSE(app, argc, argv);

  if (micro->parsed()) return cmd_micro(cfg);
  if (appsub->parsed()) return cmd_app(cfg);
  if (search->parsed()) {
    cfg.search_peak = true;
    return cmd_micro(cfg);
  }
  if (plan->parsed()) return cmd_plan(reports_dir, cfg, input_rate);
  if (report->parsed()) return cmd_report(telemetry_file, cfg);
  if (fixture->parsed()) return cmd_fixture(cfg, sensors, outlier_fraction);
  return kExitConfig;
}
