#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "streammark/dataflow.hpp"
#include "streammark/fixtures.hpp"
#include "streammark/iobackends.hpp"
#include "streammark/runtime.hpp"
#include "streammark/streamgen.hpp"

namespace streammark {

// One Table-2 row: benchmark code, task, category, composition pattern,
// selectivity as declared, statefulness.
struct CatalogEntry {
  std::string code;
  std::string task_name;
  std::string category;
  std::string pattern;
  std::string sigma;
  bool stateful = false;
};

// The 13 micro-benchmark tasks, in table order.
const std::vector<CatalogEntry>& catalog();
const CatalogEntry* catalog_find(const std::string& code);

// Shared backends for a run; local defaults are in-process.
struct Backends {
  std::shared_ptr<ObjectStore> objects = std::make_shared<MemObjectStore>();
  std::shared_ptr<TableStore> tables = std::make_shared<MemTableStore>();
  std::shared_ptr<PubSubBroker> pubsub = std::make_shared<PubSubBroker>();
};

struct MicroConfig {
  RateSpec rate;                   // source rate; default max_rate
  uint64_t seed = 1;
  int parallelism = 1;             // benchmark task instances
  int io_parallelism = 1;          // IO tasks may run several per core
  // sketch / task parameter defaults
  size_t bloom_bits = 9586;
  int bloom_hashes = 7;
  int bloom_preload = 1000;        // reference-set size for the BLF micro
  int loglog_bits = 10;
  double kalman_q = 1e-4;
  double kalman_r = 1e-2;
  int ams_rows = 5;
  int ams_cols = 20;
  int avg_window = 90;             // tumbling for the micro benchmark
  int slr_window = 10;
  int slr_horizon = 2;
  int io_objects = 64;             // preloaded blobs / table rows
  size_t io_payload_bytes = 1024;
};

// A runnable benchmark: graph + implementations + the expected dataflow
// selectivity for the jitter series.
struct TopologyBundle {
  Dataflow dataflow;
  Registry registry;
  double expected_ratio = 1.0;
  std::string label;
};

// source -> benchmark task -> sink, with fixture state (reference sets,
// models, preloaded objects) prepared on the given backends.
TopologyBundle build_micro(const std::string& code, const MicroConfig& cfg,
                           Backends& backends);

struct AppConfig {
  std::string dataset = "CITY";    // CITY or TAXI
  std::filesystem::path fixture_dir;
  double scale_factor = 1000.0;
  uint64_t seed = 1;
  int avg_window = 0;              // 0 = dataset default (90 CITY, 10 TAXI)
  int slr_window = 10;
  int slr_horizon = 1;
  int chart_window = 100;
  double refresh_period_s = 0;     // scaled seconds; 0 = default 60
  std::string mqtt_topic = "bench/stats";
  bool mqtt_per_branch_topics = false;
  int parallelism = 1;
};

// Fig. 4a: source -> parse (flat map per observation) -> outlier filter ->
// three hash-grouped analytic branches (sliding average; Kalman + sliding
// regression; approximate distinct count) -> merge -> MQTT publish -> sink.
TopologyBundle build_stats(const AppConfig& cfg, const FixtureMeta& fixture,
                           Backends& backends);

// Fig. 4b: source -> parse -> duplicate fork to decision tree and regression;
// regression -> normalized error; both streams grouped, charted, uploaded.
// A second source periodically re-downloads the trained models and pushes
// them to the prediction tasks as control messages.
TopologyBundle build_pred(const AppConfig& cfg, const FixtureMeta& fixture,
                          Backends& backends);

// Seeds the model container ("models"/dtc.json, mlr.json) from artifact
// files; build_pred loads its initial models from the store.
void install_models(Backends& backends, const std::filesystem::path& dtc,
                    const std::filesystem::path& mlr);

// Loads the dataset fixture from dir (synthesizing it with the given
// parameters when absent) and returns its metadata.
FixtureMeta ensure_fixture(const std::string& dataset,
                           const std::filesystem::path& dir, double hours,
                           uint64_t seed);

// Fixture + backends + models + bundle for one application run.
struct AppRun {
  TopologyBundle bundle;
  std::shared_ptr<Backends> backends;
  FixtureMeta fixture;
  ModelFixture models;  // PRED only
};
AppRun prepare_app(const std::string& app, const AppConfig& cfg,
                   double fixture_hours);

// Applies per-task instance-count overrides to a built dataflow; unknown
// task names throw. The result must still validate.
void apply_parallelism_overrides(Dataflow& df,
                                 const std::map<std::string, int>& overrides);

}  // namespace streammark
