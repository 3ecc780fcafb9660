#include "streammark/topologies.hpp"

#include <charconv>
#include <cmath>

#include "streammark/common.hpp"
#include "streammark/csv.hpp"
#include "streammark/tasks.hpp"
#include "streammark/xml.hpp"

namespace streammark {

using namespace streammark::tasks;

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"XML", "XML Parsing", "Parse", "Transform", "1:1", false},
      {"BLF", "Bloom Filter", "Filter", "Filter", "1:0/1", false},
      {"AVG", "Average", "Statistical", "Aggregate", "N:1", true},
      {"DAC", "Distinct Approx. Count", "Statistical", "Transform", "1:1", true},
      {"KAL", "Kalman Filter", "Statistical", "Transform", "1:1", true},
      {"SOM", "Second Order Moment", "Statistical", "Transform", "1:1", true},
      {"DTC", "Decision Tree Classify", "Predictive", "Transform", "1:1", false},
      {"MLR", "Multi-variate Linear Reg.", "Predictive", "Transform", "1:1", false},
      {"SLR", "Sliding Linear Regression", "Predictive", "Flat Map", "N:M", true},
      {"ABD", "Blob Download", "IO", "Source/Transform", "1:1", false},
      {"ABU", "Blob Upload", "IO", "Sink", "1:1", false},
      {"ATQ", "Table Query", "IO", "Source/Transform", "1:1", false},
      {"MQP", "MQTT Publish", "IO", "Sink", "1:1", false},
  };
  return entries;
}

const CatalogEntry* catalog_find(const std::string& code) {
  for (const auto& e : catalog())
    if (e.code == code) return &e;
  return nullptr;
}

namespace {

// Synthetic sources for the micro fixtures.

class XmlDocSource : public PullSource {
 public:
  XmlDocSource(RateSpec rate, uint64_t seed) : rate_(rate), rng_(mix64(seed)) {}
  std::optional<TimedMessage> next() override {
    int64_t due = 0;
    if (rate_.mode == RateMode::constant && rate_.rate > 0)
      due = static_cast<int64_t>(static_cast<double>(seq_) * 1e9 / rate_.rate);
    Message m;
    std::vector<Field> fields;
    fields.push_back({"seq", static_cast<int64_t>(seq_)});
    fields.push_back({"value", rng_.range_i64(0, 999999)});
    fields.push_back({"reading", rng_.uniform(0, 100)});
    m.set("xml", fields_to_xml(fields, "obs"));
    m.event_time_ms = static_cast<int64_t>(seq_);
    ++seq_;
    return TimedMessage{due, std::move(m)};
  }

 private:
  RateSpec rate_;
  Rng rng_;
  uint64_t seq_ = 0;
};

// Numeric feature rows shaped like the CITY observation bands, for the
// predictive micro tasks.
class FeatureSource : public PullSource {
 public:
  FeatureSource(RateSpec rate, uint64_t seed)
      : rate_(rate), rng_(mix64(seed)), bands_(dataset_bands("CITY")) {}
  std::optional<TimedMessage> next() override {
    int64_t due = 0;
    if (rate_.mode == RateMode::constant && rate_.rate > 0)
      due = static_cast<int64_t>(static_cast<double>(seq_) * 1e9 / rate_.rate);
    Message m;
    for (const auto& b : bands_) m.set(b.field, rng_.normal(b.mu, b.sigma));
    m.event_time_ms = static_cast<int64_t>(seq_);
    ++seq_;
    return TimedMessage{due, std::move(m)};
  }

 private:
  RateSpec rate_;
  Rng rng_;
  std::vector<ObservationBand> bands_;
  uint64_t seq_ = 0;
};

// Keys referencing objects preloaded into the store (for ABD) or table rows
// (for ATQ).
class KeyCycleSource : public PullSource {
 public:
  KeyCycleSource(RateSpec rate, uint64_t seed, std::string prefix, int count)
      : rate_(rate), rng_(mix64(seed)), prefix_(std::move(prefix)), count_(count) {}
  std::optional<TimedMessage> next() override {
    int64_t due = 0;
    if (rate_.mode == RateMode::constant && rate_.rate > 0)
      due = static_cast<int64_t>(static_cast<double>(seq_) * 1e9 / rate_.rate);
    const uint64_t idx = rng_.below(static_cast<uint64_t>(count_));
    Message m;
    m.set("key", prefix_ + std::to_string(idx));
    m.set("rk", static_cast<int64_t>(idx));
    m.event_time_ms = static_cast<int64_t>(seq_);
    ++seq_;
    return TimedMessage{due, std::move(m)};
  }

 private:
  RateSpec rate_;
  Rng rng_;
  std::string prefix_;
  int count_;
  uint64_t seq_ = 0;
};

// Payload strings for the upload micro benchmark.
class PayloadSource : public PullSource {
 public:
  PayloadSource(RateSpec rate, uint64_t seed, size_t bytes)
      : rate_(rate), rng_(mix64(seed)), bytes_(bytes) {}
  std::optional<TimedMessage> next() override {
    int64_t due = 0;
    if (rate_.mode == RateMode::constant && rate_.rate > 0)
      due = static_cast<int64_t>(static_cast<double>(seq_) * 1e9 / rate_.rate);
    std::string payload;
    payload.reserve(bytes_);
    while (payload.size() < bytes_) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx",
                    static_cast<unsigned long long>(rng_.next_u64()));
      payload.append(buf, std::min<size_t>(16, bytes_ - payload.size()));
    }
    Message m;
    m.set("payload", std::move(payload));
    m.set("key", "up-" + std::to_string(seq_));
    m.event_time_ms = static_cast<int64_t>(seq_);
    ++seq_;
    return TimedMessage{due, std::move(m)};
  }

 private:
  RateSpec rate_;
  Rng rng_;
  size_t bytes_;
  uint64_t seq_ = 0;
};

// Control-message trigger for the model refresh stream: per period, one
// message per artifact key, ending at the replay horizon.
class RefreshTriggerSource : public PullSource {
 public:
  RefreshTriggerSource(double period_s, std::vector<std::string> keys,
                       double horizon_s)
      : period_ns_(static_cast<int64_t>(period_s * 1e9)),
        horizon_ns_(static_cast<int64_t>(horizon_s * 1e9)),
        keys_(std::move(keys)) {}
  std::optional<TimedMessage> next() override {
    const uint64_t tick = seq_ / keys_.size();
    const size_t which = seq_ % keys_.size();
    const int64_t due = static_cast<int64_t>(tick + 1) * period_ns_;
    if (horizon_ns_ > 0 && due >= horizon_ns_) return std::nullopt;
    ++seq_;
    Message m;
    m.set("model_key", keys_[which]);
    return TimedMessage{due, std::move(m)};
  }

 private:
  int64_t period_ns_;
  int64_t horizon_ns_;
  std::vector<std::string> keys_;
  uint64_t seq_ = 0;
};

TaskDescriptor source_desc(int parallelism = 1) {
  TaskDescriptor t;
  t.name = "source";
  t.kind = TaskKind::source;
  t.parallelism = parallelism;
  return t;
}

TaskDescriptor sink_desc(const std::string& name = "sink") {
  TaskDescriptor t;
  t.name = name;
  t.kind = TaskKind::sink;
  return t;
}

}  // namespace

void install_models(Backends& backends, const std::filesystem::path& dtc,
                    const std::filesystem::path& mlr) {
  auto put_file = [&](const std::filesystem::path& p, const std::string& key) {
    ModelArtifact a = ModelArtifact::load_file(p.string());  // validates
    std::vector<uint8_t> bytes(a.payload_json.begin(), a.payload_json.end());
    backends.objects->put(ObjectRef{"models", key}, bytes);
  };
  put_file(dtc, "dtc.json");
  put_file(mlr, "mlr.json");
}

TopologyBundle build_micro(const std::string& code, const MicroConfig& cfg,
                           Backends& backends) {
  const CatalogEntry* entry = catalog_find(code);
  if (!entry) throw StartupError("unknown topology code: " + code);

  TopologyBundle bundle;
  bundle.label = code;
  Dataflow& df = bundle.dataflow;

  TaskDescriptor mid;
  mid.name = "bench";
  mid.parallelism =
      entry->category == "IO" ? cfg.io_parallelism : cfg.parallelism;
  mid.stateful = entry->stateful;

  Registry& reg = bundle.registry;
  const uint64_t seed = cfg.seed;

  auto int_source = [&](int64_t values) {
    reg.sources["source"] = [rate = cfg.rate, seed, values](int inst) {
      return std::make_unique<RandomIntegerSource>(rate, seed + static_cast<uint64_t>(inst),
                                                   values);
    };
  };

  if (code == "XML") {
    mid.kind = TaskKind::transform;
    reg.sources["source"] = [rate = cfg.rate, seed](int inst) {
      return std::make_unique<XmlDocSource>(rate, seed + static_cast<uint64_t>(inst));
    };
    reg.tasks["bench"] = [](int) { return std::make_unique<XmlParseTask>("xml"); };
  } else if (code == "BLF") {
    mid.kind = TaskKind::filter;
    // Reference set: the lower half of the integer domain, so the declared
    // pass fraction is exactly one half (plus the small false-positive tail).
    const int64_t domain = 2 * cfg.bloom_preload;
    auto filter = std::make_shared<BloomFilter>(cfg.bloom_bits, cfg.bloom_hashes, seed);
    for (int64_t v = 0; v < cfg.bloom_preload; ++v)
      filter->insert(std::to_string(v));
    mid.selectivity = {1.0, 0.5};
    int_source(domain);
    reg.tasks["bench"] = [filter](int) {
      return std::make_unique<BloomFilterTask>(filter, "value");
    };
  } else if (code == "AVG") {
    mid.kind = TaskKind::aggregate;
    mid.window = WindowSpec{WindowMode::count, cfg.avg_window, cfg.avg_window};
    int_source(1'000'000);
    reg.tasks["bench"] = [](int) {
      return std::make_unique<WindowedAverageTask>("value");
    };
  } else if (code == "DAC") {
    mid.kind = TaskKind::transform;
    int_source(100'000);
    reg.tasks["bench"] = [bits = cfg.loglog_bits, seed](int inst) {
      return std::make_unique<DistinctCountTask>("value", bits,
                                                 seed + static_cast<uint64_t>(inst));
    };
  } else if (code == "KAL") {
    mid.kind = TaskKind::transform;
    int_source(1000);
    reg.tasks["bench"] = [q = cfg.kalman_q, r = cfg.kalman_r](int) {
      return std::make_unique<KalmanTask>("value", q, r);
    };
  } else if (code == "SOM") {
    mid.kind = TaskKind::transform;
    int_source(1000);
    reg.tasks["bench"] = [t = cfg.ams_rows, b = cfg.ams_cols, seed](int inst) {
      return std::make_unique<SecondMomentTask>("value", t, b,
                                                seed + static_cast<uint64_t>(inst));
    };
  } else if (code == "DTC" || code == "MLR") {
    mid.kind = TaskKind::transform;
    reg.sources["source"] = [rate = cfg.rate, seed](int inst) {
      return std::make_unique<FeatureSource>(rate, seed + static_cast<uint64_t>(inst));
    };
    ModelFixture models = write_fixture_models(
        std::filesystem::temp_directory_path() / "streammark_micro_models",
        "CITY");
    if (code == "DTC") {
      reg.tasks["bench"] = [path = models.dtc_v1.string()](int) {
        return std::make_unique<DecisionTreeTask>(
            ModelArtifact::load_file(path).to_tree());
      };
    } else {
      LinearModel lin = ModelArtifact::load_file(models.mlr_v1.string()).to_linear();
      reg.tasks["bench"] = [lin](int) { return std::make_unique<MlrTask>(lin); };
    }
  } else if (code == "SLR") {
    mid.kind = TaskKind::flatmap;
    mid.selectivity = {1.0, static_cast<double>(cfg.slr_horizon)};
    int_source(1000);
    reg.tasks["bench"] = [n = cfg.slr_window, h = cfg.slr_horizon](int) {
      return std::make_unique<SlidingRegressionTask>("value", n, h);
    };
  } else if (code == "ABD") {
    mid.kind = TaskKind::transform;
    for (int i = 0; i < cfg.io_objects; ++i) {
      std::string payload(cfg.io_payload_bytes, static_cast<char>('a' + i % 26));
      backends.objects->put(ObjectRef{"bench", "obj-" + std::to_string(i)},
                            {payload.begin(), payload.end()});
    }
    reg.sources["source"] = [rate = cfg.rate, seed, n = cfg.io_objects](int inst) {
      return std::make_unique<KeyCycleSource>(rate, seed + static_cast<uint64_t>(inst),
                                              "obj-", n);
    };
    reg.tasks["bench"] = [store = backends.objects](int) {
      return std::make_unique<BlobDownloadTask>(store, IoTaskConfig{}, "key");
    };
  } else if (code == "ABU") {
    mid.kind = TaskKind::transform;  // forwarding upload between source and sink
    reg.sources["source"] = [rate = cfg.rate, seed, b = cfg.io_payload_bytes](int inst) {
      return std::make_unique<PayloadSource>(rate, seed + static_cast<uint64_t>(inst), b);
    };
    reg.tasks["bench"] = [store = backends.objects](int) {
      return std::make_unique<BlobUploadTask>(store, IoTaskConfig{}, "payload",
                                              "key", /*forward=*/true);
    };
  } else if (code == "ATQ") {
    mid.kind = TaskKind::transform;
    for (int i = 0; i < cfg.io_objects; ++i)
      backends.tables->insert("bench", "p" + std::to_string(i), std::to_string(i),
                              TableRow{{"v", static_cast<int64_t>(i * 7)}});
    reg.sources["source"] = [rate = cfg.rate, seed, n = cfg.io_objects](int inst) {
      return std::make_unique<KeyCycleSource>(rate, seed + static_cast<uint64_t>(inst),
                                              "p", n);
    };
    reg.tasks["bench"] = [store = backends.tables](int) {
      return std::make_unique<TableQueryTask>(store, IoTaskConfig{}, "bench",
                                              "key", "rk");
    };
  } else if (code == "MQP") {
    mid.kind = TaskKind::transform;  // forwarding publish ahead of the sink
    int_source(1'000'000);
    reg.tasks["bench"] = [broker = backends.pubsub](int) {
      return std::make_unique<MqttPublishTask>(broker, "bench/micro",
                                               /*forward=*/true);
    };
  }

  df.tasks = {source_desc(), mid, sink_desc()};
  df.edges = {{"source", "bench", Routing::round_robin, ""},
              {"bench", "sink", Routing::round_robin, ""}};
  if (mid.stateful && mid.parallelism > 1) {
    // State partitions by the integer payload when no routing key exists.
    df.edges[0].routing = Routing::hash;
    df.edges[0].hash_field = "value";
  }
  reg.tasks["sink"] = [](int) { return std::make_unique<CountingSink>(); };

  bundle.expected_ratio = expected_dataflow_ratio(df);
  return bundle;
}

TopologyBundle build_stats(const AppConfig& cfg, const FixtureMeta& fixture,
                           Backends& backends) {
  const bool city = cfg.dataset == "CITY";
  if (!city && cfg.dataset != "TAXI")
    throw StartupError("unknown dataset: " + cfg.dataset);
  if (fixture.observation_fields.empty())
    throw StartupError("fixture declares no observation fields");

  TopologyBundle bundle;
  bundle.label = "STATS-" + cfg.dataset;
  Dataflow& df = bundle.dataflow;
  Registry& reg = bundle.registry;

  const SchemaDescriptor schema = dataset_schema(cfg.dataset);
  const auto obs_fields = fixture.observation_fields;
  const int n_obs = static_cast<int>(obs_fields.size());
  // 90/10 event window for CITY/TAXI, sliding by one.
  const int avg_window = cfg.avg_window > 0 ? cfg.avg_window : (city ? 90 : 10);
  const double pass = fixture.bloom_pass_fraction;

  TaskDescriptor parse;
  parse.name = "parse";
  parse.kind = TaskKind::flatmap;
  parse.selectivity = {1.0, static_cast<double>(n_obs)};

  TaskDescriptor blf;
  blf.name = "blf";
  blf.kind = TaskKind::filter;
  blf.selectivity = {1.0, pass};

  TaskDescriptor avg;
  avg.name = "avg";
  avg.kind = TaskKind::aggregate;
  avg.stateful = true;
  avg.parallelism = cfg.parallelism;
  avg.window = WindowSpec{WindowMode::count, avg_window, 1};

  TaskDescriptor kal;
  kal.name = "kal";
  kal.kind = TaskKind::transform;
  kal.stateful = true;
  kal.parallelism = cfg.parallelism;

  TaskDescriptor slr;
  slr.name = "slr";
  slr.kind = TaskKind::flatmap;
  slr.stateful = true;
  slr.parallelism = cfg.parallelism;
  slr.selectivity = {1.0, static_cast<double>(cfg.slr_horizon)};

  TaskDescriptor dac;
  dac.name = "dac";
  dac.kind = TaskKind::transform;
  dac.stateful = true;
  dac.parallelism = cfg.parallelism;

  TaskDescriptor mqp;
  mqp.name = "mqp";
  mqp.kind = TaskKind::transform;  // publish and forward to the logging sink

  df.tasks = {source_desc(), parse, blf, avg, kal, slr, dac, mqp, sink_desc()};
  df.edges = {
      {"source", "parse", Routing::round_robin, ""},
      {"parse", "blf", Routing::round_robin, ""},
      // Three concurrent analytic branches, hash-grouped by
      // observation-type + device id (the message routing key).
      {"blf", "avg", Routing::hash, ""},
      {"blf", "kal", Routing::hash, ""},
      {"blf", "dac", Routing::hash, ""},
      {"kal", "slr", Routing::hash, ""},
      // Merged (arrival-order interleave) into the publisher.
      {"avg", "mqp", Routing::round_robin, ""},
      {"slr", "mqp", Routing::round_robin, ""},
      {"dac", "mqp", Routing::round_robin, ""},
      {"mqp", "sink", Routing::round_robin, ""},
  };

  StreamSourceSpec src_spec;
  src_spec.mode = StreamSourceSpec::Mode::replay;
  src_spec.file = fixture.csv_file;
  src_spec.schema = schema;
  src_spec.rate = RateSpec{RateMode::scaled_timestamps, 0, cfg.scale_factor};

  reg.sources["source"] = [src_spec](int inst) {
    return std::make_unique<ReplaySource>(src_spec, /*raw=*/true, inst, 1);
  };
  reg.tasks["parse"] = [schema, obs_fields, id = dataset_id_column(cfg.dataset)](int) {
    return std::make_unique<CsvObsSplitTask>(schema, obs_fields, id);
  };
  auto filter = load_bloom_reference(fixture.bloom_ref_file, cfg.seed);
  reg.tasks["blf"] = [filter](int) {
    return std::make_unique<BloomFilterTask>(
        filter, [](const Message& m, std::string& out) {
          out.clear();
          const std::string* obs = m.get_string("obs_type");
          auto v = m.get_numeric("value");
          if (!obs || !v) return;
          out += *obs;
          out += ':';
          char buf[24];
          auto r = std::to_chars(buf, buf + sizeof buf,
                                 static_cast<long long>(std::llround(*v)));
          out.append(buf, r.ptr);
        });
  };
  reg.tasks["avg"] = [](int) { return std::make_unique<WindowedAverageTask>("value"); };
  reg.tasks["kal"] = [](int) { return std::make_unique<KalmanTask>("value", 1e-4, 1e-2); };
  reg.tasks["slr"] = [n = cfg.slr_window, h = cfg.slr_horizon](int) {
    return std::make_unique<SlidingRegressionTask>("value", n, h);
  };
  reg.tasks["dac"] = [seed = cfg.seed](int inst) {
    return std::make_unique<DistinctCountTask>("value", 10,
                                               seed + static_cast<uint64_t>(inst),
                                               "obs_type");
  };
  reg.tasks["mqp"] = [broker = backends.pubsub, topic = cfg.mqtt_topic,
                      per_branch = cfg.mqtt_per_branch_topics](int) {
    if (!per_branch)
      return std::make_unique<MqttPublishTask>(broker, topic, /*forward=*/true);
    return std::make_unique<MqttPublishTask>(broker, topic + "/branch",
                                             /*forward=*/true);
  };
  reg.tasks["sink"] = [](int) { return std::make_unique<CountingSink>(); };

  bundle.expected_ratio = expected_dataflow_ratio(df);
  return bundle;
}

TopologyBundle build_pred(const AppConfig& cfg, const FixtureMeta& fixture,
                          Backends& backends) {
  const bool city = cfg.dataset == "CITY";
  if (!city && cfg.dataset != "TAXI")
    throw StartupError("unknown dataset: " + cfg.dataset);

  TopologyBundle bundle;
  bundle.label = "PRED-" + cfg.dataset;
  Dataflow& df = bundle.dataflow;
  Registry& reg = bundle.registry;

  const SchemaDescriptor schema = dataset_schema(cfg.dataset);
  // The regression target is normalized against its own sliding mean.
  const std::string target = city ? "temperature" : "fare_amount";
  const int mean_window = city ? 90 : 10;
  const double refresh_s = cfg.refresh_period_s > 0 ? cfg.refresh_period_s : 60.0;

  // Initial models come from the object store (the same place refreshed
  // models are downloaded from).
  auto fetch_model = [&](const std::string& key) {
    auto bytes = backends.objects->get(ObjectRef{"models", key});
    if (!bytes)
      throw StartupError("model artifact missing from object store: " + key);
    return std::string(bytes->begin(), bytes->end());
  };
  const std::string dtc_json = fetch_model("dtc.json");
  const std::string mlr_json = fetch_model("mlr.json");
  // Validate up front; a bad artifact must fail at startup.
  ModelArtifact::parse(dtc_json);
  ModelArtifact::parse(mlr_json);

  TaskDescriptor parse;
  parse.name = "parse";
  parse.kind = TaskKind::transform;

  TaskDescriptor dtc;
  dtc.name = "dtc";
  dtc.kind = TaskKind::transform;

  TaskDescriptor mlr;
  mlr.name = "mlr";
  mlr.kind = TaskKind::transform;

  TaskDescriptor err;
  err.name = "err";
  err.kind = TaskKind::transform;
  err.stateful = true;

  TaskDescriptor group;
  group.name = "group";
  group.kind = TaskKind::transform;

  TaskDescriptor chart;
  chart.name = "chart";
  chart.kind = TaskKind::aggregate;
  chart.stateful = true;  // windowed per group key
  chart.selectivity = {static_cast<double>(cfg.chart_window), 1.0};
  chart.window = WindowSpec{WindowMode::count, cfg.chart_window, cfg.chart_window};

  TaskDescriptor refresh;
  refresh.name = "refresh";
  refresh.kind = TaskKind::source;

  TaskDescriptor fetch;
  fetch.name = "fetch";
  fetch.kind = TaskKind::transform;

  TaskDescriptor upload = sink_desc("upload");

  df.tasks = {source_desc(), parse, dtc, mlr, err, group, chart,
              refresh, fetch, upload};
  df.edges = {
      {"source", "parse", Routing::round_robin, ""},
      // Duplicate fork: classifier and regression both see every message.
      {"parse", "dtc", Routing::duplicate, ""},
      {"parse", "mlr", Routing::duplicate, ""},
      {"mlr", "err", Routing::round_robin, ""},
      {"dtc", "group", Routing::round_robin, ""},
      {"err", "group", Routing::round_robin, ""},
      {"group", "chart", Routing::hash, ""},
      {"chart", "upload", Routing::round_robin, ""},
      // Model refresh stream: periodic trigger, store download, control
      // messages pushed to both prediction tasks.
      {"refresh", "fetch", Routing::round_robin, ""},
      {"fetch", "dtc", Routing::duplicate, ""},
      {"fetch", "mlr", Routing::duplicate, ""},
  };

  StreamSourceSpec src_spec;
  src_spec.mode = StreamSourceSpec::Mode::replay;
  src_spec.file = fixture.csv_file;
  src_spec.schema = schema;
  src_spec.rate = RateSpec{RateMode::scaled_timestamps, 0, cfg.scale_factor};

  // The refresh stream ends with the replay horizon so runs terminate
  // naturally when the trace is exhausted.
  const double span_s = static_cast<double>(fixture.last_ts_ms - fixture.first_ts_ms) /
                        1000.0 / cfg.scale_factor;
  reg.sources["source"] = [src_spec](int inst) {
    return std::make_unique<ReplaySource>(src_spec, /*raw=*/true, inst, 1);
  };
  reg.sources["refresh"] = [refresh_s, span_s](int) {
    return std::make_unique<RefreshTriggerSource>(
        refresh_s, std::vector<std::string>{"dtc.json", "mlr.json"}, span_s);
  };
  reg.tasks["parse"] = [schema](int) { return std::make_unique<CsvParseTask>(schema); };
  reg.tasks["fetch"] = [store = backends.objects](int) {
    IoTaskConfig io;
    io.container = "models";
    return std::make_unique<BlobDownloadTask>(store, io, "model_key",
                                              kModelControlField);
  };
  reg.tasks["dtc"] = [dtc_json](int) {
    return std::make_unique<DecisionTreeTask>(
        ModelArtifact::parse(dtc_json).to_tree());
  };
  reg.tasks["mlr"] = [mlr_json](int) {
    return std::make_unique<MlrTask>(ModelArtifact::parse(mlr_json).to_linear());
  };
  reg.tasks["err"] = [target, mean_window](int) {
    return std::make_unique<ErrorEstimateTask>("prediction", target,
                                               static_cast<size_t>(mean_window));
  };
  // Classifier outputs group by class (plotted as presence); error outputs
  // group by target and plot the normalized error.
  reg.tasks["group"] = [target](int) {
    return std::make_unique<FnTask>([target](Message m, TaskContext& ctx) {
      std::string g;
      double v = 1.0;
      if (const std::string* cls = m.get_string("class")) {
        g = "class:" + *cls;
      } else if (auto e = m.get_numeric("error")) {
        g = "err:" + target;
        v = *e;
      } else if (m.has("error_flagged")) {
        g = "err:" + target;
        v = 0.0;
      } else {
        g = "other";
      }
      m.key = g;
      m.set("plot_group", std::move(g));
      m.set("plot_value", v);
      ctx.emit(std::move(m));
    });
  };
  reg.tasks["chart"] = [](int) {
    return std::make_unique<ChartEmitTask>("plot_group", "plot_value");
  };
  IoTaskConfig chart_io;
  chart_io.container = "charts";
  reg.tasks["upload"] = [store = backends.objects, chart_io](int) {
    return std::make_unique<BlobUploadTask>(store, chart_io, "chart", "chart_key");
  };

  // Control traffic is negligible next to the data stream, so the expected
  // ratio is the data path's: two streams into the chart window per parsed
  // row, one upload per window.
  bundle.expected_ratio = 2.0 / static_cast<double>(cfg.chart_window);
  return bundle;
}

void apply_parallelism_overrides(Dataflow& df,
                                 const std::map<std::string, int>& overrides) {
  for (const auto& [name, par] : overrides) {
    bool found = false;
    for (auto& t : df.tasks) {
      if (t.name == name) {
        t.parallelism = std::max(1, par);
        found = true;
      }
    }
    if (!found)
      throw StartupError("parallelism override names unknown task: " + name);
  }
}

FixtureMeta ensure_fixture(const std::string& dataset,
                           const std::filesystem::path& dir, double hours,
                           uint64_t seed) {
  const std::string base = dataset == "CITY" ? "city" : "taxi";
  const std::filesystem::path meta_path = dir / (base + "_meta.json");
  if (std::filesystem::exists(meta_path)) {
    FixtureMeta meta = FixtureMeta::load(meta_path);
    if (std::filesystem::exists(meta.csv_file) &&
        std::filesystem::exists(meta.bloom_ref_file))
      return meta;
  }
  FixtureSpec spec;
  spec.dataset = dataset;
  spec.hours = hours;
  spec.sensors = dataset == "CITY" ? 24 : 40;
  spec.seed = seed;
  spec.out_dir = dir;
  return synthesize_fixture(spec);
}

AppRun prepare_app(const std::string& app, const AppConfig& cfg,
                   double fixture_hours) {
  AppRun run;
  run.backends = std::make_shared<Backends>();
  run.fixture = ensure_fixture(cfg.dataset, cfg.fixture_dir, fixture_hours, cfg.seed);
  if (app == "STATS") {
    run.bundle = build_stats(cfg, run.fixture, *run.backends);
  } else if (app == "PRED") {
    run.models = write_fixture_models(cfg.fixture_dir / "models", cfg.dataset);
    install_models(*run.backends, run.models.dtc_v1, run.models.mlr_v1);
    run.bundle = build_pred(cfg, run.fixture, *run.backends);
  } else {
    throw StartupError("unknown application: " + app);
  }
  return run;
}

}  // namespace streammark
