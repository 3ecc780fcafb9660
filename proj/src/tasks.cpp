#include "streammark/tasks.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include "streammark/csv.hpp"
#include "streammark/kernels.hpp"
#include "streammark/xml.hpp"

namespace streammark::tasks {

// ------------------------------------------------------------------ Parse

void XmlParseTask::process(Message m, TaskContext& ctx) {
  const std::string* doc = m.get_string(field_);
  if (!doc) {
    ++ctx.counter("parse_errors");
    return;
  }
  auto leaves = parse_xml_leaves(*doc);
  if (!leaves) {
    ++ctx.counter("parse_errors");
    return;
  }
  Message out;
  out.key = m.key;
  out.fields = std::move(*leaves);
  ctx.emit(std::move(out));
}

void CsvParseTask::process(Message m, TaskContext& ctx) {
  const std::string* raw = m.get_string("raw");
  if (!raw) {
    ++ctx.counter("parse_errors");
    return;
  }
  auto cells = split_csv_line(*raw, schema_.delimiter);
  if (cells.size() != schema_.columns.size()) {
    ++ctx.counter("parse_errors");
    return;
  }
  Message out;
  out.key = m.key;
  for (size_t i = 0; i < cells.size(); ++i) {
    const ColumnSpec& c = schema_.columns[i];
    switch (c.type) {
      case ColumnType::i64:
        out.set(c.name, static_cast<int64_t>(std::strtoll(cells[i].c_str(), nullptr, 10)));
        break;
      case ColumnType::f64:
        out.set(c.name, std::strtod(cells[i].c_str(), nullptr));
        break;
      case ColumnType::timestamp: {
        int64_t ts = 0;
        if (!parse_timestamp_ms(cells[i], ts)) {
          ++ctx.counter("parse_errors");
          return;
        }
        out.set(c.name, ts);
        break;
      }
      case ColumnType::str:
        out.set(c.name, std::move(cells[i]));
        break;
    }
  }
  ctx.emit(std::move(out));
}

CsvObsSplitTask::CsvObsSplitTask(SchemaDescriptor schema,
                                 std::vector<std::string> obs_fields,
                                 std::string id_column)
    : schema_(std::move(schema)), obs_fields_(std::move(obs_fields)) {
  for (const auto& obs : obs_fields_) obs_columns_.push_back(schema_.index_of(obs));
  id_column_ = schema_.index_of(id_column);
}

void CsvObsSplitTask::process(Message m, TaskContext& ctx) {
  const std::string* raw = m.get_string("raw");
  if (!raw) {
    ++ctx.counter("parse_errors");
    return;
  }
  split_csv_into(*raw, schema_.delimiter, cells_);
  if (cells_.size() != schema_.columns.size()) {
    ++ctx.counter("parse_errors");
    return;
  }
  const std::string& id =
      id_column_ >= 0 ? cells_[static_cast<size_t>(id_column_)] : cells_[0];
  for (size_t oi = 0; oi < obs_fields_.size(); ++oi) {
    int col = obs_columns_[oi];
    if (col < 0) continue;
    const std::string& cell = cells_[static_cast<size_t>(col)];
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str()) {
      ++ctx.counter("non_numeric_observations");
      continue;
    }
    Message out;
    out.fields.reserve(3);
    out.set("obs_type", obs_fields_[oi]);
    out.set("value", v);
    out.set("id", id);
    // Compact routing key: observation index + device id.
    std::string key;
    key.reserve(id.size() + 4);
    key += static_cast<char>('0' + oi % 10);
    if (oi >= 10) key += static_cast<char>('0' + oi / 10);
    key += ':';
    key += id;
    out.key = std::move(key);
    ctx.emit(std::move(out));
  }
}

// ----------------------------------------------------------------- Filter

BloomFilterTask::BloomFilterTask(std::shared_ptr<const BloomFilter> filter,
                                 std::string field)
    : filter_(std::move(filter)) {
  key_fn_ = [field = std::move(field)](const Message& m, std::string& out) {
    out.clear();
    if (const Value* v = m.find(field)) Message::append_value(*v, out);
  };
}

BloomFilterTask::BloomFilterTask(std::shared_ptr<const BloomFilter> filter,
                                 KeyFn key_fn)
    : filter_(std::move(filter)), key_fn_(std::move(key_fn)) {}

void BloomFilterTask::process(Message m, TaskContext& ctx) {
  key_fn_(m, key_);
  if (filter_->may_contain(key_)) {
    ctx.emit(std::move(m));
  } else {
    ++ctx.counter("filtered_out");
  }
}

std::shared_ptr<BloomFilter> load_bloom_reference(const std::string& path,
                                                  uint64_t seed) {
  std::ifstream f(path);
  if (!f) throw StartupError("cannot open bloom reference set: " + path);
  std::vector<std::string> elements;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) elements.push_back(line);
  }
  // ~1% FPR sizing (9.586 bits/element, 7 hashes), floored at the default
  // 9586/7 geometry.
  size_t bits = std::max<size_t>(9586, elements.size() * 10);
  auto filter = std::make_shared<BloomFilter>(bits, 7, seed);
  for (const auto& e : elements) filter->insert(e);
  return filter;
}

// ------------------------------------------------------------- Statistical

void WindowedAverageTask::process_window(std::span<const Message> batch,
                                         TaskContext& ctx) {
  values_.clear();
  for (const auto& m : batch) {
    auto v = m.get_numeric(field_);
    if (!v) {
      ++ctx.counter("non_numeric_excluded");
      continue;
    }
    values_.push_back(*v);
  }
  if (values_.empty()) return;
  Message out;
  out.key = batch.back().key;
  if (const Value* obs = batch.back().find("obs_type")) out.set("obs_type", *obs);
  out.set("average", kernels::mean(values_));
  out.set("window_count", static_cast<int64_t>(values_.size()));
  ctx.emit(std::move(out));
}

DistinctCountTask::DistinctCountTask(std::string field, int bucket_bits,
                                     uint64_t seed, std::string group_field)
    : field_(std::move(field)),
      bits_(bucket_bits),
      seed_(seed),
      group_field_(std::move(group_field)) {}

void DistinctCountTask::process(Message m, TaskContext& ctx) {
  std::string group;
  if (!group_field_.empty())
    if (const Value* g = m.find(group_field_)) group = Message::render_value(*g);
  auto it = sketches_.find(group);
  if (it == sketches_.end())
    it = sketches_.emplace(group, LogLogSketch(bits_, seed_)).first;
  const Value* v = m.find(field_);
  if (!v) {
    ++ctx.counter("missing_field");
    return;
  }
  it->second.add(Message::render_value(*v));
  Message out = std::move(m);
  out.set("distinct_estimate", it->second.estimate());
  ctx.emit(std::move(out));
}

double kalman_step(KalmanTask::State& s, double z, double q, double r) {
  if (!s.initialized) {
    s.initialized = true;
    s.estimate = z;
    s.variance = r > 0 ? r : 1.0;
    return s.estimate;
  }
  s.variance += q;
  const double gain = s.variance / (s.variance + r);
  s.estimate += gain * (z - s.estimate);
  s.variance *= (1.0 - gain);
  if (s.variance <= 0) s.variance = 1e-12;  // keep p > 0 after update
  return s.estimate;
}

void KalmanTask::process(Message m, TaskContext& ctx) {
  auto z = m.get_numeric(field_);
  if (!z) {
    ++ctx.counter("missing_field");
    return;
  }
  static const std::string no_key;
  State& s = states_[m.key ? *m.key : no_key];
  double smoothed = kalman_step(s, *z, q_, r_);
  Message out = std::move(m);
  out.set(field_, smoothed);
  ctx.emit(std::move(out));
}

void SecondMomentTask::process(Message m, TaskContext& ctx) {
  const Value* v = m.find(field_);
  if (!v) {
    ++ctx.counter("missing_field");
    return;
  }
  sketch_.add(Message::render_value(*v));
  Message out = std::move(m);
  out.set("f2_estimate", sketch_.estimate());
  ctx.emit(std::move(out));
}

// ------------------------------------------------------------- Predictive

DecisionTreeTask::DecisionTreeTask(DecisionTreeModel initial,
                                   std::string out_field)
    : out_field_(std::move(out_field)) {
  slot_.swap(std::move(initial));
}

void DecisionTreeTask::process(Message m, TaskContext& ctx) {
  if (const std::string* doc = m.get_string(kModelControlField)) {
    try {
      ModelArtifact a = ModelArtifact::parse(*doc);
      if (a.kind != ModelKind::decision_tree) {
        ++ctx.counter("model_kind_skipped");
        return;
      }
      if (slot_.swap(a.to_tree()))
        ++ctx.counter("model_swaps");
      else
        ++ctx.counter("stale_model_ignored");
    } catch (const ModelError&) {
      ++ctx.counter("model_parse_errors");
    }
    return;
  }
  auto outcome = slot_.get()->classify(m);
  if (outcome.used_default_branch) ++ctx.counter("default_branch_used");
  Message out = std::move(m);
  out.set(out_field_, outcome.label);
  out.set("model_version", static_cast<int64_t>(slot_.version()));
  ctx.emit(std::move(out));
}

MlrTask::MlrTask(LinearModel initial, std::string out_field)
    : out_field_(std::move(out_field)) {
  slot_.swap(std::move(initial));
}

void MlrTask::process(Message m, TaskContext& ctx) {
  if (const std::string* doc = m.get_string(kModelControlField)) {
    try {
      ModelArtifact a = ModelArtifact::parse(*doc);
      if (a.kind != ModelKind::linear_regression) {
        ++ctx.counter("model_kind_skipped");
        return;
      }
      if (slot_.swap(a.to_linear()))
        ++ctx.counter("model_swaps");
      else
        ++ctx.counter("stale_model_ignored");
    } catch (const ModelError&) {
      ++ctx.counter("model_parse_errors");
    }
    return;
  }
  auto y = slot_.get()->predict(m);
  if (!y) {
    ++ctx.counter("missing_feature");
    return;
  }
  Message out = std::move(m);
  out.set(out_field_, *y);
  out.set("model_version", static_cast<int64_t>(slot_.version()));
  ctx.emit(std::move(out));
}

bool ols_fit(std::span<const double> t, std::span<const double> y,
             double& slope, double& intercept) {
  const size_t n = t.size();
  if (n < 2) return false;
  const double tbar = kernels::mean(t);
  const double ybar = kernels::mean(y);
  // Center before multiplying: epoch-scale abscissae would cancel
  // catastrophically through the raw-sums shortcut.
  double stt = 0, sty = 0;
  for (size_t i = 0; i < n; ++i) {
    const double dt = t[i] - tbar;
    stt += dt * dt;
    sty += dt * (y[i] - ybar);
  }
  if (stt <= 0) return false;  // all t identical
  slope = sty / stt;
  intercept = ybar - slope * tbar;
  return true;
}

SlidingRegressionTask::SlidingRegressionTask(std::string value_field,
                                             int window, int horizon)
    : field_(std::move(value_field)),
      window_(static_cast<size_t>(window)),
      horizon_(horizon) {
  if (window < 2) throw StartupError("sliding regression requires window >= 2");
  if (horizon < 1) throw StartupError("sliding regression requires horizon >= 1");
}

void SlidingRegressionTask::process(Message m, TaskContext& ctx) {
  auto y = m.get_numeric(field_);
  if (!y) {
    ++ctx.counter("missing_field");
    return;
  }
  static const std::string no_key;
  auto& win = windows_[m.key ? *m.key : no_key];
  win.emplace_back(static_cast<double>(m.event_time_ms), *y);
  if (win.size() > window_) win.pop_front();
  if (win.size() < window_) return;

  ts_.clear();
  ys_.clear();
  for (auto [t, v] : win) {
    ts_.push_back(t);
    ys_.push_back(v);
  }
  double slope = 0, intercept = 0;
  if (!ols_fit(ts_, ys_, slope, intercept)) {
    ++ctx.counter("degenerate_window");
    return;
  }
  // Future steps continue the window's mean spacing.
  const double step =
      (ts_.back() - ts_.front()) / static_cast<double>(window_ - 1);
  for (int j = 1; j <= horizon_; ++j) {
    const double tp = ts_.back() + step * j;
    Message out;
    out.key = m.key;
    if (const Value* obs = m.find("obs_type")) out.set("obs_type", *obs);
    out.set("t_predicted", tp);
    out.set("prediction", intercept + slope * tp);
    out.set("step", static_cast<int64_t>(j));
    ctx.emit(std::move(out));
  }
}

ErrorEstimateTask::ErrorEstimateTask(std::string prediction_field,
                                     std::string observed_field,
                                     size_t mean_window)
    : pred_field_(std::move(prediction_field)),
      obs_field_(std::move(observed_field)),
      window_(mean_window ? mean_window : 1) {}

void ErrorEstimateTask::process(Message m, TaskContext& ctx) {
  auto p = m.get_numeric(pred_field_);
  auto o = m.get_numeric(obs_field_);
  if (!p || !o) {
    ++ctx.counter("missing_field");
    return;
  }
  static const std::string no_key;
  auto& hist = history_[m.key ? *m.key : no_key];
  hist.push_back(*o);
  if (hist.size() > window_) hist.pop_front();
  scratch_.assign(hist.begin(), hist.end());
  const double mean = kernels::mean(scratch_);
  Message out = std::move(m);
  if (mean == 0.0) {
    // The normalization is undefined; flag rather than divide.
    ++ctx.counter("undefined_error_mean");
    out.set("error_flagged", int64_t{1});
  } else {
    out.set("error", std::fabs(*p - *o) / mean);
  }
  ctx.emit(std::move(out));
}

std::string render_group_chart(
    std::span<const std::pair<std::string, double>> pairs) {
  // Group in first-appearance order; x is the pair's index in the window.
  std::vector<ChartSeries> series;
  size_t idx = 0;
  for (const auto& [group, value] : pairs) {
    ChartSeries* s = nullptr;
    for (auto& existing : series)
      if (existing.group == group) {
        s = &existing;
        break;
      }
    if (!s) {
      series.push_back(ChartSeries{group, {}});
      s = &series.back();
    }
    s->points.emplace_back(static_cast<double>(idx), value);
    ++idx;
  }
  ChartOptions opt;
  opt.title = "grouped-window";
  return render_line_chart(series, opt);
}

ChartEmitTask::ChartEmitTask(std::string group_field, std::string value_field)
    : group_field_(std::move(group_field)), value_field_(std::move(value_field)) {}

void ChartEmitTask::process_window(std::span<const Message> batch,
                                   TaskContext& ctx) {
  std::vector<std::pair<std::string, double>> pairs;
  pairs.reserve(batch.size());
  for (const auto& m : batch) {
    const Value* g = m.find(group_field_);
    auto v = m.get_numeric(value_field_);
    if (!g || !v) {
      ++ctx.counter("chart_inputs_skipped");
      continue;
    }
    pairs.emplace_back(Message::render_value(*g), *v);
  }
  if (pairs.empty()) return;
  Message out;
  out.set("chart", render_group_chart(pairs));
  char key[64];
  std::snprintf(key, sizeof key, "chart-%06llu-%d.svg",
                static_cast<unsigned long long>(chart_seq_++), ctx.instance());
  out.set("chart_key", std::string(key));
  ctx.emit(std::move(out));
}

// -------------------------------------------------------------------- IO

BlobDownloadTask::BlobDownloadTask(std::shared_ptr<ObjectStore> store,
                                   IoTaskConfig cfg, std::string key_field,
                                   std::string out_field)
    : store_(std::move(store)),
      cfg_(std::move(cfg)),
      key_field_(std::move(key_field)),
      out_field_(std::move(out_field)) {}

void BlobDownloadTask::process(Message m, TaskContext& ctx) {
  const Value* k = m.find(key_field_);
  if (!k) {
    ++ctx.counter("missing_key");
    return;
  }
  ObjectRef ref{cfg_.container, Message::render_value(*k)};
  std::optional<std::vector<uint8_t>> bytes;
  bool ok = with_retries(
      cfg_.retry, [&] { bytes = store_->get(ref); }, &ctx.counter("io_retries"));
  if (!ok) {
    ++ctx.counter("io_failures");
    return;
  }
  if (!bytes) {
    ++ctx.counter("not_found");
    return;
  }
  Message out = std::move(m);
  out.set(out_field_, std::string(bytes->begin(), bytes->end()));
  ctx.emit(std::move(out));
}

BlobUploadTask::BlobUploadTask(std::shared_ptr<ObjectStore> store,
                               IoTaskConfig cfg, std::string payload_field,
                               std::string key_field, bool forward)
    : store_(std::move(store)),
      cfg_(std::move(cfg)),
      payload_field_(std::move(payload_field)),
      key_field_(std::move(key_field)),
      forward_(forward) {}

void BlobUploadTask::process(Message m, TaskContext& ctx) {
  std::string payload;
  if (!payload_field_.empty()) {
    const std::string* p = m.get_string(payload_field_);
    if (!p) {
      ++ctx.counter("missing_payload");
      return;
    }
    payload = *p;
  } else {
    payload = m.render_csv();
  }
  std::string key;
  if (!key_field_.empty()) {
    if (const Value* k = m.find(key_field_)) key = Message::render_value(*k);
  }
  if (key.empty()) key = "msg-" + std::to_string(m.id);
  ObjectRef ref{cfg_.container, key};
  std::vector<uint8_t> bytes(payload.begin(), payload.end());
  bool ok = with_retries(
      cfg_.retry, [&] { store_->put(ref, bytes); }, &ctx.counter("io_retries"));
  if (!ok)
    ++ctx.counter("io_failures");
  else
    ++ctx.counter("uploads");
  if (forward_) ctx.emit(std::move(m));
}

TableQueryTask::TableQueryTask(std::shared_ptr<TableStore> store,
                               IoTaskConfig cfg, std::string table,
                               std::string pk_field, std::string rk_field)
    : store_(std::move(store)),
      cfg_(std::move(cfg)),
      table_(std::move(table)),
      pk_field_(std::move(pk_field)),
      rk_field_(std::move(rk_field)) {}

void TableQueryTask::process(Message m, TaskContext& ctx) {
  TableQuery q;
  q.table = table_;
  if (const Value* pk = m.find(pk_field_)) q.partition_key = Message::render_value(*pk);
  if (!rk_field_.empty())
    if (const Value* rk = m.find(rk_field_)) q.row_key = Message::render_value(*rk);
  std::optional<TableRow> row;
  bool ok = with_retries(
      cfg_.retry, [&] { row = store_->query(q); }, &ctx.counter("io_retries"));
  if (!ok) {
    ++ctx.counter("io_failures");
    return;
  }
  Message out = std::move(m);
  if (row) {
    for (auto& [k, v] : *row) out.set(k, v);
  } else {
    ++ctx.counter("empty_results");
  }
  ctx.emit(std::move(out));
}

MqttPublishTask::MqttPublishTask(std::shared_ptr<PubSubBroker> broker,
                                 std::string topic, bool forward)
    : broker_(std::move(broker)), topic_(std::move(topic)), forward_(forward) {}

MqttPublishTask::MqttPublishTask(std::shared_ptr<mqtt::TcpPublisher> publisher,
                                 std::string topic, bool forward)
    : tcp_(std::move(publisher)), topic_(std::move(topic)), forward_(forward) {}

void MqttPublishTask::process(Message m, TaskContext& ctx) {
  m.render_csv_into(render_);
  payload_.assign(render_.begin(), render_.end());
  if (broker_) {
    broker_->publish(topic_, payload_);
    ++ctx.counter("published");
  } else if (tcp_) {
    if (tcp_->publish(topic_, payload_))
      ++ctx.counter("published");
    else
      ++ctx.counter("publish_failures");
  }
  if (forward_) ctx.emit(std::move(m));
}

// ---------------------------------------------------------------- Support

void SleepTask::process(Message m, TaskContext& ctx) {
  // Coarse sleep then a short spin, so injected service time is tight.
  const int64_t start = now_ns();
  const int64_t deadline = start + ns_;
  const int64_t coarse = ns_ - 1'000'000;
  if (coarse > 0)
    std::this_thread::sleep_for(std::chrono::nanoseconds(coarse));
  while (now_ns() < deadline) {
  }
  ctx.emit(std::move(m));
}

}  // namespace streammark::tasks
