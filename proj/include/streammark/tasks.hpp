#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "streammark/chart.hpp"
#include "streammark/iobackends.hpp"
#include "streammark/models.hpp"
#include "streammark/mqtt.hpp"
#include "streammark/runtime.hpp"
#include "streammark/sketches.hpp"
#include "streammark/streamgen.hpp"

namespace streammark::tasks {

using streammark::Message;
using streammark::Task;
using streammark::TaskContext;

// ------------------------------------------------------------------ Parse

// XML string field -> one message whose fields are the document's leaf
// elements. Malformed documents are dropped and counted.
class XmlParseTask : public Task {
 public:
  explicit XmlParseTask(std::string field = "xml") : field_(std::move(field)) {}
  void process(Message m, TaskContext& ctx) override;

 private:
  std::string field_;
};

// Raw CSV line -> typed fields per schema (1:1). Parse failures drop + count.
class CsvParseTask : public Task {
 public:
  explicit CsvParseTask(SchemaDescriptor schema) : schema_(std::move(schema)) {}
  void process(Message m, TaskContext& ctx) override;

 private:
  SchemaDescriptor schema_;
};

// Raw CSV line -> one message per observation field (flat map, 1:N).
// Output fields: obs_type, value, id; the routing key is the compact
// "<obs index>:<id>" form.
class CsvObsSplitTask : public Task {
 public:
  CsvObsSplitTask(SchemaDescriptor schema, std::vector<std::string> obs_fields,
                  std::string id_column);
  void process(Message m, TaskContext& ctx) override;

 private:
  SchemaDescriptor schema_;
  std::vector<std::string> obs_fields_;
  std::vector<int> obs_columns_;
  int id_column_ = -1;
  std::vector<std::string> cells_;
};

// ----------------------------------------------------------------- Filter

// Membership filter against a pre-loaded reference set. The key function
// renders a message into the set's element space (default: the named field),
// writing into a reused buffer to stay off the allocator.
class BloomFilterTask : public Task {
 public:
  using KeyFn = std::function<void(const Message&, std::string& out)>;

  BloomFilterTask(std::shared_ptr<const BloomFilter> filter, std::string field);
  BloomFilterTask(std::shared_ptr<const BloomFilter> filter, KeyFn key_fn);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::shared_ptr<const BloomFilter> filter_;
  KeyFn key_fn_;
  std::string key_;
};

// Loads a reference set file (one element per line) into a filter sized for
// roughly 1% false positives (or the default 9586/7 geometry, whichever is
// larger).
std::shared_ptr<BloomFilter> load_bloom_reference(const std::string& path,
                                                  uint64_t seed);

// ------------------------------------------------------------- Statistical

// Aggregate: arithmetic mean of a numeric field over each window batch.
class WindowedAverageTask : public Task {
 public:
  explicit WindowedAverageTask(std::string field) : field_(std::move(field)) {}
  void process(Message, TaskContext&) override {}
  void process_window(std::span<const Message> batch, TaskContext& ctx) override;

 private:
  std::string field_;
  std::vector<double> values_;
};

// Stateful 1:1 transform: approximate distinct count of a field, one LogLog
// sketch per group (default: one global sketch).
class DistinctCountTask : public Task {
 public:
  DistinctCountTask(std::string field, int bucket_bits, uint64_t seed,
                    std::string group_field = "");
  void process(Message m, TaskContext& ctx) override;

 private:
  std::string field_;
  int bits_;
  uint64_t seed_;
  std::string group_field_;
  std::map<std::string, LogLogSketch> sketches_;
};

// Scalar Kalman smoothing of a numeric field, one filter per routing key.
// The smoothed value replaces the field.
class KalmanTask : public Task {
 public:
  KalmanTask(std::string field, double process_noise, double measurement_noise)
      : field_(std::move(field)), q_(process_noise), r_(measurement_noise) {}
  void process(Message m, TaskContext& ctx) override;

  struct State {
    double estimate = 0;
    double variance = 1.0;
    bool initialized = false;
  };

 private:
  std::string field_;
  double q_, r_;
  std::map<std::string, State> states_;
};

// One scalar predict/update step; shared by the task and its tests.
double kalman_step(KalmanTask::State& s, double z, double q, double r);

// Stateful 1:1 transform: AMS second-moment estimate of a field.
class SecondMomentTask : public Task {
 public:
  SecondMomentTask(std::string field, int rows, int cols, uint64_t seed)
      : field_(std::move(field)), sketch_(rows, cols, seed) {}
  void process(Message m, TaskContext& ctx) override;

 private:
  std::string field_;
  AmsSketch sketch_;
};

// ------------------------------------------------------------- Predictive

// Version-gated holder for hot-swappable models; swaps apply between
// messages (the instance's single queue serializes control and data).
template <typename ModelT>
class ModelSlot {
 public:
  // Returns false (stale) unless the incoming version is strictly greater.
  bool swap(ModelT m) {
    if (current_ && m.version <= current_->version) return false;
    current_ = std::make_shared<ModelT>(std::move(m));
    return true;
  }
  const ModelT* get() const { return current_.get(); }
  int version() const { return current_ ? current_->version : 0; }

 private:
  std::shared_ptr<ModelT> current_;
};

inline constexpr const char* kModelControlField = "__model";

// Decision-tree classification (1:1). Output adds `class` and
// `model_version`. Control messages carrying a model document are consumed.
class DecisionTreeTask : public Task {
 public:
  explicit DecisionTreeTask(DecisionTreeModel initial,
                            std::string out_field = "class");
  void process(Message m, TaskContext& ctx) override;
  int model_version() const { return slot_.version(); }

 private:
  ModelSlot<DecisionTreeModel> slot_;
  std::string out_field_;
};

// Multi-variate linear regression prediction (1:1); missing features drop
// the message. Output adds `prediction` and `model_version`.
class MlrTask : public Task {
 public:
  explicit MlrTask(LinearModel initial, std::string out_field = "prediction");
  void process(Message m, TaskContext& ctx) override;
  int model_version() const { return slot_.version(); }

 private:
  ModelSlot<LinearModel> slot_;
  std::string out_field_;
};

// Sliding-window univariate OLS (flat map, N:M): once the per-key window is
// full, each arrival refits and emits M predictions at the next M time steps.
class SlidingRegressionTask : public Task {
 public:
  SlidingRegressionTask(std::string value_field, int window, int horizon);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::string field_;
  size_t window_;
  int horizon_;
  std::map<std::string, std::deque<std::pair<double, double>>> windows_;
  std::vector<double> ts_, ys_;
};

// Closed-form OLS over (t, y); false when degenerate (all t equal).
bool ols_fit(std::span<const double> t, std::span<const double> y,
             double& slope, double& intercept);

// Normalized prediction error |p - o| / sliding_mean(o), per key.
class ErrorEstimateTask : public Task {
 public:
  ErrorEstimateTask(std::string prediction_field, std::string observed_field,
                    size_t mean_window);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::string pred_field_, obs_field_;
  size_t window_;
  std::map<std::string, std::deque<double>> history_;
  std::vector<double> scratch_;
};

// Aggregate: renders each window batch of (group, value) pairs as one static
// vector chart (a polyline per group), deterministic for identical input.
class ChartEmitTask : public Task {
 public:
  ChartEmitTask(std::string group_field, std::string value_field);
  void process(Message, TaskContext&) override {}
  void process_window(std::span<const Message> batch, TaskContext& ctx) override;

 private:
  std::string group_field_, value_field_;
  uint64_t chart_seq_ = 0;
};

// Stand-alone form of the chart rendering used by the task.
std::string render_group_chart(
    std::span<const std::pair<std::string, double>> pairs);

// -------------------------------------------------------------------- IO

struct IoTaskConfig {
  std::string container = "bench";
  RetryPolicy retry;
};

// Object download keyed by a message field (source/transform, 1:1); the
// object's bytes are attached as a string field.
class BlobDownloadTask : public Task {
 public:
  BlobDownloadTask(std::shared_ptr<ObjectStore> store, IoTaskConfig cfg,
                   std::string key_field, std::string out_field = "payload");
  void process(Message m, TaskContext& ctx) override;

 private:
  std::shared_ptr<ObjectStore> store_;
  IoTaskConfig cfg_;
  std::string key_field_, out_field_;
};

// Object upload (sink): payload from a field when configured, else the
// rendered message; key from a field or the message id. Forwarding mode
// re-emits the input so the task can sit mid-dataflow.
class BlobUploadTask : public Task {
 public:
  BlobUploadTask(std::shared_ptr<ObjectStore> store, IoTaskConfig cfg,
                 std::string payload_field = "", std::string key_field = "",
                 bool forward = false);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::shared_ptr<ObjectStore> store_;
  IoTaskConfig cfg_;
  std::string payload_field_, key_field_;
  bool forward_;
};

// Table row lookup (1:1): pk/rk from message fields, row attributes merged
// into the message; absent rows pass through and are counted.
class TableQueryTask : public Task {
 public:
  TableQueryTask(std::shared_ptr<TableStore> store, IoTaskConfig cfg,
                 std::string table, std::string pk_field, std::string rk_field);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::shared_ptr<TableStore> store_;
  IoTaskConfig cfg_;
  std::string table_, pk_field_, rk_field_;
};

// MQTT publish against the in-process broker (default) or a TCP broker.
// Sink by default; in forwarding mode it re-emits its input (1:1) so it can
// sit mid-dataflow ahead of a logging sink.
class MqttPublishTask : public Task {
 public:
  MqttPublishTask(std::shared_ptr<PubSubBroker> broker, std::string topic,
                  bool forward = false);
  MqttPublishTask(std::shared_ptr<mqtt::TcpPublisher> publisher,
                  std::string topic, bool forward = false);
  void process(Message m, TaskContext& ctx) override;

 private:
  std::shared_ptr<PubSubBroker> broker_;
  std::shared_ptr<mqtt::TcpPublisher> tcp_;
  std::string topic_;
  bool forward_;
  std::string render_;
  std::vector<uint8_t> payload_;
};

// ---------------------------------------------------------------- Support

class IdentityTask : public Task {
 public:
  void process(Message m, TaskContext& ctx) override { ctx.emit(std::move(m)); }
};

// Counting sink; optionally captures messages for test inspection.
class CountingSink : public Task {
 public:
  explicit CountingSink(std::function<void(const Message&)> observe = nullptr)
      : observe_(std::move(observe)) {}
  void process(Message m, TaskContext&) override {
    if (observe_) observe_(m);
  }

 private:
  std::function<void(const Message&)> observe_;
};

// Busy-precise sleep transform for latency-injection tests.
class SleepTask : public Task {
 public:
  explicit SleepTask(double millis) : ns_(static_cast<int64_t>(millis * 1e6)) {}
  void process(Message m, TaskContext& ctx) override;

 private:
  int64_t ns_;
};

// Arbitrary function task, for tests and plumbing.
class FnTask : public Task {
 public:
  using Fn = std::function<void(Message, TaskContext&)>;
  explicit FnTask(Fn fn) : fn_(std::move(fn)) {}
  void process(Message m, TaskContext& ctx) override { fn_(std::move(m), ctx); }

 private:
  Fn fn_;
};

}  // namespace streammark::tasks
