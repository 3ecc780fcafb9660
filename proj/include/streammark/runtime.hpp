#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streammark/dataflow.hpp"
#include "streammark/message.hpp"
#include "streammark/telemetry.hpp"

namespace streammark {

class TaskContext;

// User logic for one task instance. Instances are never shared: the registry
// must hand out an independent object per instance, and the executor calls it
// from a single thread only.
class Task {
 public:
  virtual ~Task() = default;
  virtual void start(TaskContext&) {}
  // transform/filter/flatmap/sink path: consume one message, emit 0..N.
  virtual void process(Message m, TaskContext& ctx) = 0;
  // aggregate path: the executor applies the declared window and delivers
  // complete batches here.
  virtual void process_window(std::span<const Message>, TaskContext&) {}
  virtual void finish(TaskContext&) {}
};

// Pull-style source: yields messages with a due time in nanoseconds relative
// to run start. due<=0 means "as fast as the dataflow accepts"; dues must be
// non-decreasing. Exhaustion (nullopt) ends the stream. The threaded executor
// wraps this with a pacer; the deterministic executor consumes the schedule
// directly.
struct TimedMessage {
  int64_t due_ns = 0;
  Message msg;
};

class PullSource {
 public:
  virtual ~PullSource() = default;
  virtual std::optional<TimedMessage> next() = 0;
  const std::map<std::string, uint64_t>& counters() const { return counters_; }

 protected:
  std::map<std::string, uint64_t> counters_;
};

struct Registry {
  std::map<std::string, std::function<std::unique_ptr<Task>(int)>> tasks;
  std::map<std::string, std::function<std::unique_ptr<PullSource>(int)>> sources;
};

class StartupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  // Source-active window in ns; 0 = run until every source exhausts.
  int64_t duration_ns = 0;
  size_t queue_capacity = 10000;
  double jitter_interval_s = 1.0;
  double resource_interval_s = 5.0;
  bool sample_resources = true;
  // Expected dataflow selectivity for the jitter series; defaults to the
  // value derived from the task descriptors.
  std::optional<double> expected_ratio;
  // false aborts at the deadline without draining (peak-rate probes only).
  bool drain = true;
  uint64_t seed = 1;
  size_t latency_record_cap = 10'000'000;
  std::string topology_label;
  std::string config_json;
};

class TaskContext {
 public:
  // Emits a derived message: assigns a fresh id, inherits the causal
  // provenance (ingress time, event time) of the message being processed —
  // for window batches, of the last message in the window.
  void emit(Message m);

  uint64_t& counter(const std::string& name) { return counters_[name]; }
  int instance() const { return instance_; }
  int parallelism() const { return parallelism_; }
  int64_t now_ns() const { return clock_(); }
  uint64_t run_seed() const { return run_seed_; }
  const std::string& task_name() const { return task_name_; }

  // Executor wiring; not for task code.
  std::function<void(Message&&)> deliver_fn;
  std::function<int64_t()> clock_;
  std::atomic<uint64_t>* out_count = nullptr;
  void set_identity(std::string task_name, int instance, int parallelism,
                    uint64_t id_base, uint64_t run_seed);
  void set_current(int64_t ingress_ns, int64_t event_ms);
  std::map<std::string, uint64_t>& counters() { return counters_; }
  uint64_t next_id() { return id_base_ | ++id_seq_; }

 private:
  std::string task_name_;
  int instance_ = 0;
  int parallelism_ = 1;
  uint64_t id_base_ = 0;
  uint64_t id_seq_ = 0;
  uint64_t run_seed_ = 1;
  int64_t current_ingress_ns_ = 0;
  int64_t current_event_ms_ = 0;
  std::map<std::string, uint64_t> counters_;
};

// Live counters for one task instance, readable while the run executes.
struct LiveCounters {
  std::atomic<uint64_t> in{0};
  std::atomic<uint64_t> out{0};
};

class Engine;

// Monitoring view over a running engine.
class RunHandle {
 public:
  explicit RunHandle(Engine* e) : engine_(e) {}
  uint64_t source_emissions() const;
  uint64_t sink_arrivals() const;
  uint64_t task_in(const std::string& task) const;
  uint64_t task_out(const std::string& task) const;
  size_t max_queue_depth() const;
  size_t queue_high_water(const std::string& task) const;
  bool finished() const;

 private:
  Engine* engine_;
};

// Threaded executor: one thread per task instance, bounded queues between
// them, blocking backpressure. start() validates and launches; wait() blocks
// until sources stop, queues drain, and all instances finish.
class Engine {
 public:
  Engine(Dataflow df, Registry reg, RunOptions opt);
  ~Engine();

  void start();
  RawTelemetry wait();
  void stop_sources();

  RunHandle handle() { return RunHandle(this); }

 private:
  friend class RunHandle;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Convenience: start + wait.
RawTelemetry run(Dataflow df, Registry reg, RunOptions opt);

// Deterministic single-threaded executor over a virtual clock: identical
// (dataflow, registry, options, seed) yield byte-identical telemetry.
// Latencies are virtual (zero queueing model); counts, task outputs and all
// rate series are exact.
RawTelemetry run_sim(Dataflow df, Registry reg, RunOptions opt);

}  // namespace streammark
