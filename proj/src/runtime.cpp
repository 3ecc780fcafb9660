#include "streammark/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "streammark/common.hpp"
#include "streammark/metrics.hpp"
#include "streammark/queue.hpp"
#include "streammark/resource.hpp"
#include "streammark/window.hpp"

namespace streammark {

void TaskContext::set_identity(std::string task_name, int instance,
                               int parallelism, uint64_t id_base,
                               uint64_t run_seed) {
  task_name_ = std::move(task_name);
  instance_ = instance;
  parallelism_ = parallelism;
  id_base_ = id_base;
  run_seed_ = run_seed;
}

void TaskContext::set_current(int64_t ingress_ns, int64_t event_ms) {
  current_ingress_ns_ = ingress_ns;
  current_event_ms_ = event_ms;
}

void TaskContext::emit(Message m) {
  m.id = next_id();
  m.ingress_time_ns = current_ingress_ns_;
  if (m.event_time_ms == 0) m.event_time_ms = current_event_ms_;
  if (out_count) out_count->fetch_add(1, std::memory_order_relaxed);
  deliver_fn(std::move(m));
}

namespace {

struct Envelope {
  Message msg;
  bool eos = false;
};

constexpr size_t kPopBatch = 256;
// Messages due within this window are emitted as one burst. Bursting keeps
// the per-message wakeup count down at high rates (paced rate error stays
// inside the documented 2% pacing tolerance); low-rate streams are unaffected
// because their inter-arrival gaps exceed the window.
constexpr int64_t kBurstWindowNs = 4'000'000;
constexpr int64_t kStopPollNs = 2'000'000;    // source stop-flag poll cadence

}  // namespace

struct Engine::Impl {
  Dataflow df;
  Registry reg;
  RunOptions opt;

  struct Worker;

  struct CompiledEdge {
    Routing routing = Routing::round_robin;
    std::string hash_field;
    std::vector<Worker*> targets;  // one per target instance
    uint64_t rr = 0;               // owned by the producer thread
    // Producer-side staging: outputs buffer per target and flush in bulk, so
    // queue locks amortize over batches instead of single messages.
    std::vector<std::vector<Envelope>> staged;  // parallel to targets
  };

  static constexpr size_t kStageFlush = 64;

  struct Worker {
    const TaskDescriptor* desc = nullptr;
    int instance = 0;
    size_t global_index = 0;
    std::unique_ptr<BoundedQueue<Envelope>> queue;  // null for sources
    std::unique_ptr<Task> task;
    std::unique_ptr<PullSource> source;
    // Stateless aggregates window per instance; stateful ones window per
    // routing key (state partitioned by key).
    std::unique_ptr<Windower> windower;
    std::map<std::string, Windower> keyed_windowers;
    bool keyed_windows = false;
    std::vector<CompiledEdge> out;
    TaskContext ctx;
    LiveCounters live;
    size_t expected_eos = 0;

    // Sink-side latency records, reservoir-bounded.
    std::vector<LatencyRecord> latencies;
    uint64_t latency_seen = 0;
    size_t latency_cap = 0;
    Rng reservoir{1};

    std::thread thread;
  };

  std::vector<std::unique_ptr<Worker>> workers;  // all instances, df order
  std::string host = host_name();

  std::atomic<bool> stop_sources{false};
  std::atomic<bool> abort_run{false};
  std::atomic<bool> sources_done{false};
  std::atomic<int> sources_running{0};
  std::atomic<bool> started{false};
  std::atomic<bool> done{false};

  int64_t run_start_ns = 0;
  double expected_ratio = 1.0;

  // Interval series, written by the monitor thread only.
  std::vector<ThroughputSample> throughput;
  std::vector<JitterSample> jitter;
  std::vector<QueueSample> queue_samples;
  std::vector<ResourceSample> resources;
  std::thread monitor_thread;
  std::thread resource_thread;
  std::thread controller_thread;

  Impl(Dataflow d, Registry r, RunOptions o)
      : df(std::move(d)), reg(std::move(r)), opt(o) {}

  uint64_t sum_source_out() const {
    uint64_t n = 0;
    for (const auto& w : workers)
      if (w->desc->kind == TaskKind::source)
        n += w->live.out.load(std::memory_order_relaxed);
    return n;
  }

  uint64_t sum_sink_in() const {
    uint64_t n = 0;
    for (const auto& w : workers)
      if (w->desc->kind == TaskKind::sink)
        n += w->live.in.load(std::memory_order_relaxed);
    return n;
  }

  size_t max_queue_depth() const {
    size_t d = 0;
    for (const auto& w : workers)
      if (w->queue) d = std::max(d, w->queue->depth());
    return d;
  }

  void build() {
    auto violations = validate(df);
    if (!violations.empty()) {
      std::string msg = "dataflow invalid:";
      for (const auto& v : violations)
        msg += " [" + std::string(to_string(v.code)) + " " + v.subject + "]";
      throw StartupError(msg);
    }

    size_t global = 0;
    for (const auto& t : df.tasks) {
      const bool is_source = t.kind == TaskKind::source;
      if (is_source) {
        if (!reg.sources.count(t.name))
          throw StartupError("no source implementation registered for '" +
                             t.name + "'");
      } else if (!reg.tasks.count(t.name)) {
        throw StartupError("no task implementation registered for '" + t.name +
                           "'");
      }
      for (int i = 0; i < t.parallelism; ++i) {
        auto w = std::make_unique<Worker>();
        w->desc = &t;
        w->instance = i;
        w->global_index = global++;
        if (is_source) {
          w->source = reg.sources.at(t.name)(i);
        } else {
          w->task = reg.tasks.at(t.name)(i);
          w->queue = std::make_unique<BoundedQueue<Envelope>>(opt.queue_capacity);
          if (t.kind == TaskKind::aggregate && t.window) {
            if (t.stateful)
              w->keyed_windows = true;
            else
              w->windower = std::make_unique<Windower>(*t.window);
          }
        }
        w->ctx.set_identity(t.name, i, t.parallelism,
                            (w->global_index + 1) << 40, opt.seed);
        w->ctx.clock_ = [] { return now_ns(); };
        w->ctx.out_count = &w->live.out;
        w->reservoir = Rng(mix64(opt.seed ^ (w->global_index * 0x9e37u)));
        workers.push_back(std::move(w));
      }
    }

    // Latency reservoir budget, split across sink instances.
    size_t sink_instances = 0;
    for (const auto& w : workers)
      if (w->desc->kind == TaskKind::sink) ++sink_instances;
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::sink)
        w->latency_cap =
            std::max<size_t>(1024, opt.latency_record_cap /
                                       std::max<size_t>(1, sink_instances));

    // Compile edges per producer instance (round-robin counters and staging
    // buffers are thread-local to the producer).
    std::map<std::string, std::vector<Worker*>> by_task;
    for (auto& w : workers) by_task[w->desc->name].push_back(w.get());
    for (auto& w : workers) {
      for (const Edge* e : df.out_edges(w->desc->name)) {
        CompiledEdge ce;
        ce.routing = e->routing;
        ce.hash_field = e->hash_field;
        ce.targets = by_task.at(e->to);
        // Stagger round-robin start per producer to spread load.
        ce.rr = w->global_index;
        ce.staged.resize(ce.targets.size());
        w->out.push_back(std::move(ce));
      }
      auto deliver = [this, wp = w.get()](Message&& m) { route(*wp, std::move(m)); };
      w->ctx.deliver_fn = deliver;
    }

    // EOS expectations: every upstream instance sends one EOS down each edge.
    for (auto& w : workers) {
      size_t expected = 0;
      for (const Edge* e : df.in_edges(w->desc->name)) {
        const TaskDescriptor* from = df.find_task(e->from);
        expected += static_cast<size_t>(from->parallelism);
      }
      w->expected_eos = expected;
    }

    expected_ratio = opt.expected_ratio.value_or(expected_dataflow_ratio(df));
  }

  void stage(CompiledEdge& e, size_t target_idx, Envelope&& env) {
    auto& buf = e.staged[target_idx];
    buf.push_back(std::move(env));
    if (buf.size() >= kStageFlush) e.targets[target_idx]->queue->push_many(buf);
  }

  void route(Worker& producer, Message&& m) {
    const size_t n_edges = producer.out.size();
    for (size_t ei = 0; ei < n_edges; ++ei) {
      CompiledEdge& e = producer.out[ei];
      const bool last_edge = ei + 1 == n_edges;
      switch (e.routing) {
        case Routing::duplicate: {
          // Copy to every instance of the target.
          for (size_t ti = 0; ti < e.targets.size(); ++ti) {
            const bool last = last_edge && ti + 1 == e.targets.size();
            if (last)
              stage(e, ti, Envelope{std::move(m), false});
            else
              stage(e, ti, Envelope{m, false});
          }
          break;
        }
        case Routing::round_robin: {
          size_t ti = e.rr++ % e.targets.size();
          if (last_edge)
            stage(e, ti, Envelope{std::move(m), false});
          else
            stage(e, ti, Envelope{m, false});
          break;
        }
        case Routing::hash: {
          uint64_t h = 0;
          if (!e.hash_field.empty()) {
            if (const Value* v = m.find(e.hash_field)) {
              h = hash_str(Message::render_value(*v));
            } else {
              producer.ctx.counter("hash_key_missing") += 1;
            }
          } else if (m.key) {
            h = hash_str(*m.key);
          } else {
            producer.ctx.counter("hash_key_missing") += 1;
          }
          size_t ti = h % e.targets.size();
          if (last_edge)
            stage(e, ti, Envelope{std::move(m), false});
          else
            stage(e, ti, Envelope{m, false});
          break;
        }
      }
    }
  }

  // Pushes everything staged; called before any blocking wait or sleep so no
  // output lingers while the producer idles.
  void flush_staged(Worker& producer) {
    for (CompiledEdge& e : producer.out)
      for (size_t ti = 0; ti < e.targets.size(); ++ti)
        if (!e.staged[ti].empty()) e.targets[ti]->queue->push_many(e.staged[ti]);
  }

  void send_eos(Worker& producer) {
    flush_staged(producer);
    for (CompiledEdge& e : producer.out)
      for (Worker* t : e.targets) t->queue->push(Envelope{Message{}, true});
  }

  void source_loop(Worker* w) {
    std::optional<TimedMessage> pending = w->source->next();
    while (pending && !stop_sources.load(std::memory_order_relaxed) &&
           !abort_run.load(std::memory_order_relaxed)) {
      const int64_t due_abs = run_start_ns + std::max<int64_t>(0, pending->due_ns);
      const int64_t remain = due_abs - now_ns();
      if (remain > kBurstWindowNs) {
        // Hybrid pacing: coarse sleeps down to the burst window, polling the
        // stop flag; no spinning so paced sources stay off the CPUs.
        flush_staged(*w);
        std::this_thread::sleep_for(std::chrono::nanoseconds(
            std::min<int64_t>(remain - kBurstWindowNs / 2, kStopPollNs)));
        continue;
      }
      Message m = std::move(pending->msg);
      m.id = w->ctx.next_id();
      m.ingress_time_ns = now_ns();
      w->live.out.fetch_add(1, std::memory_order_relaxed);
      route(*w, std::move(m));
      pending = w->source->next();
    }
    for (const auto& [k, v] : w->source->counters()) w->ctx.counter(k) += v;
    send_eos(*w);
    if (sources_running.fetch_sub(1) == 1)
      sources_done.store(true, std::memory_order_release);
  }

  void handle_data(Worker* w, Message&& m) {
    w->live.in.fetch_add(1, std::memory_order_relaxed);
    if (w->desc->kind == TaskKind::sink) {
      const int64_t arrival = w->ctx.now_ns();
      LatencyRecord rec{m.id, m.ingress_time_ns, arrival, host,
                        w->desc->name};
      ++w->latency_seen;
      if (w->latencies.size() < w->latency_cap) {
        w->latencies.push_back(std::move(rec));
      } else {
        uint64_t j = w->reservoir.below(w->latency_seen);
        if (j < w->latencies.size()) w->latencies[j] = std::move(rec);
      }
    }
    w->ctx.set_current(m.ingress_time_ns, m.event_time_ms);
    if (w->windower || w->keyed_windows) {
      TaskContext& ctx = w->ctx;
      Task* task = w->task.get();
      Windower* win = w->windower.get();
      if (w->keyed_windows) {
        static const std::string no_key;
        auto [it, inserted] = w->keyed_windowers.try_emplace(
            m.key ? *m.key : no_key, *w->desc->window);
        win = &it->second;
      }
      win->push(std::move(m), [&ctx, task](std::span<const Message> batch) {
        // Aggregates inherit provenance from the last message of the window.
        ctx.set_current(batch.back().ingress_time_ns, batch.back().event_time_ms);
        task->process_window(batch, ctx);
      });
    } else {
      w->task->process(std::move(m), w->ctx);
    }
  }

  void worker_loop(Worker* w) {
    w->task->start(w->ctx);
    std::vector<Envelope> batch;
    batch.reserve(kPopBatch);
    size_t eos_seen = 0;
    bool finished = w->expected_eos == 0;  // disconnected task: nothing to do
    while (!finished && !abort_run.load(std::memory_order_relaxed)) {
      batch.clear();
      size_t n = w->queue->pop_batch(batch, kPopBatch);
      if (n == 0) {
        if (abort_run.load(std::memory_order_relaxed)) break;
        continue;
      }
      for (auto& env : batch) {
        if (env.eos) {
          if (++eos_seen == w->expected_eos) finished = true;
          continue;
        }
        handle_data(w, std::move(env.msg));
      }
      // Nothing staged may linger across a blocking pop.
      flush_staged(*w);
    }
    w->task->finish(w->ctx);
    send_eos(*w);
  }

  void monitor_loop() {
    const int64_t interval_ns =
        static_cast<int64_t>(opt.jitter_interval_s * 1e9);
    uint64_t prev_src = 0, prev_snk = 0;
    int64_t prev_t = run_start_ns;
    int64_t next_tick = run_start_ns + interval_ns;
    while (true) {
      const bool ending = sources_done.load(std::memory_order_acquire) ||
                          abort_run.load(std::memory_order_relaxed);
      int64_t now = now_ns();
      if (now < next_tick && !ending) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        continue;
      }
      const uint64_t src = sum_source_out();
      const uint64_t snk = sum_sink_in();
      const double dt = static_cast<double>(now - prev_t) / 1e9;
      const double elapsed = static_cast<double>(now - run_start_ns) / 1e9;
      // Trailing fragments shorter than half an interval are discarded.
      if (dt >= opt.jitter_interval_s * 0.5 && elapsed > 0) {
        ThroughputSample ts;
        ts.interval_start_s = static_cast<double>(prev_t - run_start_ns) / 1e9;
        ts.interval_len_s = dt;
        ts.input_rate = static_cast<double>(src - prev_src) / dt;
        ts.output_rate = static_cast<double>(snk - prev_snk) / dt;
        ts.long_run_mean_input = static_cast<double>(src) / elapsed;
        throughput.push_back(ts);
        double j = compute_jitter(ts.output_rate, expected_ratio,
                                  ts.input_rate, ts.long_run_mean_input);
        jitter.push_back(
            JitterSample{ts.interval_start_s, std::isnan(j) ? 0.0 : j,
                         !std::isnan(j)});
        queue_samples.push_back(
            QueueSample{ts.interval_start_s,
                        static_cast<uint64_t>(max_queue_depth())});
        prev_src = src;
        prev_snk = snk;
        prev_t = now;
      }
      if (ending) break;
      next_tick = now + interval_ns;
    }
  }

  void resource_loop() {
    ResourceProbe probe;
    probe.sample();  // prime
    const auto period =
        std::chrono::milliseconds(static_cast<int64_t>(opt.resource_interval_s * 1e3));
    auto next = std::chrono::steady_clock::now() + period;
    while (!done.load(std::memory_order_relaxed) &&
           !sources_done.load(std::memory_order_acquire)) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
      if (std::chrono::steady_clock::now() < next) continue;
      next += period;
      CpuMemReading r = probe.sample();
      if (r.ok)
        resources.push_back(
            ResourceSample{static_cast<double>(now_ns() - run_start_ns) / 1e9,
                           host, r.cpu_percent, r.mem_percent});
    }
  }

  void start() {
    build();
    run_start_ns = now_ns();
    int n_sources = 0;
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::source) ++n_sources;
    sources_running.store(n_sources);

    for (auto& w : workers)
      if (w->desc->kind != TaskKind::source)
        w->thread = std::thread([this, wp = w.get()] { worker_loop(wp); });
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::source)
        w->thread = std::thread([this, wp = w.get()] { source_loop(wp); });

    monitor_thread = std::thread([this] { monitor_loop(); });
    if (opt.sample_resources)
      resource_thread = std::thread([this] { resource_loop(); });

    if (opt.duration_ns > 0) {
      controller_thread = std::thread([this] {
        const int64_t deadline = run_start_ns + opt.duration_ns;
        while (now_ns() < deadline && !done.load(std::memory_order_relaxed) &&
               !stop_sources.load(std::memory_order_relaxed)) {
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        stop_sources.store(true, std::memory_order_relaxed);
        if (!opt.drain) {
          // Give in-flight pushes a beat, then cut the queues.
          std::this_thread::sleep_for(std::chrono::milliseconds(50));
          abort_run.store(true, std::memory_order_relaxed);
          for (auto& w : workers)
            if (w->queue) w->queue->close();
        }
      });
    }
    started.store(true);
  }

  RawTelemetry wait() {
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::source && w->thread.joinable())
        w->thread.join();
    for (auto& w : workers)
      if (w->desc->kind != TaskKind::source && w->thread.joinable())
        w->thread.join();
    done.store(true);
    stop_sources.store(true);
    if (controller_thread.joinable()) controller_thread.join();
    if (monitor_thread.joinable()) monitor_thread.join();
    if (resource_thread.joinable()) resource_thread.join();

    RawTelemetry t;
    t.topology = opt.topology_label;
    t.seed = opt.seed;
    t.duration_s = opt.duration_ns > 0
                       ? static_cast<double>(opt.duration_ns) / 1e9
                       : 0.0;
    t.expected_ratio = expected_ratio;
    t.mode = "threads";
    t.config_json = opt.config_json;
    t.throughput = std::move(throughput);
    t.jitter = std::move(jitter);
    t.queue_depths = std::move(queue_samples);
    t.resources = std::move(resources);
    for (auto& w : workers) {
      TaskCounterSnapshot c;
      c.task = w->desc->name;
      c.instance = w->instance;
      c.in = w->live.in.load();
      c.out = w->live.out.load();
      c.queue_high_water = w->queue ? w->queue->high_water() : 0;
      c.named = w->ctx.counters();
      t.counters.push_back(std::move(c));
      for (auto& rec : w->latencies) t.latency.push_back(std::move(rec));
      if (w->latency_seen > w->latencies.size())
        t.latency_records_dropped += w->latency_seen - w->latencies.size();
    }
    t.total_source_emissions = sum_source_out();
    t.total_sink_arrivals = sum_sink_in();
    if (t.duration_s == 0.0) {
      // Natural end: derive the active window from the samples.
      if (!t.throughput.empty())
        t.duration_s = t.throughput.back().interval_start_s +
                       t.throughput.back().interval_len_s;
    }
    return t;
  }
};

Engine::Engine(Dataflow df, Registry reg, RunOptions opt)
    : impl_(std::make_unique<Impl>(std::move(df), std::move(reg), opt)) {}

Engine::~Engine() {
  if (impl_ && impl_->started.load() && !impl_->done.load()) {
    impl_->stop_sources.store(true);
    impl_->wait();
  }
}

void Engine::start() { impl_->start(); }

RawTelemetry Engine::wait() { return impl_->wait(); }

void Engine::stop_sources() { impl_->stop_sources.store(true); }

uint64_t RunHandle::source_emissions() const {
  return engine_->impl_->sum_source_out();
}
uint64_t RunHandle::sink_arrivals() const {
  return engine_->impl_->sum_sink_in();
}
uint64_t RunHandle::task_in(const std::string& task) const {
  uint64_t n = 0;
  for (const auto& w : engine_->impl_->workers)
    if (w->desc->name == task) n += w->live.in.load();
  return n;
}
uint64_t RunHandle::task_out(const std::string& task) const {
  uint64_t n = 0;
  for (const auto& w : engine_->impl_->workers)
    if (w->desc->name == task) n += w->live.out.load();
  return n;
}
size_t RunHandle::max_queue_depth() const {
  return engine_->impl_->max_queue_depth();
}
size_t RunHandle::queue_high_water(const std::string& task) const {
  size_t hw = 0;
  for (const auto& w : engine_->impl_->workers)
    if (w->desc->name == task && w->queue)
      hw = std::max(hw, w->queue->high_water());
  return hw;
}
bool RunHandle::finished() const { return engine_->impl_->done.load(); }

RawTelemetry run(Dataflow df, Registry reg, RunOptions opt) {
  Engine e(std::move(df), std::move(reg), opt);
  e.start();
  return e.wait();
}

}  // namespace streammark
