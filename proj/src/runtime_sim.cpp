#include <deque>
#include <map>
#include <queue>

#include "streammark/common.hpp"
#include "streammark/metrics.hpp"
#include "streammark/runtime.hpp"
#include "streammark/window.hpp"

namespace streammark {

// Single-threaded executor over a virtual clock. Sources are merged by due
// time (ties broken by declaration order, then sequence); each emission is
// processed through the graph to exhaustion before the clock advances.
// Counts, rate series and task outputs are exact and reproducible; latency is
// virtual (no queueing model) and recorded as zero wait.

namespace {

struct SimWorker {
  const TaskDescriptor* desc = nullptr;
  int instance = 0;
  size_t global_index = 0;
  std::unique_ptr<Task> task;
  std::unique_ptr<PullSource> source;
  std::unique_ptr<Windower> windower;
  std::map<std::string, Windower> keyed_windowers;
  bool keyed_windows = false;
  std::deque<Message> fifo;
  size_t fifo_high_water = 0;
  TaskContext ctx;
  uint64_t in = 0, out = 0;
  std::vector<LatencyRecord> latencies;

  struct OutEdge {
    Routing routing;
    std::string hash_field;
    std::vector<SimWorker*> targets;
    uint64_t rr = 0;
  };
  std::vector<OutEdge> out_edges;
};

}  // namespace

RawTelemetry run_sim(Dataflow df, Registry reg, RunOptions opt) {
  auto violations = validate(df);
  if (!violations.empty()) {
    std::string msg = "dataflow invalid:";
    for (const auto& v : violations)
      msg += " [" + std::string(to_string(v.code)) + " " + v.subject + "]";
    throw StartupError(msg);
  }

  int64_t vnow = 0;

  std::vector<std::unique_ptr<SimWorker>> workers;
  size_t global = 0;
  for (const auto& t : df.tasks) {
    const bool is_source = t.kind == TaskKind::source;
    if (is_source && !reg.sources.count(t.name))
      throw StartupError("no source implementation registered for '" + t.name +
                         "'");
    if (!is_source && !reg.tasks.count(t.name))
      throw StartupError("no task implementation registered for '" + t.name +
                         "'");
    for (int i = 0; i < t.parallelism; ++i) {
      auto w = std::make_unique<SimWorker>();
      w->desc = &t;
      w->instance = i;
      w->global_index = global++;
      if (is_source) {
        w->source = reg.sources.at(t.name)(i);
      } else {
        w->task = reg.tasks.at(t.name)(i);
        if (t.kind == TaskKind::aggregate && t.window) {
          if (t.stateful)
            w->keyed_windows = true;
          else
            w->windower = std::make_unique<Windower>(*t.window);
        }
      }
      w->ctx.set_identity(t.name, i, t.parallelism,
                          (w->global_index + 1) << 40, opt.seed);
      w->ctx.clock_ = [&vnow] { return vnow; };
      workers.push_back(std::move(w));
    }
  }

  std::map<std::string, std::vector<SimWorker*>> by_task;
  for (auto& w : workers) by_task[w->desc->name].push_back(w.get());
  for (auto& w : workers) {
    for (const Edge* e : df.out_edges(w->desc->name)) {
      SimWorker::OutEdge oe;
      oe.routing = e->routing;
      oe.hash_field = e->hash_field;
      oe.targets = by_task.at(e->to);
      oe.rr = w->global_index;
      w->out_edges.push_back(std::move(oe));
    }
  }

  auto enqueue = [](SimWorker& target, Message&& m) {
    target.fifo.push_back(std::move(m));
    target.fifo_high_water = std::max(target.fifo_high_water, target.fifo.size());
  };

  auto route = [&](SimWorker& producer, Message&& m) {
    const size_t n_edges = producer.out_edges.size();
    for (size_t ei = 0; ei < n_edges; ++ei) {
      auto& e = producer.out_edges[ei];
      const bool last_edge = ei + 1 == n_edges;
      switch (e.routing) {
        case Routing::duplicate:
          for (size_t ti = 0; ti < e.targets.size(); ++ti) {
            if (last_edge && ti + 1 == e.targets.size())
              enqueue(*e.targets[ti], std::move(m));
            else
              enqueue(*e.targets[ti], Message(m));
          }
          break;
        case Routing::round_robin: {
          SimWorker* t = e.targets[e.rr++ % e.targets.size()];
          if (last_edge)
            enqueue(*t, std::move(m));
          else
            enqueue(*t, Message(m));
          break;
        }
        case Routing::hash: {
          uint64_t h = 0;
          if (!e.hash_field.empty()) {
            if (const Value* v = m.find(e.hash_field))
              h = hash_str(Message::render_value(*v));
            else
              producer.ctx.counter("hash_key_missing") += 1;
          } else if (m.key) {
            h = hash_str(*m.key);
          } else {
            producer.ctx.counter("hash_key_missing") += 1;
          }
          SimWorker* t = e.targets[h % e.targets.size()];
          if (last_edge)
            enqueue(*t, std::move(m));
          else
            enqueue(*t, Message(m));
          break;
        }
      }
    }
  };

  for (auto& w : workers)
    w->ctx.deliver_fn = [&route, wp = w.get()](Message&& m) {
      route(*wp, std::move(m));
    };

  const std::string host = "sim";

  auto process_worker_fifo = [&](SimWorker& w) {
    while (!w.fifo.empty()) {
      Message m = std::move(w.fifo.front());
      w.fifo.pop_front();
      ++w.in;
      if (w.desc->kind == TaskKind::sink) {
        w.latencies.push_back(
            LatencyRecord{m.id, m.ingress_time_ns, vnow, host, w.desc->name});
      }
      w.ctx.set_current(m.ingress_time_ns, m.event_time_ms);
      if (w.windower || w.keyed_windows) {
        TaskContext& ctx = w.ctx;
        Task* task = w.task.get();
        Windower* win = w.windower.get();
        if (w.keyed_windows) {
          static const std::string no_key;
          auto [it, inserted] = w.keyed_windowers.try_emplace(
              m.key ? *m.key : no_key, *w.desc->window);
          win = &it->second;
        }
        win->push(std::move(m), [&ctx, task](std::span<const Message> b) {
          ctx.set_current(b.back().ingress_time_ns, b.back().event_time_ms);
          task->process_window(b, ctx);
        });
      } else {
        w.task->process(std::move(m), w.ctx);
      }
    }
  };

  auto settle = [&] {
    bool any = true;
    while (any) {
      any = false;
      for (auto& w : workers) {
        if (!w->fifo.empty()) {
          any = true;
          process_worker_fifo(*w);
        }
      }
    }
  };

  // out counters for non-sources are tracked through ctx.emit; wire them.
  std::vector<std::atomic<uint64_t>> outs(workers.size());
  for (size_t i = 0; i < workers.size(); ++i) {
    outs[i].store(0);
    workers[i]->ctx.out_count = &outs[i];
  }

  for (auto& w : workers)
    if (w->task) w->task->start(w->ctx);

  // Merge source schedules.
  struct PendingEmission {
    int64_t due;
    size_t worker_idx;
    uint64_t seq;
    Message msg;
  };
  auto later = [](const PendingEmission& a, const PendingEmission& b) {
    if (a.due != b.due) return a.due > b.due;
    if (a.worker_idx != b.worker_idx) return a.worker_idx > b.worker_idx;
    return a.seq > b.seq;
  };
  std::priority_queue<PendingEmission, std::vector<PendingEmission>,
                      decltype(later)>
      pending(later);
  std::vector<uint64_t> seqs(workers.size(), 0);
  auto pull = [&](size_t idx) {
    auto tm = workers[idx]->source->next();
    if (!tm) return;
    int64_t due = std::max<int64_t>(0, tm->due_ns);
    if (opt.duration_ns > 0 && due >= opt.duration_ns) return;  // source stops
    pending.push(PendingEmission{due, idx, seqs[idx]++, std::move(tm->msg)});
  };
  for (size_t i = 0; i < workers.size(); ++i)
    if (workers[i]->source) pull(i);

  const int64_t interval_ns = static_cast<int64_t>(opt.jitter_interval_s * 1e9);
  int64_t next_boundary = interval_ns;
  uint64_t prev_src = 0, prev_snk = 0;

  RawTelemetry t;
  auto sum_src = [&] {
    uint64_t n = 0;
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::source) n += w->out;
    return n;
  };
  auto sum_snk = [&] {
    uint64_t n = 0;
    for (auto& w : workers)
      if (w->desc->kind == TaskKind::sink) n += w->in;
    return n;
  };
  auto max_fifo = [&] {
    size_t d = 0;
    for (auto& w : workers) d = std::max(d, w->fifo.size());
    return d;
  };

  const double expected_ratio =
      opt.expected_ratio.value_or(expected_dataflow_ratio(df));

  auto sample_boundary = [&](int64_t boundary_ns) {
    const double dt = opt.jitter_interval_s;
    const uint64_t src = sum_src();
    const uint64_t snk = sum_snk();
    ThroughputSample ts;
    ts.interval_start_s = static_cast<double>(boundary_ns - interval_ns) / 1e9;
    ts.interval_len_s = dt;
    ts.input_rate = static_cast<double>(src - prev_src) / dt;
    ts.output_rate = static_cast<double>(snk - prev_snk) / dt;
    ts.long_run_mean_input =
        static_cast<double>(src) / (static_cast<double>(boundary_ns) / 1e9);
    t.throughput.push_back(ts);
    double j = compute_jitter(ts.output_rate, expected_ratio, ts.input_rate,
                              ts.long_run_mean_input);
    t.jitter.push_back(JitterSample{ts.interval_start_s,
                                    std::isnan(j) ? 0.0 : j, !std::isnan(j)});
    t.queue_depths.push_back(QueueSample{
        ts.interval_start_s, static_cast<uint64_t>(max_fifo())});
    prev_src = src;
    prev_snk = snk;
  };

  int64_t last_due = 0;
  while (!pending.empty()) {
    PendingEmission e =
        std::move(const_cast<PendingEmission&>(pending.top()));
    pending.pop();
    while (e.due >= next_boundary) {
      vnow = next_boundary;
      sample_boundary(next_boundary);
      next_boundary += interval_ns;
    }
    vnow = e.due;
    last_due = e.due;
    SimWorker& src = *workers[e.worker_idx];
    Message m = std::move(e.msg);
    m.id = src.ctx.next_id();
    m.ingress_time_ns = vnow;
    ++src.out;
    route(src, std::move(m));
    settle();
    pull(e.worker_idx);
  }
  // Close out boundaries inside the active window.
  const int64_t end_ns = opt.duration_ns > 0 ? opt.duration_ns : last_due;
  while (next_boundary <= end_ns) {
    vnow = next_boundary;
    sample_boundary(next_boundary);
    next_boundary += interval_ns;
  }

  for (auto& w : workers) {
    if (w->task) w->task->finish(w->ctx);
    if (w->source)
      for (const auto& [k, v] : w->source->counters()) w->ctx.counter(k) += v;
  }

  t.topology = opt.topology_label;
  t.seed = opt.seed;
  t.duration_s = static_cast<double>(end_ns) / 1e9;
  t.expected_ratio = expected_ratio;
  t.mode = "sim";
  t.config_json = opt.config_json;
  for (size_t i = 0; i < workers.size(); ++i) {
    auto& w = workers[i];
    TaskCounterSnapshot c;
    c.task = w->desc->name;
    c.instance = w->instance;
    c.in = w->in;
    c.out = w->desc->kind == TaskKind::source ? w->out : outs[i].load();
    c.queue_high_water = w->fifo_high_water;
    c.named = w->ctx.counters();
    t.counters.push_back(std::move(c));
    for (auto& rec : w->latencies) t.latency.push_back(std::move(rec));
  }
  t.total_source_emissions = sum_src();
  t.total_sink_arrivals = sum_snk();
  return t;
}

}  // namespace streammark
