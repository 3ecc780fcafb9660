#include "streammark/dataflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace streammark {

const char* to_string(TaskKind k) {
  switch (k) {
    case TaskKind::source: return "source";
    case TaskKind::sink: return "sink";
    case TaskKind::transform: return "transform";
    case TaskKind::filter: return "filter";
    case TaskKind::flatmap: return "flatmap";
    case TaskKind::aggregate: return "aggregate";
  }
  return "?";
}

const char* to_string(Routing r) {
  switch (r) {
    case Routing::duplicate: return "duplicate";
    case Routing::round_robin: return "round_robin";
    case Routing::hash: return "hash";
  }
  return "?";
}

const char* to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::duplicate_task_name: return "duplicate_task_name";
    case ViolationCode::bad_parallelism: return "bad_parallelism";
    case ViolationCode::unknown_task: return "unknown_task";
    case ViolationCode::source_has_inbound: return "source_has_inbound";
    case ViolationCode::sink_has_outbound: return "sink_has_outbound";
    case ViolationCode::transform_selectivity: return "transform_selectivity";
    case ViolationCode::filter_selectivity: return "filter_selectivity";
    case ViolationCode::aggregate_window_missing: return "aggregate_window_missing";
    case ViolationCode::window_invalid: return "window_invalid";
    case ViolationCode::stateful_parallel_routing: return "stateful_parallel_routing";
    case ViolationCode::no_source: return "no_source";
    case ViolationCode::unreachable_task: return "unreachable_task";
    case ViolationCode::disconnected_graph: return "disconnected_graph";
    case ViolationCode::cycle: return "cycle";
  }
  return "?";
}

const TaskDescriptor* Dataflow::find_task(const std::string& name) const {
  for (const auto& t : tasks)
    if (t.name == name) return &t;
  return nullptr;
}

std::vector<const Edge*> Dataflow::in_edges(const std::string& task) const {
  std::vector<const Edge*> r;
  for (const auto& e : edges)
    if (e.to == task) r.push_back(&e);
  return r;
}

std::vector<const Edge*> Dataflow::out_edges(const std::string& task) const {
  std::vector<const Edge*> r;
  for (const auto& e : edges)
    if (e.from == task) r.push_back(&e);
  return r;
}

namespace {

bool has_cycle(const Dataflow& df) {
  // Colors: 0 unvisited, 1 on stack, 2 done.
  std::map<std::string, int> color;
  for (const auto& t : df.tasks) color[t.name] = 0;

  // Iterative DFS to keep deep graphs safe.
  struct Frame {
    std::string node;
    size_t next = 0;
  };
  for (const auto& t : df.tasks) {
    if (color[t.name] != 0) continue;
    std::vector<Frame> stack{{t.name, 0}};
    color[t.name] = 1;
    while (!stack.empty()) {
      Frame& f = stack.back();
      auto outs = df.out_edges(f.node);
      if (f.next < outs.size()) {
        const std::string& next = outs[f.next++]->to;
        auto it = color.find(next);
        if (it == color.end()) continue;  // unknown target, reported elsewhere
        if (it->second == 1) return true;
        if (it->second == 0) {
          it->second = 1;
          stack.push_back({next, 0});
        }
      } else {
        color[f.node] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Violation> validate(const Dataflow& df) {
  std::vector<Violation> out;
  auto add = [&](ViolationCode c, std::string subject, std::string detail) {
    out.push_back(Violation{c, std::move(subject), std::move(detail)});
  };

  std::set<std::string> names;
  for (const auto& t : df.tasks) {
    if (!names.insert(t.name).second)
      add(ViolationCode::duplicate_task_name, t.name, "task name declared twice");
    if (t.parallelism < 1)
      add(ViolationCode::bad_parallelism, t.name, "parallelism must be >= 1");
    if (t.kind == TaskKind::transform &&
        (t.selectivity.in != t.selectivity.out))
      add(ViolationCode::transform_selectivity, t.name, "transform must be 1:1");
    if (t.kind == TaskKind::filter && t.selectivity.out > t.selectivity.in)
      add(ViolationCode::filter_selectivity, t.name,
          "filter selectivity must have out <= in");
    if (t.kind == TaskKind::aggregate && !t.window)
      add(ViolationCode::aggregate_window_missing, t.name,
          "aggregate requires a window");
    if (t.window) {
      if (t.window->width <= 0 || t.window->slide <= 0 ||
          t.window->slide > t.window->width)
        add(ViolationCode::window_invalid, t.name,
            "window requires width > 0 and 0 < slide <= width");
    }
  }

  for (const auto& e : df.edges) {
    if (!names.count(e.from))
      add(ViolationCode::unknown_task, e.from + "->" + e.to,
          "edge references unknown task '" + e.from + "'");
    if (!names.count(e.to))
      add(ViolationCode::unknown_task, e.from + "->" + e.to,
          "edge references unknown task '" + e.to + "'");
  }

  for (const auto& t : df.tasks) {
    if (t.kind == TaskKind::source && !df.in_edges(t.name).empty())
      add(ViolationCode::source_has_inbound, t.name, "source has inbound edges");
    if (t.kind == TaskKind::sink && !df.out_edges(t.name).empty())
      add(ViolationCode::sink_has_outbound, t.name, "sink has outbound edges");
    if (t.stateful && t.parallelism > 1) {
      for (const Edge* e : df.in_edges(t.name)) {
        if (e->routing != Routing::hash) {
          add(ViolationCode::stateful_parallel_routing, t.name,
              "stateful parallel task requires hash routing on edge " +
                  e->from + "->" + e->to);
        }
      }
    }
  }

  // Reachability from sources.
  std::vector<std::string> sources;
  for (const auto& t : df.tasks)
    if (t.kind == TaskKind::source) sources.push_back(t.name);
  if (sources.empty()) {
    add(ViolationCode::no_source, "", "dataflow has no source task");
  } else {
    std::set<std::string> reached(sources.begin(), sources.end());
    std::vector<std::string> frontier = sources;
    while (!frontier.empty()) {
      std::string n = std::move(frontier.back());
      frontier.pop_back();
      for (const Edge* e : df.out_edges(n))
        if (names.count(e->to) && reached.insert(e->to).second)
          frontier.push_back(e->to);
    }
    for (const auto& t : df.tasks)
      if (t.kind != TaskKind::source && !reached.count(t.name))
        add(ViolationCode::unreachable_task, t.name,
            "task not reachable from any source");
  }

  // Weak connectivity.
  if (!df.tasks.empty()) {
    std::set<std::string> seen{df.tasks.front().name};
    std::vector<std::string> frontier{df.tasks.front().name};
    while (!frontier.empty()) {
      std::string n = std::move(frontier.back());
      frontier.pop_back();
      for (const auto& e : df.edges) {
        if (e.from == n && names.count(e.to) && seen.insert(e.to).second)
          frontier.push_back(e.to);
        if (e.to == n && names.count(e.from) && seen.insert(e.from).second)
          frontier.push_back(e.from);
      }
    }
    if (seen.size() != names.size())
      add(ViolationCode::disconnected_graph, "",
          "graph is not connected");
  }

  // The graph model permits cycles but the v1 scheduler does not run them.
  if (has_cycle(df))
    add(ViolationCode::cycle, "", "cycles are not supported by the scheduler");

  return out;
}

double expected_task_ratio(const TaskDescriptor& t) {
  if (t.kind == TaskKind::aggregate && t.window &&
      t.window->mode == WindowMode::count) {
    return 1.0 / static_cast<double>(t.window->slide);
  }
  if (t.selectivity.in <= 0) return 0.0;
  return t.selectivity.ratio();
}

std::map<std::string, double> expected_task_inflow(const Dataflow& df) {
  // Flow propagation: one unit per source emission. Every edge carries the
  // full output of its producer (routing only picks instances).
  std::map<std::string, double> inflow;
  for (const auto& t : df.tasks)
    if (t.kind == TaskKind::source) inflow[t.name] = 1.0;

  // Process in topological order; validate() already rejects cycles.
  std::map<std::string, size_t> pending;
  for (const auto& t : df.tasks) pending[t.name] = df.in_edges(t.name).size();
  std::vector<std::string> ready;
  for (const auto& [name, deg] : pending)
    if (deg == 0) ready.push_back(name);

  while (!ready.empty()) {
    std::string n = std::move(ready.back());
    ready.pop_back();
    const TaskDescriptor* t = df.find_task(n);
    if (!t) continue;
    double in = inflow.count(n) ? inflow[n] : 0.0;
    double out = (t->kind == TaskKind::source) ? in : in * expected_task_ratio(*t);
    for (const Edge* e : df.out_edges(n)) {
      inflow[e->to] += out;
      if (--pending[e->to] == 0) ready.push_back(e->to);
    }
  }
  return inflow;
}

double expected_dataflow_ratio(const Dataflow& df) {
  auto inflow = expected_task_inflow(df);
  double sink_flow = 0.0;
  for (const auto& t : df.tasks)
    if (t.kind == TaskKind::sink && inflow.count(t.name))
      sink_flow += inflow[t.name];
  return sink_flow;
}

}  // namespace streammark
