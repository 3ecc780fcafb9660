#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace streammark {

enum class TaskKind { source, sink, transform, filter, flatmap, aggregate };

const char* to_string(TaskKind k);

enum class WindowMode { count, time };

struct WindowSpec {
  WindowMode mode = WindowMode::count;
  int64_t width = 1;  // messages (count) or ms (time)
  int64_t slide = 1;  // must be <= width
};

// Declared in:out ratio, used for expectation checks (jitter, conservation).
struct Selectivity {
  double in = 1.0;
  double out = 1.0;
  double ratio() const { return out / in; }
};

enum class Routing { duplicate, round_robin, hash };

const char* to_string(Routing r);

// An edge always carries the full output stream of `from`; routing selects
// the target instance. duplicate delivers to every instance of `to`,
// round_robin rotates, hash pins a key to one instance for the run.
// hash_field names the message field holding the key; empty means the
// message's routing key.
struct Edge {
  std::string from;
  std::string to;
  Routing routing = Routing::round_robin;
  std::string hash_field;
};

struct TaskDescriptor {
  std::string name;
  TaskKind kind = TaskKind::transform;
  Selectivity selectivity{};
  int parallelism = 1;
  bool stateful = false;
  std::optional<WindowSpec> window;
};

struct Dataflow {
  std::vector<TaskDescriptor> tasks;
  std::vector<Edge> edges;

  const TaskDescriptor* find_task(const std::string& name) const;
  std::vector<const Edge*> in_edges(const std::string& task) const;
  std::vector<const Edge*> out_edges(const std::string& task) const;
};

enum class ViolationCode {
  duplicate_task_name,
  bad_parallelism,
  unknown_task,
  source_has_inbound,
  sink_has_outbound,
  transform_selectivity,
  filter_selectivity,
  aggregate_window_missing,
  window_invalid,
  stateful_parallel_routing,
  no_source,
  unreachable_task,
  disconnected_graph,
  cycle,
};

const char* to_string(ViolationCode c);

struct Violation {
  ViolationCode code;
  std::string subject;  // task or edge it concerns
  std::string detail;
};

// Returns one violation per invariant breach; empty means the dataflow is
// runnable. Violations are data, not errors.
std::vector<Violation> validate(const Dataflow& df);

// Steady-state expected output:input ratio of one task. Aggregates derive it
// from the window (count mode: one batch per `slide` inputs); everything else
// uses the declared selectivity.
double expected_task_ratio(const TaskDescriptor& t);

// Expected sink arrivals per source emission, by flow propagation over the
// (acyclic) graph. Used as the dataflow selectivity in the jitter equation.
double expected_dataflow_ratio(const Dataflow& df);

// Expected per-task inflow per unit of source emission (same propagation);
// drives the advisory parallelism planner.
std::map<std::string, double> expected_task_inflow(const Dataflow& df);

}  // namespace streammark
