#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace streammark {

using Value = std::variant<int64_t, double, std::string>;

struct Field {
  std::string name;
  Value value;
};

// The unit tuple flowing through a dataflow. `ingress_time_ns` is stamped
// exactly once at source emission and inherited by every derived message so
// sink-side latency is causal.
class Message {
 public:
  uint64_t id = 0;
  int64_t event_time_ms = 0;   // source timestamp
  int64_t ingress_time_ns = 0; // harness clock at source emission
  std::optional<std::string> key;
  std::vector<Field> fields;   // insertion-ordered

  void set(std::string_view name, Value v) {
    for (auto& f : fields) {
      if (f.name == name) {
        f.value = std::move(v);
        return;
      }
    }
    fields.push_back(Field{std::string(name), std::move(v)});
  }

  const Value* find(std::string_view name) const {
    for (const auto& f : fields)
      if (f.name == name) return &f.value;
    return nullptr;
  }

  bool has(std::string_view name) const { return find(name) != nullptr; }

  // Numeric accessor: integers widen to double, strings do not coerce.
  std::optional<double> get_numeric(std::string_view name) const {
    const Value* v = find(name);
    if (!v) return std::nullopt;
    if (const auto* d = std::get_if<double>(v)) return *d;
    if (const auto* i = std::get_if<int64_t>(v)) return static_cast<double>(*i);
    return std::nullopt;
  }

  std::optional<int64_t> get_int(std::string_view name) const {
    const Value* v = find(name);
    if (!v) return std::nullopt;
    if (const auto* i = std::get_if<int64_t>(v)) return *i;
    return std::nullopt;
  }

  const std::string* get_string(std::string_view name) const {
    const Value* v = find(name);
    if (!v) return nullptr;
    return std::get_if<std::string>(v);
  }

  static std::string render_value(const Value& v);
  static void append_value(const Value& v, std::string& out);

  // Values joined by ','; the wire-equivalent CSV row. The serialized message
  // size of a message is the byte length of this rendering.
  std::string render_csv() const;
  void render_csv_into(std::string& out) const;  // reuses out's capacity
  size_t serialized_size() const { return render_csv().size(); }
};

}  // namespace streammark
