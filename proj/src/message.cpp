#include "streammark/message.hpp"

#include <charconv>

namespace streammark {

void Message::append_value(const Value& v, std::string& out) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    out += *s;
    return;
  }
  char buf[40];
  if (const auto* i = std::get_if<int64_t>(&v)) {
    auto r = std::to_chars(buf, buf + sizeof buf, *i);
    out.append(buf, r.ptr);
    return;
  }
  // Shortest round-trip form; to_chars keeps this off the slow printf path.
  auto r = std::to_chars(buf, buf + sizeof buf, std::get<double>(v));
  out.append(buf, r.ptr);
}

std::string Message::render_value(const Value& v) {
  std::string out;
  append_value(v, out);
  return out;
}

void Message::render_csv_into(std::string& out) const {
  out.clear();
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    append_value(fields[i].value, out);
  }
}

std::string Message::render_csv() const {
  std::string out;
  render_csv_into(out);
  return out;
}

}  // namespace streammark
