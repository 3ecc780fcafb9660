#include "streammark/csv.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <ctime>

namespace streammark {

void split_csv_into(const std::string& line, char delim,
                    std::vector<std::string>& out) {
  size_t cell = 0;
  auto next_cell = [&]() -> std::string& {
    if (cell == out.size()) out.emplace_back();
    std::string& s = out[cell++];
    s.clear();
    return s;
  };
  std::string* cur = &next_cell();
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur->push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur->push_back(c);
      }
    } else if (c == '"' && cur->empty()) {
      quoted = true;
    } else if (c == delim) {
      cur = &next_cell();
    } else if (c != '\r') {
      cur->push_back(c);
    }
  }
  out.resize(cell);
}

std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  split_csv_into(line, delim, out);
  return out;
}

CsvReader::CsvReader(std::istream& in, char delim) : in_(in), delim_(delim) {
  if (std::getline(in_, line_)) header_ = split_csv_line(line_, delim_);
}

bool CsvReader::next(std::vector<std::string>& fields) {
  if (!std::getline(in_, line_)) return false;
  fields = split_csv_line(line_, delim_);
  return true;
}

bool parse_timestamp_ms(const std::string& text, int64_t& out_ms) {
  if (text.empty()) return false;
  bool digits = true;
  for (char c : text)
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      digits = false;
      break;
    }
  if (digits) {
    out_ms = std::strtoll(text.c_str(), nullptr, 10);
    return true;
  }
  // YYYY-MM-DD HH:MM:SS[.mmm], UTC
  std::tm tm{};
  int ms = 0;
  int matched = std::sscanf(text.c_str(), "%d-%d-%d %d:%d:%d.%3d", &tm.tm_year,
                            &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min,
                            &tm.tm_sec, &ms);
  if (matched < 6) return false;
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  time_t s = timegm(&tm);
  if (s == static_cast<time_t>(-1)) return false;
  out_ms = static_cast<int64_t>(s) * 1000 + ms;
  return true;
}

std::string format_timestamp(int64_t epoch_ms) {
  time_t s = static_cast<time_t>(epoch_ms / 1000);
  unsigned ms = static_cast<unsigned>(epoch_ms % 1000);
  std::tm tm{};
  gmtime_r(&s, &tm);
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04u-%02u-%02u %02u:%02u:%02u.%03u",
                static_cast<unsigned>(tm.tm_year + 1900) % 10000,
                static_cast<unsigned>(tm.tm_mon + 1), static_cast<unsigned>(tm.tm_mday),
                static_cast<unsigned>(tm.tm_hour), static_cast<unsigned>(tm.tm_min),
                static_cast<unsigned>(tm.tm_sec), ms);
  return buf;
}

}  // namespace streammark
