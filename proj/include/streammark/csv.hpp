#pragma once

#include <istream>
#include <string>
#include <vector>

namespace streammark {

// Minimal CSV: configurable delimiter, double-quote escaping, UTF-8 passthrough.
std::vector<std::string> split_csv_line(const std::string& line, char delim);

// Reusing variant: keeps the vector's string capacities across rows.
void split_csv_into(const std::string& line, char delim,
                    std::vector<std::string>& out);

class CsvReader {
 public:
  CsvReader(std::istream& in, char delim = ',');
  const std::vector<std::string>& header() const { return header_; }
  bool next(std::vector<std::string>& fields);

 private:
  std::istream& in_;
  char delim_;
  std::vector<std::string> header_;
  std::string line_;
};

// Epoch-ms timestamp parsing: plain integers, or "YYYY-MM-DD HH:MM:SS[.mmm]"
// interpreted as UTC. Returns false on malformed input.
bool parse_timestamp_ms(const std::string& text, int64_t& out_ms);
std::string format_timestamp(int64_t epoch_ms);  // "YYYY-MM-DD HH:MM:SS.mmm"

}  // namespace streammark
