#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "streammark/common.hpp"
#include "streammark/csv.hpp"
#include "streammark/message.hpp"
#include "streammark/runtime.hpp"

namespace streammark {

enum class ColumnType { i64, f64, str, timestamp };

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::str;
};

struct SchemaDescriptor {
  std::vector<ColumnSpec> columns;
  int timestamp_column = -1;
  char delimiter = ',';

  int index_of(const std::string& name) const;
  std::string to_json() const;
  static SchemaDescriptor from_json(const std::string& text);
};

enum class RateMode { constant, max_rate, scaled_timestamps };

struct RateSpec {
  RateMode mode = RateMode::max_rate;
  double rate = 0;    // msg/s for constant
  double factor = 1;  // temporal scaling divisor for scaled_timestamps
};

enum class DistKind { uniform, normal, bimodal, sawtooth, burst };

// Shape of the instantaneous target rate over time for synthetic streams.
struct RateDistribution {
  DistKind kind = DistKind::uniform;
  double rate = 100;                            // uniform
  double mu = 0, sigma = 1;                     // normal
  double mu2 = 0, sigma2 = 1, mix = 0.5;        // bimodal
  double period_s = 60, low = 0, high = 100;    // sawtooth
  double base = 0, peak = 0;                    // burst
  double burst_len_s = 1, gap_s = 9;

  std::vector<std::string> validate() const;
};

struct StreamSourceSpec {
  enum class Mode { replay, synthetic } mode = Mode::replay;
  RateSpec rate;
  std::string file;
  SchemaDescriptor schema;
  RateDistribution distribution;
  size_t payload_bytes = 100;

  std::vector<std::string> validate() const;
};

// Replays a timestamped CSV as a stream: one message per row. In raw mode the
// message carries the untyped line (field "raw") plus the parsed event time;
// applications parse in-dataflow. Typed mode materializes schema fields.
// Instances partition rows round-robin by row index.
class ReplaySource : public PullSource {
 public:
  ReplaySource(const StreamSourceSpec& spec, bool raw_mode, int instance = 0,
               int instances = 1);
  std::optional<TimedMessage> next() override;

 private:
  StreamSourceSpec spec_;
  bool raw_ = true;
  int instance_ = 0;
  int instances_ = 1;
  std::ifstream file_;
  std::unique_ptr<CsvReader> reader_;
  uint64_t row_index_ = 0;
  uint64_t emitted_ = 0;
  int64_t first_ts_ms_ = -1;
  int64_t prev_due_ns_ = 0;
  std::vector<std::string> scratch_;
};

// Synthetic stream: the per-second target rate follows the configured
// distribution; payload values are schema-conformant and reproducible under
// (spec, seed); mean rendered size tracks payload_bytes.
class SyntheticSource : public PullSource {
 public:
  SyntheticSource(const StreamSourceSpec& spec, double duration_s,
                  uint64_t seed, int instance = 0, int instances = 1);
  std::optional<TimedMessage> next() override;

 private:
  void plan_second();
  Message make_payload();

  StreamSourceSpec spec_;
  double duration_s_;
  uint64_t seed_;
  int instance_, instances_;
  Rng rate_rng_;
  Rng payload_rng_;
  int64_t second_ = 0;
  uint64_t in_second_ = 0;
  uint64_t second_count_ = 0;
  uint64_t global_seq_ = 0;
};

// Single-field random-integer stream for the micro-benchmarks; max_rate by
// default, constant rate when configured. `values` bounds the integer range.
class RandomIntegerSource : public PullSource {
 public:
  RandomIntegerSource(RateSpec rate, uint64_t seed, int64_t values = 1'000'000,
                      uint64_t limit = 0);
  std::optional<TimedMessage> next() override;

 private:
  RateSpec rate_;
  Rng rng_;
  int64_t values_;
  uint64_t limit_;
  uint64_t seq_ = 0;
};

// Fixed schedule source for tests: emits the given messages at their dues.
class ScheduleSource : public PullSource {
 public:
  explicit ScheduleSource(std::vector<TimedMessage> schedule)
      : schedule_(std::move(schedule)) {}
  std::optional<TimedMessage> next() override {
    if (pos_ >= schedule_.size()) return std::nullopt;
    return schedule_[pos_++];
  }

 private:
  std::vector<TimedMessage> schedule_;
  size_t pos_ = 0;
};

}  // namespace streammark
