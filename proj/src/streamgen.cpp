#include "streammark/streamgen.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "streammark/common.hpp"
#include "streammark/csv.hpp"

namespace streammark {

using nlohmann::json;

namespace {

const char* type_name(ColumnType t) {
  switch (t) {
    case ColumnType::i64: return "i64";
    case ColumnType::f64: return "f64";
    case ColumnType::str: return "str";
    case ColumnType::timestamp: return "timestamp";
  }
  return "str";
}

ColumnType type_from(const std::string& s) {
  if (s == "i64") return ColumnType::i64;
  if (s == "f64") return ColumnType::f64;
  if (s == "timestamp") return ColumnType::timestamp;
  return ColumnType::str;
}

}  // namespace

int SchemaDescriptor::index_of(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return static_cast<int>(i);
  return -1;
}

std::string SchemaDescriptor::to_json() const {
  json j;
  json cols = json::array();
  for (const auto& c : columns) cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
  j["columns"] = std::move(cols);
  j["timestamp_column"] = timestamp_column;
  j["delimiter"] = std::string(1, delimiter);
  return j.dump(2);
}

SchemaDescriptor SchemaDescriptor::from_json(const std::string& text) {
  json j = json::parse(text);
  SchemaDescriptor s;
  for (const auto& c : j["columns"])
    s.columns.push_back(
        ColumnSpec{c["name"].get<std::string>(), type_from(c["type"])});
  s.timestamp_column = j.value("timestamp_column", -1);
  std::string d = j.value("delimiter", ",");
  s.delimiter = d.empty() ? ',' : d[0];
  return s;
}

std::vector<std::string> RateDistribution::validate() const {
  std::vector<std::string> errs;
  switch (kind) {
    case DistKind::uniform:
      if (rate <= 0) errs.push_back("uniform rate must be > 0");
      break;
    case DistKind::normal:
      if (sigma <= 0) errs.push_back("normal sigma must be > 0");
      if (mu <= 0) errs.push_back("normal mu must be > 0");
      break;
    case DistKind::bimodal:
      if (sigma <= 0 || sigma2 <= 0) errs.push_back("bimodal sigmas must be > 0");
      if (mix < 0 || mix > 1) errs.push_back("bimodal mix must be in [0,1]");
      break;
    case DistKind::sawtooth:
      if (period_s <= 0) errs.push_back("sawtooth period must be > 0");
      if (high < low) errs.push_back("sawtooth high must be >= low");
      break;
    case DistKind::burst:
      if (peak < base) errs.push_back("burst peak must be >= base");
      if (burst_len_s <= 0) errs.push_back("burst length must be > 0");
      break;
  }
  return errs;
}

std::vector<std::string> StreamSourceSpec::validate() const {
  std::vector<std::string> errs;
  if (mode == Mode::replay) {
    if (file.empty()) errs.push_back("replay requires a file");
    if (rate.mode == RateMode::scaled_timestamps) {
      if (schema.timestamp_column < 0)
        errs.push_back("scaled_timestamps requires a timestamp column");
      if (rate.factor <= 0) errs.push_back("scaling factor must be > 0");
    }
    if (rate.mode == RateMode::constant && rate.rate <= 0)
      errs.push_back("constant rate must be > 0");
  } else {
    auto d = distribution.validate();
    errs.insert(errs.end(), d.begin(), d.end());
  }
  return errs;
}

// ---------------------------------------------------------------- Replay

ReplaySource::ReplaySource(const StreamSourceSpec& spec, bool raw_mode,
                           int instance, int instances)
    : spec_(spec), raw_(raw_mode), instance_(instance), instances_(instances) {
  auto errs = spec_.validate();
  if (!errs.empty()) throw StartupError("invalid stream spec: " + errs.front());
  file_.open(spec_.file);
  if (!file_) throw StartupError("cannot open replay file: " + spec_.file);
  reader_ = std::make_unique<CsvReader>(file_, spec_.schema.delimiter);
  if (reader_->header().size() != spec_.schema.columns.size())
    throw StartupError("replay header does not match schema: " + spec_.file);
  for (size_t i = 0; i < reader_->header().size(); ++i)
    if (reader_->header()[i] != spec_.schema.columns[i].name)
      throw StartupError("replay header column '" + reader_->header()[i] +
                         "' does not match schema");
}

std::optional<TimedMessage> ReplaySource::next() {
  while (reader_->next(scratch_)) {
    const uint64_t row = row_index_++;
    if (instances_ > 1 &&
        row % static_cast<uint64_t>(instances_) != static_cast<uint64_t>(instance_))
      continue;
    if (scratch_.size() != spec_.schema.columns.size()) {
      ++counters_["malformed_rows"];
      continue;
    }
    int64_t ts_ms = 0;
    if (spec_.schema.timestamp_column >= 0) {
      if (!parse_timestamp_ms(scratch_[spec_.schema.timestamp_column], ts_ms)) {
        ++counters_["malformed_rows"];
        continue;
      }
    }
    Message m;
    m.event_time_ms = ts_ms;
    bool ok = true;
    if (raw_) {
      std::string line;
      for (size_t i = 0; i < scratch_.size(); ++i) {
        if (i) line.push_back(spec_.schema.delimiter);
        line += scratch_[i];
      }
      m.set("raw", std::move(line));
    } else {
      for (size_t i = 0; i < scratch_.size(); ++i) {
        const ColumnSpec& c = spec_.schema.columns[i];
        switch (c.type) {
          case ColumnType::i64: {
            char* end = nullptr;
            int64_t v = std::strtoll(scratch_[i].c_str(), &end, 10);
            if (end == scratch_[i].c_str() || *end != '\0') ok = false;
            m.set(c.name, v);
            break;
          }
          case ColumnType::f64: {
            char* end = nullptr;
            double v = std::strtod(scratch_[i].c_str(), &end);
            if (end == scratch_[i].c_str() || *end != '\0') ok = false;
            m.set(c.name, v);
            break;
          }
          case ColumnType::timestamp:
            m.set(c.name, ts_ms);
            break;
          case ColumnType::str:
            m.set(c.name, scratch_[i]);
            break;
        }
      }
    }
    if (!ok) {
      ++counters_["malformed_rows"];
      continue;
    }

    int64_t due_ns = 0;
    switch (spec_.rate.mode) {
      case RateMode::max_rate:
        due_ns = 0;
        break;
      case RateMode::constant:
        due_ns = static_cast<int64_t>(static_cast<double>(emitted_) * 1e9 /
                                      spec_.rate.rate);
        break;
      case RateMode::scaled_timestamps: {
        if (first_ts_ms_ < 0) first_ts_ms_ = ts_ms;
        double offset_ms =
            static_cast<double>(ts_ms - first_ts_ms_) / spec_.rate.factor;
        due_ns = static_cast<int64_t>(offset_ms * 1e6);
        if (due_ns < prev_due_ns_) {
          // Out-of-order timestamp: clamp to the previous emission.
          due_ns = prev_due_ns_;
          ++counters_["clamped_timestamps"];
        }
        prev_due_ns_ = due_ns;
        break;
      }
    }
    ++emitted_;
    return TimedMessage{due_ns, std::move(m)};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- Synthetic

SyntheticSource::SyntheticSource(const StreamSourceSpec& spec,
                                 double duration_s, uint64_t seed,
                                 int instance, int instances)
    : spec_(spec),
      duration_s_(duration_s),
      seed_(seed),
      instance_(instance),
      instances_(instances),
      rate_rng_(mix64(seed ^ 0x5eedULL)),
      payload_rng_(mix64(seed ^ 0xfacadeULL ^ (uint64_t)instance)) {
  auto errs = spec_.distribution.validate();
  if (!errs.empty())
    throw StartupError("invalid distribution: " + errs.front());
  plan_second();
}

void SyntheticSource::plan_second() {
  const RateDistribution& d = spec_.distribution;
  double r = 0;
  switch (d.kind) {
    case DistKind::uniform:
      r = d.rate;
      break;
    case DistKind::normal:
      r = rate_rng_.normal(d.mu, d.sigma);
      break;
    case DistKind::bimodal:
      r = rate_rng_.next_double() < d.mix ? rate_rng_.normal(d.mu, d.sigma)
                                          : rate_rng_.normal(d.mu2, d.sigma2);
      break;
    case DistKind::sawtooth: {
      double phase = std::fmod(static_cast<double>(second_), d.period_s) / d.period_s;
      r = d.low + (d.high - d.low) * phase;
      break;
    }
    case DistKind::burst: {
      double cycle = d.burst_len_s + d.gap_s;
      double phase = std::fmod(static_cast<double>(second_), cycle);
      r = phase < d.burst_len_s ? d.peak : d.base;
      break;
    }
  }
  if (r < 0) r = 0;
  // Instances split the target rate evenly.
  second_count_ = static_cast<uint64_t>(std::llround(r / instances_));
  in_second_ = 0;
}

Message SyntheticSource::make_payload() {
  Message m;
  size_t pad_col = SIZE_MAX;
  for (size_t i = 0; i < spec_.schema.columns.size(); ++i) {
    const ColumnSpec& c = spec_.schema.columns[i];
    switch (c.type) {
      case ColumnType::timestamp:
        // Placeholder with the final epoch-ms width; patched by the caller.
        m.set(c.name, int64_t{1'600'000'000'000});
        break;
      case ColumnType::i64:
        m.set(c.name, payload_rng_.range_i64(0, 9999));
        break;
      case ColumnType::f64: {
        // Quantized so the rendered width is stable (sensor-style readings).
        double v = payload_rng_.uniform(0.0, 1000.0);
        m.set(c.name, std::round(v * 100.0) / 100.0);
        break;
      }
      case ColumnType::str: {
        if (pad_col == SIZE_MAX) pad_col = i;
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(payload_rng_.next_u64()));
        m.set(c.name, std::string(buf));
        break;
      }
    }
  }
  // Pad the first string column toward the target serialized size.
  if (pad_col != SIZE_MAX) {
    size_t size = m.serialized_size();
    if (size < spec_.payload_bytes) {
      std::string s = *m.get_string(spec_.schema.columns[pad_col].name);
      s.append(spec_.payload_bytes - size, 'x');
      m.set(spec_.schema.columns[pad_col].name, std::move(s));
    }
  }
  return m;
}

std::optional<TimedMessage> SyntheticSource::next() {
  while (true) {
    if (static_cast<double>(second_) >= duration_s_) return std::nullopt;
    if (in_second_ >= second_count_) {
      ++second_;
      plan_second();
      continue;
    }
    // Evenly spaced inside the second.
    double frac = second_count_ ? static_cast<double>(in_second_) /
                                      static_cast<double>(second_count_)
                                : 0.0;
    int64_t due_ns = static_cast<int64_t>((static_cast<double>(second_) + frac) * 1e9);
    ++in_second_;
    Message m = make_payload();
    int64_t event_ms = 1'600'000'000'000LL + due_ns / 1'000'000;
    m.event_time_ms = event_ms;
    if (spec_.schema.timestamp_column >= 0) {
      const auto& name = spec_.schema.columns[spec_.schema.timestamp_column].name;
      m.set(name, event_ms);
    }
    ++global_seq_;
    return TimedMessage{due_ns, std::move(m)};
  }
}

// ---------------------------------------------------------------- Integers

RandomIntegerSource::RandomIntegerSource(RateSpec rate, uint64_t seed,
                                         int64_t values, uint64_t limit)
    : rate_(rate), rng_(mix64(seed ^ 0x1234abcdULL)), values_(values), limit_(limit) {}

std::optional<TimedMessage> RandomIntegerSource::next() {
  if (limit_ && seq_ >= limit_) return std::nullopt;
  int64_t due_ns = 0;
  if (rate_.mode == RateMode::constant && rate_.rate > 0)
    due_ns = static_cast<int64_t>(static_cast<double>(seq_) * 1e9 / rate_.rate);
  Message m;
  m.set("value", rng_.range_i64(0, values_ - 1));
  m.event_time_ms = static_cast<int64_t>(seq_);
  ++seq_;
  return TimedMessage{due_ns, std::move(m)};
}

}  // namespace streammark
