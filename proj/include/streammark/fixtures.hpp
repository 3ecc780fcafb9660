#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "streammark/streamgen.hpp"

namespace streammark {

// Bundled metadata for the named smart-city datasets: attribute counts,
// format, mean message size, peak rate at 1000x scaling, rate distribution.
struct DatasetProfile {
  std::string name;
  int attribute_count = 0;
  std::string format;
  int mean_size_bytes = 0;
  int peak_rate_at_1000x = 0;
  std::string distribution_label;
};

DatasetProfile city_profile();
DatasetProfile taxi_profile();
DatasetProfile dataset_profile(const std::string& name);  // CITY or TAXI

SchemaDescriptor city_schema();
SchemaDescriptor taxi_schema();
SchemaDescriptor dataset_schema(const std::string& name);

// Observation fields the applications analyze, and the column identifying
// the emitting sensor/taxi. These are fixture-declared (the applications are
// parameterized over them).
std::vector<std::string> dataset_observation_fields(const std::string& name);
std::string dataset_id_column(const std::string& name);

// Inlier value band per observation field; the Bloom reference set covers the
// integer buckets inside the band.
struct ObservationBand {
  std::string field;
  double lo = 0, hi = 0;    // inlier band (bucketed by integer rounding)
  double mu = 0, sigma = 0; // value distribution for the synthesizer
};
std::vector<ObservationBand> dataset_bands(const std::string& name);

// Membership key for the outlier filter: "<obs_type>:<rounded value>".
std::string bloom_membership_key(const std::string& obs_type, double value);

struct FixtureSpec {
  std::string dataset = "CITY";
  double hours = 1.0;
  int sensors = 24;                // emitting devices
  double mean_rows_per_s = 0;      // 0 = dataset default (6.4 CITY, 2.0 TAXI)
  double outlier_fraction = 0.02;  // per observation value
  uint64_t seed = 42;
  std::filesystem::path out_dir;
};

struct FixtureMeta {
  std::string dataset;
  std::string csv_file;
  std::string bloom_ref_file;
  uint64_t rows = 0;
  int64_t first_ts_ms = 0;
  int64_t last_ts_ms = 0;
  double bloom_pass_fraction = 1.0;  // exact fraction of inlier observations
  double mean_row_bytes = 0;
  std::vector<std::string> observation_fields;
  uint64_t seed = 0;

  std::string to_json() const;
  static FixtureMeta from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static FixtureMeta load(const std::filesystem::path& path);
};

// Writes <dataset>.csv, <dataset>_bloom_ref.txt and <dataset>_meta.json into
// out_dir. Deterministic under (spec.seed); the pass fraction is counted
// exactly while writing.
FixtureMeta synthesize_fixture(const FixtureSpec& spec);

// Sparse timestamp-only fixture for replay-timing checks: one row every
// `step_s` seconds spanning `hours`. Returns the CSV path.
std::filesystem::path write_timing_fixture(const std::filesystem::path& dir,
                                           double hours, double step_s);
SchemaDescriptor timing_schema();

// Versioned model pairs for the predictive dataflow. v1 and v2 are built so
// the probe message classifies differently under each tree.
struct ModelFixture {
  std::filesystem::path dtc_v1, dtc_v2, mlr_v1, mlr_v2;
  Message probe;                 // flips class between tree versions
  std::string probe_class_v1, probe_class_v2;
};
ModelFixture write_fixture_models(const std::filesystem::path& dir,
                                  const std::string& dataset);

// A CITY-schema XML document (9 leaf observation fields) for the parse task.
std::string sample_city_xml(uint64_t seed = 7);

}  // namespace streammark
