#include "streammark/fixtures.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "streammark/common.hpp"
#include "streammark/csv.hpp"
#include "streammark/models.hpp"
#include "streammark/xml.hpp"

namespace streammark {

using nlohmann::json;

DatasetProfile city_profile() {
  return DatasetProfile{"CITY", 9, "CSV", 100, 7000, "Normal"};
}

DatasetProfile taxi_profile() {
  return DatasetProfile{"TAXI", 10, "CSV", 191, 4000, "Bimodal"};
}

DatasetProfile dataset_profile(const std::string& name) {
  if (name == "CITY") return city_profile();
  if (name == "TAXI") return taxi_profile();
  throw std::runtime_error("unknown dataset: " + name);
}

SchemaDescriptor city_schema() {
  SchemaDescriptor s;
  s.columns = {
      {"timestamp", ColumnType::timestamp}, {"sensor_id", ColumnType::str},
      {"latitude", ColumnType::f64},        {"longitude", ColumnType::f64},
      {"temperature", ColumnType::f64},     {"humidity", ColumnType::f64},
      {"light", ColumnType::f64},           {"dust", ColumnType::f64},
      {"air_quality", ColumnType::f64},
  };
  s.timestamp_column = 0;
  return s;
}

SchemaDescriptor taxi_schema() {
  SchemaDescriptor s;
  s.columns = {
      {"medallion", ColumnType::str},
      {"hack_license", ColumnType::str},
      {"pickup_datetime", ColumnType::timestamp},
      {"dropoff_datetime", ColumnType::str},
      {"trip_time_s", ColumnType::i64},
      {"trip_distance", ColumnType::f64},
      {"pickup_longitude", ColumnType::f64},
      {"pickup_latitude", ColumnType::f64},
      {"fare_amount", ColumnType::f64},
      {"tip_amount", ColumnType::f64},
  };
  s.timestamp_column = 2;
  return s;
}

SchemaDescriptor dataset_schema(const std::string& name) {
  if (name == "CITY") return city_schema();
  if (name == "TAXI") return taxi_schema();
  throw std::runtime_error("unknown dataset: " + name);
}

std::vector<std::string> dataset_observation_fields(const std::string& name) {
  if (name == "CITY")
    return {"temperature", "humidity", "light", "dust", "air_quality"};
  if (name == "TAXI")
    return {"trip_time_s", "trip_distance", "fare_amount", "tip_amount"};
  throw std::runtime_error("unknown dataset: " + name);
}

std::string dataset_id_column(const std::string& name) {
  return name == "CITY" ? "sensor_id" : "medallion";
}

std::vector<ObservationBand> dataset_bands(const std::string& name) {
  if (name == "CITY") {
    return {
        {"temperature", 0, 40, 22, 5},  {"humidity", 20, 90, 55, 10},
        {"light", 0, 1000, 480, 140},   {"dust", 0, 200, 90, 30},
        {"air_quality", 20, 120, 70, 15},
    };
  }
  return {
      {"trip_time_s", 60, 3600, 840, 420},  {"trip_distance", 0, 40, 5, 4},
      {"fare_amount", 2, 120, 14, 8},       {"tip_amount", 0, 40, 2.2, 1.8},
  };
}

std::string bloom_membership_key(const std::string& obs_type, double value) {
  return obs_type + ":" + std::to_string(static_cast<long long>(std::llround(value)));
}

std::string FixtureMeta::to_json() const {
  json j;
  j["dataset"] = dataset;
  j["csv_file"] = csv_file;
  j["bloom_ref_file"] = bloom_ref_file;
  j["rows"] = rows;
  j["first_ts_ms"] = first_ts_ms;
  j["last_ts_ms"] = last_ts_ms;
  j["bloom_pass_fraction"] = bloom_pass_fraction;
  j["mean_row_bytes"] = mean_row_bytes;
  j["observation_fields"] = observation_fields;
  j["seed"] = seed;
  return j.dump(2);
}

FixtureMeta FixtureMeta::from_json(const std::string& text) {
  json j = json::parse(text);
  FixtureMeta m;
  m.dataset = j.at("dataset").get<std::string>();
  m.csv_file = j.at("csv_file").get<std::string>();
  m.bloom_ref_file = j.at("bloom_ref_file").get<std::string>();
  m.rows = j.at("rows").get<uint64_t>();
  m.first_ts_ms = j.at("first_ts_ms").get<int64_t>();
  m.last_ts_ms = j.at("last_ts_ms").get<int64_t>();
  m.bloom_pass_fraction = j.at("bloom_pass_fraction").get<double>();
  m.mean_row_bytes = j.at("mean_row_bytes").get<double>();
  m.observation_fields = j.at("observation_fields").get<std::vector<std::string>>();
  m.seed = j.at("seed").get<uint64_t>();
  return m;
}

void FixtureMeta::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::trunc);
  f << to_json() << "\n";
}

FixtureMeta FixtureMeta::load(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open fixture meta: " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

namespace {

constexpr int64_t kEpochBase = 1'421'200'800'000LL;  // fixture time origin

std::string hex_id(Rng& rng, size_t chars) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(chars);
  for (size_t i = 0; i < chars; ++i) s.push_back(digits[rng.below(16)]);
  return s;
}

double band_value(Rng& rng, const ObservationBand& b, bool outlier) {
  if (outlier) {
    // Past the band edge by a clear margin so the bucket is a non-member.
    double span = b.hi - b.lo;
    return rng.next_double() < 0.5 ? b.hi + 2 + rng.next_double() * span * 0.5
                                   : b.lo - 2 - rng.next_double() * span * 0.5;
  }
  double v = rng.normal(b.mu, b.sigma);
  // Clamp into the open band so rounding stays inside.
  if (v < b.lo + 0.5) v = b.lo + 0.5 + rng.next_double();
  if (v > b.hi - 0.5) v = b.hi - 0.5 - rng.next_double();
  return v;
}

}  // namespace

FixtureMeta synthesize_fixture(const FixtureSpec& spec) {
  const bool city = spec.dataset == "CITY";
  if (!city && spec.dataset != "TAXI")
    throw std::runtime_error("unknown dataset: " + spec.dataset);
  std::filesystem::create_directories(spec.out_dir);

  const SchemaDescriptor schema = dataset_schema(spec.dataset);
  const auto bands = dataset_bands(spec.dataset);
  const double rows_per_s =
      spec.mean_rows_per_s > 0 ? spec.mean_rows_per_s : (city ? 6.4 : 2.0);
  const double duration_s = spec.hours * 3600.0;

  Rng rng(mix64(spec.seed ^ (city ? 0xc17Full : 0x7a81ull)));

  // Device identities.
  std::vector<std::string> ids;
  std::vector<std::pair<double, double>> coords;
  for (int i = 0; i < spec.sensors; ++i) {
    ids.push_back(city ? hex_id(rng, 8) : hex_id(rng, 32));
    coords.emplace_back(rng.uniform(-74.02, -73.92), rng.uniform(40.70, 40.80));
  }
  std::vector<std::string> licenses;
  if (!city)
    for (int i = 0; i < spec.sensors; ++i) licenses.push_back(hex_id(rng, 32));

  FixtureMeta meta;
  meta.dataset = spec.dataset;
  meta.seed = spec.seed;
  meta.observation_fields = dataset_observation_fields(spec.dataset);
  std::string base = city ? "city" : "taxi";
  std::filesystem::path csv_path = spec.out_dir / (base + ".csv");
  std::filesystem::path ref_path = spec.out_dir / (base + "_bloom_ref.txt");
  std::filesystem::path meta_path = spec.out_dir / (base + "_meta.json");
  meta.csv_file = csv_path.string();
  meta.bloom_ref_file = ref_path.string();

  // Reference set: every integer bucket inside each band.
  {
    std::ofstream ref(ref_path, std::ios::trunc);
    for (const auto& b : bands)
      for (long long v = std::llround(b.lo); v <= std::llround(b.hi); ++v)
        ref << b.field << ":" << v << "\n";
  }

  std::ofstream out(csv_path, std::ios::trunc);
  for (size_t i = 0; i < schema.columns.size(); ++i) {
    if (i) out << schema.delimiter;
    out << schema.columns[i].name;
  }
  out << "\n";

  uint64_t rows = 0, obs_total = 0, obs_outliers = 0;
  uint64_t byte_total = 0;
  double t = 0;
  char buf[64];
  std::string line;
  while (t < duration_s) {
    // Mild per-row jitter on the inter-arrival keeps the stream organic while
    // the mean rate stays put.
    const double gap = (1.0 / rows_per_s) * (0.7 + 0.6 * rng.next_double());
    t += gap;
    if (t >= duration_s) break;
    const int64_t ts = kEpochBase + static_cast<int64_t>(t * 1000.0);
    const size_t dev = rng.below(ids.size());
    line.clear();
    if (city) {
      std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(ts));
      line += buf;
      line += ',';
      line += ids[dev];
      std::snprintf(buf, sizeof buf, ",%.9f,%.10f", coords[dev].second,
                    coords[dev].first);
      line += buf;
      for (const auto& b : bands) {
        const bool outlier = rng.next_double() < spec.outlier_fraction;
        ++obs_total;
        if (outlier) ++obs_outliers;
        std::snprintf(buf, sizeof buf, ",%.5f", band_value(rng, b, outlier));
        line += buf;
      }
    } else {
      line += ids[dev];
      line += ',';
      line += licenses[dev];
      line += ',';
      line += format_timestamp(ts);
      line += ',';
      // Dropoff time echoes the trip duration; parsed as plain text.
      const ObservationBand& trip = bands[0];
      const bool trip_outlier = rng.next_double() < spec.outlier_fraction;
      ++obs_total;
      if (trip_outlier) ++obs_outliers;
      const double trip_s = band_value(rng, trip, trip_outlier);
      line += format_timestamp(ts + static_cast<int64_t>(trip_s * 1000.0));
      std::snprintf(buf, sizeof buf, ",%lld",
                    static_cast<long long>(std::llround(trip_s)));
      line += buf;
      for (size_t bi = 1; bi < bands.size(); ++bi) {
        const bool outlier = rng.next_double() < spec.outlier_fraction;
        ++obs_total;
        if (outlier) ++obs_outliers;
        double v = band_value(rng, bands[bi], outlier);
        if (bands[bi].field == "trip_distance") {
          std::snprintf(buf, sizeof buf, ",%.5f", v);
          line += buf;
          std::snprintf(buf, sizeof buf, ",%.14f,%.13f",
                        coords[dev].first - rng.next_double() * 0.01,
                        coords[dev].second + rng.next_double() * 0.01);
          line += buf;
        } else {
          std::snprintf(buf, sizeof buf, ",%.4f", v);
          line += buf;
        }
      }
    }
    out << line << "\n";
    byte_total += line.size();
    ++rows;
    if (rows == 1) meta.first_ts_ms = ts;
    meta.last_ts_ms = ts;
  }
  meta.rows = rows;
  meta.bloom_pass_fraction =
      obs_total ? 1.0 - static_cast<double>(obs_outliers) / static_cast<double>(obs_total)
                : 1.0;
  meta.mean_row_bytes =
      rows ? static_cast<double>(byte_total) / static_cast<double>(rows) : 0;
  meta.save(meta_path);
  return meta;
}

SchemaDescriptor timing_schema() {
  SchemaDescriptor s;
  s.columns = {{"timestamp", ColumnType::timestamp}, {"value", ColumnType::i64}};
  s.timestamp_column = 0;
  return s;
}

std::filesystem::path write_timing_fixture(const std::filesystem::path& dir,
                                           double hours, double step_s) {
  std::filesystem::create_directories(dir);
  std::filesystem::path p = dir / "timing.csv";
  std::ofstream out(p, std::ios::trunc);
  out << "timestamp,value\n";
  const double span_s = hours * 3600.0;
  uint64_t i = 0;
  for (double t = 0; t <= span_s + 1e-9; t += step_s, ++i)
    out << (kEpochBase + static_cast<int64_t>(t * 1000.0)) << "," << i << "\n";
  return p;
}

ModelFixture write_fixture_models(const std::filesystem::path& dir,
                                  const std::string& dataset) {
  std::filesystem::create_directories(dir);
  ModelFixture fx;
  const bool city = dataset == "CITY";

  auto leaf = [](const std::string& label) {
    auto n = std::make_unique<TreeNode>();
    n->is_leaf = true;
    n->label = label;
    return n;
  };
  auto split = [](const std::string& attr, double thr,
                  std::unique_ptr<TreeNode> l, std::unique_ptr<TreeNode> r) {
    auto n = std::make_unique<TreeNode>();
    n->attribute = attr;
    n->threshold = thr;
    n->left = std::move(l);
    n->right = std::move(r);
    return n;
  };

  DecisionTreeModel t1, t2;
  LinearModel m1, m2;
  if (city) {
    // v1: aq < 60 -> good; else dust < 120 -> average else poor.
    t1.version = 1;
    t1.root = split("air_quality", 60,
                    leaf("good"),
                    split("dust", 120, leaf("average"), leaf("poor")));
    // v2 widens "good": the probe at aq=65 flips from average to good.
    t2.version = 2;
    t2.root = split("air_quality", 75,
                    leaf("good"),
                    split("dust", 120, leaf("average"), leaf("poor")));
    fx.probe.set("air_quality", 65.0);
    fx.probe.set("dust", 80.0);
    fx.probe.set("humidity", 50.0);
    fx.probe.set("light", 400.0);
    fx.probe_class_v1 = "average";
    fx.probe_class_v2 = "good";

    m1.version = 1;
    m1.intercept = 25.0;
    m1.features = {"humidity", "light", "dust", "air_quality"};
    m1.coefficients = {-0.05, 0.002, -0.01, -0.03};
    m2 = m1;
    m2.version = 2;
    m2.intercept = 24.0;
  } else {
    t1.version = 1;
    t1.root = split("trip_time_s", 600,
                    leaf("short"),
                    split("trip_time_s", 1800, leaf("medium"), leaf("long")));
    t2.version = 2;
    t2.root = split("trip_time_s", 900,
                    leaf("short"),
                    split("trip_time_s", 1800, leaf("medium"), leaf("long")));
    fx.probe.set("trip_time_s", int64_t{700});
    fx.probe.set("trip_distance", 3.5);
    fx.probe.set("fare_amount", 12.5);
    fx.probe.set("tip_amount", 2.0);
    fx.probe_class_v1 = "medium";
    fx.probe_class_v2 = "short";

    m1.version = 1;
    m1.intercept = 2.5;
    m1.features = {"trip_time_s", "trip_distance"};
    m1.coefficients = {0.013, 1.2};
    m2 = m1;
    m2.version = 2;
    m2.intercept = 2.75;
  }

  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::trunc);
    f << text << "\n";
  };
  fx.dtc_v1 = dir / "dtc_v1.json";
  fx.dtc_v2 = dir / "dtc_v2.json";
  fx.mlr_v1 = dir / "mlr_v1.json";
  fx.mlr_v2 = dir / "mlr_v2.json";
  write(fx.dtc_v1, ModelArtifact::tree_json(t1));
  write(fx.dtc_v2, ModelArtifact::tree_json(t2));
  write(fx.mlr_v1, ModelArtifact::linear_json(m1));
  write(fx.mlr_v2, ModelArtifact::linear_json(m2));
  return fx;
}

std::string sample_city_xml(uint64_t seed) {
  Rng rng(mix64(seed));
  std::vector<Field> fields;
  fields.push_back({"timestamp", int64_t{kEpochBase}});
  fields.push_back({"sensor_id", hex_id(rng, 16)});
  fields.push_back({"latitude", 40.7 + rng.next_double() * 0.1});
  fields.push_back({"longitude", -74.0 + rng.next_double() * 0.1});
  for (const auto& b : dataset_bands("CITY"))
    fields.push_back({b.field, band_value(rng, b, false)});
  return fields_to_xml(fields, "obs");
}

}  // namespace streammark
