#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "streammark/common.hpp"
#include "streammark/fixtures.hpp"
#include "streammark/models.hpp"
#include "streammark/tasks.hpp"
#include "streammark/xml.hpp"

using namespace streammark;
using namespace streammark::tasks;

namespace {

// Drives a task instance directly, collecting its emissions.
struct TaskHarness {
  TaskContext ctx;
  std::vector<Message> out;
  std::atomic<uint64_t> emitted{0};

  TaskHarness() {
    ctx.set_identity("test", 0, 1, uint64_t{1} << 40, 1);
    ctx.clock_ = [] { return now_ns(); };
    ctx.out_count = &emitted;
    ctx.deliver_fn = [this](Message&& m) { out.push_back(std::move(m)); };
  }

  void feed(Task& t, Message m) {
    ctx.set_current(m.ingress_time_ns, m.event_time_ms);
    t.process(std::move(m), ctx);
  }

  void feed_window(Task& t, const std::vector<Message>& batch) {
    ctx.set_current(batch.back().ingress_time_ns, batch.back().event_time_ms);
    t.process_window(std::span<const Message>(batch.data(), batch.size()), ctx);
  }

  uint64_t counter(const std::string& name) { return ctx.counters()[name]; }
};

Message msg_with(std::initializer_list<Field> fields) {
  Message m;
  for (const auto& f : fields) m.set(f.name, f.value);
  return m;
}

}  // namespace

TEST_SUITE("tasks") {

TEST_CASE("xml parse extracts a single leaf") {
  TaskHarness h;
  XmlParseTask task("xml");
  h.feed(task, msg_with({{"xml", std::string("<obs><temp>21.5</temp></obs>")}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_string("temp") == "21.5");
  CHECK(h.out[0].fields.size() == 1);
}

TEST_CASE("xml parse extracts all nine observation fields of a city document") {
  TaskHarness h;
  XmlParseTask task("xml");
  h.feed(task, msg_with({{"xml", sample_city_xml()}}));
  REQUIRE(h.out.size() == 1);
  CHECK(h.out[0].fields.size() == 9);
  CHECK(h.out[0].has("temperature"));
  CHECK(h.out[0].has("air_quality"));
  CHECK(h.out[0].has("sensor_id"));
}

TEST_CASE("xml parse drops malformed documents and counts them") {
  TaskHarness h;
  XmlParseTask task("xml");
  h.feed(task, msg_with({{"xml", std::string("<obs><temp>21.5</te")}}));
  CHECK(h.out.empty());
  CHECK(h.counter("parse_errors") == 1);
  h.feed(task, msg_with({{"xml", std::string("<a><b>1</b></mismatch>")}}));
  CHECK(h.counter("parse_errors") == 2);
}

TEST_CASE("xml parse handles nesting, entities and comments") {
  TaskHarness h;
  XmlParseTask task("xml");
  h.feed(task, msg_with({{"xml", std::string(
      "<?xml version=\"1.0\"?><!-- hdr --><r><grp><a>1 &amp; 2</a>"
      "<b attr=\"x\">  two  </b></grp><c/></r>")}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_string("a") == "1 & 2");
  CHECK(*h.out[0].get_string("b") == "two");
  CHECK(*h.out[0].get_string("c") == "");
}

TEST_CASE("csv observation split fans one row out per observation") {
  TaskHarness h;
  CsvObsSplitTask task(city_schema(), dataset_observation_fields("CITY"),
                       "sensor_id");
  Message raw;
  raw.set("raw", std::string("1421200800000,sensor01,40.75,-73.99,21.5,60.1,480,90,70"));
  raw.event_time_ms = 1421200800000;
  h.feed(task, std::move(raw));
  REQUIRE(h.out.size() == 5);
  CHECK(*h.out[0].get_string("obs_type") == "temperature");
  CHECK(*h.out[0].get_numeric("value") == doctest::Approx(21.5));
  CHECK(*h.out[0].get_string("id") == "sensor01");
  REQUIRE(h.out[0].key.has_value());
  CHECK(*h.out[0].key == "0:sensor01");
  CHECK(*h.out[4].get_string("obs_type") == "air_quality");
  CHECK(*h.out[4].key == "4:sensor01");
  // Provenance: event time inherited from the row.
  CHECK(h.out[2].event_time_ms == 1421200800000);
}

TEST_CASE("bloom task passes members and drops non-members") {
  auto f = std::make_shared<BloomFilter>(9586, 7, 2);
  f->insert("42");
  TaskHarness h;
  BloomFilterTask task(f, "value");
  h.feed(task, msg_with({{"value", int64_t{42}}}));
  CHECK(h.out.size() == 1);
  h.feed(task, msg_with({{"value", int64_t{977001}}}));
  CHECK(h.out.size() == 1);
  CHECK(h.counter("filtered_out") == 1);
}

TEST_CASE("windowed average of one through ten is five point five") {
  TaskHarness h;
  WindowedAverageTask task("value");
  std::vector<Message> batch;
  for (int i = 1; i <= 10; ++i) batch.push_back(msg_with({{"value", int64_t{i}}}));
  h.feed_window(task, batch);
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("average") == doctest::Approx(5.5).epsilon(1e-12));
}

TEST_CASE("windowed average of a constant stream is the constant") {
  TaskHarness h;
  WindowedAverageTask task("value");
  std::vector<Message> batch(90, msg_with({{"value", 3.25}}));
  h.feed_window(task, batch);
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("average") == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("windowed average matches an independent summation oracle") {
  Rng rng(15);
  TaskHarness h;
  WindowedAverageTask task("value");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Message> batch;
    long double sum = 0;
    for (int i = 0; i < 90; ++i) {
      double v = rng.uniform(-50, 50);
      sum += v;
      batch.push_back(msg_with({{"value", v}}));
    }
    h.out.clear();
    h.feed_window(task, batch);
    REQUIRE(h.out.size() == 1);
    double expected = static_cast<double>(sum / 90.0L);
    CHECK(std::abs(*h.out[0].get_numeric("average") - expected) <=
          1e-12 * (1 + std::abs(expected)));
  }
}

TEST_CASE("windowed average excludes non-numeric values and counts them") {
  TaskHarness h;
  WindowedAverageTask task("value");
  std::vector<Message> batch;
  batch.push_back(msg_with({{"value", 4.0}}));
  batch.push_back(msg_with({{"value", std::string("not-a-number")}}));
  batch.push_back(msg_with({{"value", 6.0}}));
  h.feed_window(task, batch);
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("average") == doctest::Approx(5.0));
  CHECK(h.counter("non_numeric_excluded") == 1);
}

TEST_CASE("kalman with zero measurement noise reproduces each measurement") {
  TaskHarness h;
  KalmanTask task("value", 1e-4, 0.0);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    double z = rng.uniform(-10, 10);
    h.out.clear();
    h.feed(task, msg_with({{"value", z}}));
    REQUIRE(h.out.size() == 1);
    CHECK(*h.out[0].get_numeric("value") == doctest::Approx(z).epsilon(1e-12));
  }
}

TEST_CASE("kalman converges monotonically to a constant signal") {
  KalmanTask::State s;
  kalman_step(s, 10.0, 1e-4, 1e-2);  // initializes at the first measurement
  s.estimate = 0.0;                  // restart from a displaced estimate
  double prev = 0.0;
  for (int i = 0; i < 200; ++i) {
    double est = kalman_step(s, 10.0, 1e-4, 1e-2);
    CHECK(est >= prev);
    CHECK(est <= 10.0);
    prev = est;
  }
  CHECK(prev == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("kalman recursion matches an independently coded oracle") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    double q = 1e-4, r = 1e-2;
    KalmanTask::State s;
    // Oracle state, recursion re-derived separately.
    double ox = 0, op = 0;
    bool started = false;
    for (int i = 0; i < 100; ++i) {
      double z = rng.normal(5.0, 1.0);
      double mine = kalman_step(s, z, q, r);
      double theirs;
      if (!started) {
        started = true;
        ox = z;
        op = r;
        theirs = ox;
      } else {
        double p_pred = op + q;
        double gain = p_pred / (p_pred + r);
        ox = ox + gain * (z - ox);
        op = (1.0 - gain) * p_pred;
        theirs = ox;
      }
      CHECK(std::abs(mine - theirs) <= 1e-9);
    }
    CHECK(s.variance > 0);
  }
}

TEST_CASE("kalman estimate stays bounded by the observed range") {
  Rng rng(19);
  KalmanTask::State s;
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < 500; ++i) {
    double z = rng.uniform(-20, 40);
    lo = std::min(lo, z);
    hi = std::max(hi, z);
    double est = kalman_step(s, z, 0.0, 1e-2);
    CHECK(est >= lo - 1e-9);
    CHECK(est <= hi + 1e-9);
  }
}

TEST_CASE("second moment task emits a running estimate per input") {
  TaskHarness h;
  SecondMomentTask task("value", 1, 1, 6);
  for (int i = 0; i < 9; ++i) {
    h.out.clear();
    h.feed(task, msg_with({{"value", std::string("same")}}));
  }
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("f2_estimate") == doctest::Approx(81.0));
}

TEST_CASE("decision tree stump classifies both sides and the boundary") {
  auto leaf = [](const char* l) {
    auto n = std::make_unique<TreeNode>();
    n->is_leaf = true;
    n->label = l;
    return n;
  };
  DecisionTreeModel stump;
  stump.version = 1;
  stump.root = std::make_unique<TreeNode>();
  stump.root->attribute = "temp";
  stump.root->threshold = 5.0;
  stump.root->left = leaf("low");
  stump.root->right = leaf("high");

  CHECK(stump.classify(msg_with({{"temp", 3.0}})).label == "low");
  // Equality goes right by convention.
  CHECK(stump.classify(msg_with({{"temp", 5.0}})).label == "high");
  CHECK(stump.classify(msg_with({{"temp", 7.5}})).label == "high");
}

TEST_CASE("decision tree task matches an independent tree walker on fixtures") {
  auto dir = std::filesystem::temp_directory_path() / "streammark_dtc_fixture";
  ModelFixture fx = write_fixture_models(dir, "CITY");
  DecisionTreeModel model = ModelArtifact::load_file(fx.dtc_v1.string()).to_tree();

  // Independent walker: recursive evaluation re-coded here.
  std::function<std::string(const TreeNode*, const Message&)> walk =
      [&](const TreeNode* n, const Message& m) -> std::string {
    if (n->is_leaf) return n->label;
    auto v = m.get_numeric(n->attribute);
    bool left = v ? (*v < n->threshold) : n->default_left;
    return walk(left ? n->left.get() : n->right.get(), m);
  };

  TaskHarness h;
  DecisionTreeTask task(ModelArtifact::load_file(fx.dtc_v1.string()).to_tree());
  Rng rng(23);
  for (int i = 0; i < 50; ++i) {
    Message m;
    for (const auto& b : dataset_bands("CITY"))
      m.set(b.field, rng.uniform(b.lo - 20, b.hi + 20));
    std::string expected = walk(model.root.get(), m);
    h.out.clear();
    h.feed(task, std::move(m));
    REQUIRE(h.out.size() == 1);
    CHECK(*h.out[0].get_string("class") == expected);
  }
}

TEST_CASE("decision tree routes missing attributes to the default branch") {
  auto dir = std::filesystem::temp_directory_path() / "streammark_dtc_fixture";
  ModelFixture fx = write_fixture_models(dir, "CITY");
  TaskHarness h;
  DecisionTreeTask task(ModelArtifact::load_file(fx.dtc_v1.string()).to_tree());
  h.feed(task, msg_with({{"unrelated", 1.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(h.counter("default_branch_used") == 1);
}

TEST_CASE("mlr computes the dot product with intercept") {
  LinearModel m;
  m.intercept = 0;
  m.features = {"a", "b", "c"};
  m.coefficients = {1, 2, 3};
  TaskHarness h;
  MlrTask task(m);
  h.feed(task, msg_with({{"a", 1.0}, {"b", 1.0}, {"c", 1.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("prediction") == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("mlr with zero coefficients returns the intercept") {
  LinearModel m;
  m.intercept = 4.5;
  m.features = {"a", "b"};
  m.coefficients = {0, 0};
  TaskHarness h;
  MlrTask task(m);
  h.feed(task, msg_with({{"a", 123.0}, {"b", -9.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("prediction") == doctest::Approx(4.5));
}

TEST_CASE("mlr matches a long-double dot-product oracle") {
  Rng rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 1 + static_cast<int>(rng.below(12));
    LinearModel m;
    m.intercept = rng.uniform(-10, 10);
    Message x;
    long double expect = m.intercept;
    for (int j = 0; j < n; ++j) {
      std::string f = "f" + std::to_string(j);
      double beta = rng.uniform(-5, 5);
      double xv = rng.uniform(-100, 100);
      m.features.push_back(f);
      m.coefficients.push_back(beta);
      x.set(f, xv);
      expect += (long double)beta * xv;
    }
    TaskHarness h;
    MlrTask task(m);
    h.feed(task, std::move(x));
    REQUIRE(h.out.size() == 1);
    CHECK(std::abs(*h.out[0].get_numeric("prediction") - (double)expect) <=
          1e-12 * (1 + std::abs((double)expect)));
  }
}

TEST_CASE("mlr drops messages with missing features and counts them") {
  LinearModel m;
  m.features = {"a", "b"};
  m.coefficients = {1, 1};
  TaskHarness h;
  MlrTask task(m);
  h.feed(task, msg_with({{"a", 1.0}}));
  CHECK(h.out.empty());
  CHECK(h.counter("missing_feature") == 1);
}

TEST_CASE("sliding regression reproduces an exact line") {
  TaskHarness h;
  SlidingRegressionTask task("y", 10, 3);
  for (int t = 0; t < 12; ++t) {
    Message m = msg_with({{"y", 2.0 * t + 1.0}});
    m.event_time_ms = t;
    h.out.clear();
    h.feed(task, std::move(m));
    if (t < 9) CHECK(h.out.empty());  // window not yet full
  }
  REQUIRE(h.out.size() == 3);
  for (int j = 1; j <= 3; ++j) {
    double tp = 11.0 + j;
    CHECK(*h.out[j - 1].get_numeric("t_predicted") == doctest::Approx(tp));
    CHECK(*h.out[j - 1].get_numeric("prediction") ==
          doctest::Approx(2.0 * tp + 1.0).epsilon(1e-9));
  }
}

TEST_CASE("sliding regression of a constant series predicts the constant") {
  TaskHarness h;
  SlidingRegressionTask task("y", 5, 2);
  for (int t = 0; t < 8; ++t) {
    Message m = msg_with({{"y", 7.25}});
    m.event_time_ms = t * 10;
    h.out.clear();
    h.feed(task, std::move(m));
  }
  REQUIRE(h.out.size() == 2);
  CHECK(*h.out[0].get_numeric("prediction") == doctest::Approx(7.25).epsilon(1e-9));
  CHECK(*h.out[1].get_numeric("prediction") == doctest::Approx(7.25).epsilon(1e-9));
}

TEST_CASE("sliding regression matches the closed-form normal equations") {
  Rng rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 10;
    std::vector<double> ts, ys;
    int64_t t0 = 1'421'200'800'000LL;  // epoch-scale abscissae
    for (int i = 0; i < N; ++i) {
      ts.push_back(static_cast<double>(t0 + i * 1000 + static_cast<int64_t>(rng.below(200))));
      ys.push_back(0.3 * i + rng.normal(0, 2.0));
    }
    // Oracle: normal equations in long double.
    long double st = 0, sy = 0;
    for (int i = 0; i < N; ++i) {
      st += ts[i];
      sy += ys[i];
    }
    long double tbar = st / N, ybar = sy / N;
    long double stt = 0, sty = 0;
    for (int i = 0; i < N; ++i) {
      stt += (ts[i] - tbar) * (ts[i] - tbar);
      sty += (ts[i] - tbar) * (ys[i] - ybar);
    }
    long double slope_o = sty / stt;
    long double intercept_o = ybar - slope_o * tbar;

    double slope = 0, intercept = 0;
    REQUIRE(ols_fit(ts, ys, slope, intercept));
    CHECK(std::abs(slope - (double)slope_o) <= 1e-9 * (1 + std::abs((double)slope_o)));
    CHECK(std::abs(intercept - (double)intercept_o) <=
          1e-6 * (1 + std::abs((double)intercept_o)));
  }
}

TEST_CASE("sliding regression skips degenerate windows and counts them") {
  TaskHarness h;
  SlidingRegressionTask task("y", 3, 1);
  for (int i = 0; i < 5; ++i) {
    Message m = msg_with({{"y", static_cast<double>(i)}});
    m.event_time_ms = 1000;  // identical timestamps
    h.feed(task, std::move(m));
  }
  CHECK(h.out.empty());
  CHECK(h.counter("degenerate_window") == 3);
}

TEST_CASE("error estimate is zero for a perfect prediction") {
  TaskHarness h;
  ErrorEstimateTask task("prediction", "observed", 10);
  h.feed(task, msg_with({{"prediction", 9.0}, {"observed", 9.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("error") == doctest::Approx(0.0));
}

TEST_CASE("error estimate normalizes by the sliding mean") {
  TaskHarness h;
  ErrorEstimateTask task("prediction", "observed", 4);
  // Fill the history with tens so the sliding mean is exactly ten.
  for (int i = 0; i < 4; ++i)
    h.feed(task, msg_with({{"prediction", 10.0}, {"observed", 10.0}}));
  h.out.clear();
  h.feed(task, msg_with({{"prediction", 12.0}, {"observed", 10.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_numeric("error") == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("error estimate flags an undefined normalization") {
  TaskHarness h;
  ErrorEstimateTask task("prediction", "observed", 3);
  h.feed(task, msg_with({{"prediction", 1.0}, {"observed", 0.0}}));
  REQUIRE(h.out.size() == 1);
  CHECK(!h.out[0].has("error"));
  CHECK(h.out[0].has("error_flagged"));
  CHECK(h.counter("undefined_error_mean") == 1);
}

TEST_CASE("error estimate matches recomputation over a stream fixture") {
  TaskHarness h;
  const size_t W = 7;
  ErrorEstimateTask task("prediction", "observed", W);
  Rng rng(61);
  std::vector<double> obs_hist;
  for (int i = 0; i < 200; ++i) {
    double o = rng.uniform(1, 50);
    double p = o + rng.uniform(-5, 5);
    obs_hist.push_back(o);
    h.out.clear();
    h.feed(task, msg_with({{"prediction", p}, {"observed", o}}));
    size_t n = std::min(obs_hist.size(), W);
    long double sum = 0;
    for (size_t j = obs_hist.size() - n; j < obs_hist.size(); ++j) sum += obs_hist[j];
    double mean = static_cast<double>(sum / n);
    double expected = std::fabs(p - o) / mean;
    REQUIRE(h.out.size() == 1);
    CHECK(std::abs(*h.out[0].get_numeric("error") - expected) <=
          1e-12 * (1 + expected));
  }
}

TEST_CASE("chart rendering emits one polyline per group") {
  std::vector<std::pair<std::string, double>> one = {{"g", 1.0}, {"g", 2.0}};
  std::string svg = render_group_chart(one);
  size_t count = 0, pos = 0;
  while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 1);
  // Two vertices: exactly two coordinate pairs in the points attribute.
  size_t pts = svg.find("points=\"");
  REQUIRE(pts != std::string::npos);
  std::string points = svg.substr(pts + 8, svg.find('"', pts + 8) - pts - 8);
  CHECK(std::count(points.begin(), points.end(), ',') == 2);

  std::vector<std::pair<std::string, double>> two = {
      {"a", 1.0}, {"b", 2.0}, {"a", 3.0}};
  std::string svg2 = render_group_chart(two);
  count = 0;
  pos = 0;
  while ((pos = svg2.find("<polyline", pos)) != std::string::npos) {
    ++count;
    ++pos;
  }
  CHECK(count == 2);
}

TEST_CASE("chart output is byte-identical for identical input") {
  std::vector<std::pair<std::string, double>> pairs;
  Rng rng(9);
  for (int i = 0; i < 40; ++i)
    pairs.emplace_back(i % 2 ? "odd" : "even", rng.uniform(0, 10));
  CHECK(render_group_chart(pairs) == render_group_chart(pairs));
}

TEST_CASE("model control messages swap strictly forward") {
  auto dir = std::filesystem::temp_directory_path() / "streammark_swap_fixture";
  ModelFixture fx = write_fixture_models(dir, "CITY");
  TaskHarness h;
  DecisionTreeTask task(ModelArtifact::load_file(fx.dtc_v1.string()).to_tree());
  CHECK(task.model_version() == 1);

  auto control = [&](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::string text((std::istreambuf_iterator<char>(f)), {});
    Message m;
    m.set(kModelControlField, std::move(text));
    return m;
  };

  // Probe classifies differently under the two versions.
  h.feed(task, Message(fx.probe));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_string("class") == fx.probe_class_v1);
  CHECK(*h.out[0].get_int("model_version") == 1);

  h.feed(task, control(fx.dtc_v2));
  CHECK(task.model_version() == 2);
  CHECK(h.counter("model_swaps") == 1);

  h.out.clear();
  h.feed(task, Message(fx.probe));
  REQUIRE(h.out.size() == 1);
  CHECK(*h.out[0].get_string("class") == fx.probe_class_v2);
  CHECK(*h.out[0].get_int("model_version") == 2);

  // Stale version is ignored and counted.
  h.feed(task, control(fx.dtc_v1));
  CHECK(task.model_version() == 2);
  CHECK(h.counter("stale_model_ignored") == 1);

  // Mismatched kind is skipped.
  h.feed(task, control(fx.mlr_v2));
  CHECK(h.counter("model_kind_skipped") == 1);
}

TEST_CASE("stateful tasks replay deterministically") {
  auto run_once = [] {
    TaskHarness h;
    DistinctCountTask task("value", 10, 5);
    Rng rng(88);
    double last = 0;
    for (int i = 0; i < 20000; ++i) {
      h.out.clear();
      h.feed(task, msg_with({{"value", static_cast<int64_t>(rng.below(10000))}}));
      last = *h.out[0].get_numeric("distinct_estimate");
    }
    return last;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("blob download retries transient failures then counts a task failure") {
  struct FlakyStore : ObjectStore {
    int failures_per_get = 0;
    int calls = 0;
    MemObjectStore inner;
    void put(const ObjectRef& ref, const std::vector<uint8_t>& b) override {
      inner.put(ref, b);
    }
    std::optional<std::vector<uint8_t>> get(const ObjectRef& ref) override {
      if (calls++ < failures_per_get) throw BackendUnavailable("transient");
      return inner.get(ref);
    }
    std::vector<std::string> list(const std::string& c) override {
      return inner.list(c);
    }
  };

  auto flaky = std::make_shared<FlakyStore>();
  flaky->inner.put({"bench", "k"}, {'h', 'i'});
  IoTaskConfig cfg;
  cfg.retry.base_backoff_ms = 1;

  {  // recovers within the retry budget
    flaky->failures_per_get = 2;
    flaky->calls = 0;
    TaskHarness h;
    BlobDownloadTask task(flaky, cfg, "key");
    h.feed(task, msg_with({{"key", std::string("k")}}));
    REQUIRE(h.out.size() == 1);
    CHECK(*h.out[0].get_string("payload") == "hi");
    CHECK(h.counter("io_retries") == 2);
    CHECK(h.counter("io_failures") == 0);
  }
  {  // exhausts the retries: message dropped, failure counted
    flaky->failures_per_get = 99;
    flaky->calls = 0;
    TaskHarness h;
    BlobDownloadTask task(flaky, cfg, "key");
    h.feed(task, msg_with({{"key", std::string("k")}}));
    CHECK(h.out.empty());
    CHECK(h.counter("io_failures") == 1);
  }
}

}  // TEST_SUITE
