#include <doctest.h>

#include <chrono>
#include <thread>

#include "streammark/peak.hpp"
#include "streammark/streamgen.hpp"
#include "streammark/tasks.hpp"

using namespace streammark;

namespace {

// Micro topology around an arbitrary middle task, driven at a constant rate.
TopologyBundle service_topology(double rate, double service_ms) {
  TopologyBundle b;
  TaskDescriptor src, mid, sink;
  src.name = "source";
  src.kind = TaskKind::source;
  mid.name = "bench";
  mid.kind = TaskKind::transform;
  sink.name = "sink";
  sink.kind = TaskKind::sink;
  b.dataflow.tasks = {src, mid, sink};
  b.dataflow.edges = {{"source", "bench", Routing::round_robin, ""},
                      {"bench", "sink", Routing::round_robin, ""}};
  b.registry.sources["source"] = [rate](int) {
    return std::make_unique<RandomIntegerSource>(
        RateSpec{RateMode::constant, rate, 1}, 7, 1000);
  };
  if (service_ms > 0) {
    b.registry.tasks["bench"] = [service_ms](int) {
      return std::make_unique<tasks::SleepTask>(service_ms);
    };
  } else {
    b.registry.tasks["bench"] = [](int) {
      return std::make_unique<tasks::IdentityTask>();
    };
  }
  b.registry.tasks["sink"] = [](int) {
    return std::make_unique<tasks::CountingSink>();
  };
  b.expected_ratio = 1.0;
  b.label = "svc";
  return b;
}

}  // namespace

TEST_SUITE("peak") {

TEST_CASE("a one-millisecond service task peaks near a thousand messages per second") {
  PeakSearchOptions opt;
  opt.min_rate = 300;
  opt.max_rate = 16000;
  opt.probe_duration_s = 1.2;
  opt.resolution = 0.05;
  auto factory = [](double rate) { return service_topology(rate, 1.0); };
  PeakSearchResult r = peak_rate_search(factory, opt);
  REQUIRE(r.any_sustained);
  // Analytic service-rate bound: 1 ms of service caps at ~1000 msg/s.
  CHECK(r.peak_rate >= 900.0);
  CHECK(r.peak_rate <= 1100.0);
}

TEST_CASE("peak search on a no-op task is self-consistent across repeats") {
  PeakSearchOptions opt;
  opt.min_rate = 2000;
  opt.max_rate = 3e6;
  opt.probe_duration_s = 1.0;
  opt.resolution = 0.08;
  auto factory = [](double rate) { return service_topology(rate, 0.0); };
  PeakSearchResult a = peak_rate_search(factory, opt);
  PeakSearchResult b = peak_rate_search(factory, opt);
  REQUIRE(a.any_sustained);
  REQUIRE(b.any_sustained);
  CHECK(a.peak_rate > 0);
  double ratio = a.peak_rate / b.peak_rate;
  if (ratio < 1) ratio = 1 / ratio;
  CHECK(ratio <= 1.30);
}

TEST_CASE("a task that cannot keep up at any probed rate reports unsustainable") {
  PeakSearchOptions opt;
  opt.min_rate = 200;  // far above a 20 msg/s service ceiling
  opt.max_rate = 400;
  opt.probe_duration_s = 0.8;
  auto factory = [](double rate) { return service_topology(rate, 50.0); };
  PeakSearchResult r = peak_rate_search(factory, opt);
  CHECK(!r.any_sustained);
  CHECK(r.peak_rate == 0);
  REQUIRE(!r.probes.empty());  // diagnostics retained
  CHECK(!r.probes[0].sustained);
}

TEST_CASE("parsing is slower than membership filtering on the same hardware") {
  // The ordering matters, not the absolute rates.
  PeakSearchOptions opt;
  opt.min_rate = 2000;
  opt.max_rate = 2e6;
  opt.probe_duration_s = 0.9;
  opt.resolution = 0.15;
  auto micro_factory = [](const std::string& code) {
    return [code](double rate) {
      Backends backends;
      MicroConfig cfg;
      cfg.rate = RateSpec{RateMode::constant, rate, 1.0};
      return build_micro(code, cfg, backends);
    };
  };
  PeakSearchResult xml = peak_rate_search(micro_factory("XML"), opt);
  PeakSearchResult blf = peak_rate_search(micro_factory("BLF"), opt);
  REQUIRE(xml.any_sustained);
  REQUIRE(blf.any_sustained);
  CHECK(xml.peak_rate < blf.peak_rate);
}

}  // TEST_SUITE
