#include <doctest.h>

#include <atomic>
#include <functional>
#include <map>

#include "streammark/common.hpp"
#include "streammark/iobackends.hpp"

using namespace streammark;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("streammark_io_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// The same contract must hold for every backend; the suites below iterate
// over in-process and filesystem implementations.
using StoreFactory = std::function<std::unique_ptr<ObjectStore>()>;

std::vector<std::pair<std::string, StoreFactory>> object_store_factories() {
  return {
      {"mem", [] { return std::make_unique<MemObjectStore>(); }},
      {"dir", [] { return std::make_unique<DirObjectStore>(fresh_dir("objs")); }},
  };
}

}  // namespace

TEST_SUITE("iobackends") {

TEST_CASE("object stores round-trip bytes and report missing keys") {
  for (auto& [label, make] : object_store_factories()) {
    CAPTURE(label);
    auto store = make();
    std::vector<uint8_t> abc{'a', 'b', 'c'};
    store->put({"c1", "k1"}, abc);
    auto got = store->get({"c1", "k1"});
    REQUIRE(got.has_value());
    CHECK(*got == abc);
    CHECK(!store->get({"c1", "absent"}).has_value());
    CHECK(!store->get({"nope", "k1"}).has_value());
    auto keys = store->list("c1");
    REQUIRE(keys.size() == 1);
    CHECK(keys[0] == "k1");
  }
}

TEST_CASE("a one-mebibyte payload survives with an identical checksum") {
  Rng rng(14);
  std::vector<uint8_t> payload(1 << 20);
  for (auto& b : payload) b = static_cast<uint8_t>(rng.next_u64());
  const uint64_t checksum = hash_bytes(payload.data(), payload.size());
  for (auto& [label, make] : object_store_factories()) {
    CAPTURE(label);
    auto store = make();
    store->put({"big", "blob"}, payload);
    auto got = store->get({"big", "blob"});
    REQUIRE(got.has_value());
    CHECK(got->size() == payload.size());
    CHECK(hash_bytes(got->data(), got->size()) == checksum);
  }
}

TEST_CASE("table stores address rows by partition and row key") {
  auto file = fresh_dir("table");
  std::filesystem::create_directories(file);
  std::vector<std::unique_ptr<TableStore>> stores;
  stores.push_back(std::make_unique<MemTableStore>());
  stores.push_back(std::make_unique<FileTableStore>(file / "rows.jsonl"));
  for (auto& store : stores) {
    store->insert("t", "p", "1", TableRow{{"v", int64_t{42}}});
    auto row = store->query({"t", "p", "1"});
    REQUIRE(row.has_value());
    CHECK(std::get<int64_t>(row->at("v")) == 42);
    CHECK(!store->query({"t", "p", "2"}).has_value());
    CHECK(!store->query({"t", "q", "1"}).has_value());
  }
}

TEST_CASE("a thousand seeded rows all match the insertion oracle") {
  Rng rng(2);
  std::map<std::pair<std::string, std::string>, int64_t> oracle;
  MemTableStore store;
  for (int i = 0; i < 1000; ++i) {
    std::string pk = "p" + std::to_string(rng.below(50));
    std::string rk = std::to_string(i);
    int64_t v = static_cast<int64_t>(rng.next_u64() % 100000);
    oracle[{pk, rk}] = v;
    store.insert("t", pk, rk, TableRow{{"v", v}});
  }
  for (const auto& [key, v] : oracle) {
    auto row = store.query({"t", key.first, key.second});
    REQUIRE(row.has_value());
    CHECK(std::get<int64_t>(row->at("v")) == v);
  }
}

TEST_CASE("file table stores reload their rows") {
  auto dir = fresh_dir("persist");
  std::filesystem::create_directories(dir);
  auto path = dir / "t.jsonl";
  {
    FileTableStore store(path);
    store.insert("t", "p", "r", TableRow{{"s", std::string("hello")},
                                         {"d", 2.5}});
  }
  FileTableStore reopened(path);
  auto row = reopened.query({"t", "p", "r"});
  REQUIRE(row.has_value());
  CHECK(std::get<std::string>(row->at("s")) == "hello");
  CHECK(std::get<double>(row->at("d")) == doctest::Approx(2.5));
}

TEST_CASE("pubsub delivers to subscribers on the topic only") {
  PubSubBroker broker;
  std::vector<std::string> got_t1, got_t2;
  broker.subscribe("t1", [&](const std::vector<uint8_t>& p) {
    got_t1.emplace_back(p.begin(), p.end());
  });
  broker.subscribe("t2", [&](const std::vector<uint8_t>& p) {
    got_t2.emplace_back(p.begin(), p.end());
  });
  broker.publish("t1", {'x'});
  REQUIRE(got_t1.size() == 1);
  CHECK(got_t1[0] == "x");
  CHECK(got_t2.empty());
}

TEST_CASE("pubsub preserves publish order per topic over ten thousand messages") {
  PubSubBroker broker;
  std::vector<uint64_t> received;
  broker.subscribe("seq", [&](const std::vector<uint8_t>& p) {
    uint64_t v = 0;
    for (uint8_t b : p) v = v * 10 + (b - '0');
    received.push_back(v);
  });
  for (uint64_t i = 0; i < 10000; ++i) {
    std::string s = std::to_string(i);
    broker.publish("seq", std::vector<uint8_t>(s.begin(), s.end()));
  }
  REQUIRE(received.size() == 10000);
  for (uint64_t i = 0; i < 10000; ++i) CHECK(received[i] == i);
  CHECK(broker.delivered() == 10000);
}

TEST_CASE("at-most-once delivery: publishes without subscribers vanish") {
  PubSubBroker broker;
  broker.publish("nobody", {'z'});
  CHECK(broker.delivered() == 0);
}

TEST_CASE("retries back off and give up after the configured attempts") {
  RetryPolicy policy;
  policy.attempts = 3;
  policy.base_backoff_ms = 1;

  int calls = 0;
  uint64_t retries = 0;
  bool ok = with_retries(policy,
                         [&] {
                           if (++calls < 3) throw BackendUnavailable("flaky");
                         },
                         &retries);
  CHECK(ok);
  CHECK(calls == 3);
  CHECK(retries == 2);

  calls = 0;
  retries = 0;
  ok = with_retries(policy, [&] {
    ++calls;
    throw BackendUnavailable("down");
  }, &retries);
  CHECK(!ok);
  CHECK(calls == 3);
  CHECK(retries == 3);
}

}  // TEST_SUITE
