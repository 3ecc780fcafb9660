#include <doctest.h>

#include <thread>

#include "streammark/mqtt.hpp"

using namespace streammark::mqtt;

TEST_SUITE("mqtt") {

TEST_CASE("connect packet matches hand-assembled 3.1.1 bytes") {
  // Fixed header 0x10, remaining length 14; protocol name "MQTT", level 4,
  // clean session, keepalive 60, client id "ab".
  std::vector<uint8_t> expected = {
      0x10, 0x0e, 0x00, 0x04, 'M', 'Q', 'T', 'T', 0x04, 0x02,
      0x00, 0x3c, 0x00, 0x02, 'a', 'b'};
  CHECK(encode_connect("ab", 60) == expected);
}

TEST_CASE("publish packet matches hand-assembled bytes") {
  // 0x30, remaining length 6: topic "t/1" + payload "x".
  std::vector<uint8_t> expected = {0x30, 0x06, 0x00, 0x03, 't', '/', '1', 'x'};
  CHECK(encode_publish("t/1", {'x'}) == expected);
}

TEST_CASE("remaining length uses continuation bytes per the spec") {
  std::vector<uint8_t> buf;
  append_remaining_length(buf, 321);
  REQUIRE(buf.size() == 2);
  CHECK(buf[0] == 0xc1);
  CHECK(buf[1] == 0x02);

  for (size_t len : {size_t{0}, size_t{127}, size_t{128}, size_t{16383},
                     size_t{16384}, size_t{2097151}}) {
    std::vector<uint8_t> enc;
    append_remaining_length(enc, len);
    size_t decoded = 0;
    int used = decode_remaining_length(enc.data(), enc.size(), decoded);
    CHECK(used == static_cast<int>(enc.size()));
    CHECK(decoded == len);
  }
}

TEST_CASE("decoder reassembles packets fed one byte at a time") {
  auto bytes = encode_publish("sensors/temp", {'1', '2', '3'});
  Decoder dec;
  std::optional<Packet> packet;
  for (uint8_t b : bytes) {
    CHECK(!packet.has_value());
    dec.feed(&b, 1);
    packet = dec.next();
  }
  REQUIRE(packet.has_value());
  CHECK(packet->type == PacketType::publish);
  auto view = parse_publish(*packet);
  REQUIRE(view.has_value());
  CHECK(view->topic == "sensors/temp");
  CHECK(view->payload == std::vector<uint8_t>{'1', '2', '3'});
}

TEST_CASE("publish encoding and parsing are inverse") {
  for (const std::string& topic : {"a", "bench/stats", "x/y/z"}) {
    std::vector<uint8_t> payload;
    for (int i = 0; i < 100; ++i) payload.push_back(static_cast<uint8_t>(i * 7));
    auto bytes = encode_publish(topic, payload);
    Decoder dec;
    dec.feed(bytes.data(), bytes.size());
    auto p = dec.next();
    REQUIRE(p.has_value());
    auto view = parse_publish(*p);
    REQUIRE(view.has_value());
    CHECK(view->topic == topic);
    CHECK(view->payload == payload);
  }
}

TEST_CASE("tcp publisher speaks to a live broker over the loopback") {
  MiniBroker broker;
  TcpPublisher pub("127.0.0.1", broker.port(), "bench-client");
  REQUIRE(pub.connect());
  CHECK(pub.publish("t1", {'x'}));
  pub.disconnect();
  // Delivery is asynchronous; give the broker a beat.
  for (int i = 0; i < 100 && broker.publish_count() < 1; ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  auto seen = broker.published();
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].topic == "t1");
  CHECK(seen[0].payload == std::vector<uint8_t>{'x'});
}

TEST_CASE("ten thousand publishes arrive complete and in order") {
  MiniBroker broker;
  TcpPublisher pub("127.0.0.1", broker.port(), "bench-client");
  REQUIRE(pub.connect());
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::string s = std::to_string(i);
    REQUIRE(pub.publish("seq", std::vector<uint8_t>(s.begin(), s.end())));
  }
  pub.disconnect();
  for (int i = 0; i < 400 && broker.publish_count() < static_cast<size_t>(n); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  auto seen = broker.published();
  REQUIRE(seen.size() == static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::string s(seen[i].payload.begin(), seen[i].payload.end());
    CHECK(s == std::to_string(i));
    CHECK(seen[i].topic == "seq");
  }
}

}  // TEST_SUITE
