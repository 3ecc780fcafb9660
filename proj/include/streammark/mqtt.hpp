#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace streammark::mqtt {

// MQTT 3.1.1 wire codec, QoS 0 subset: CONNECT/CONNACK, PUBLISH, PINGREQ,
// DISCONNECT. Enough to interoperate with a standard broker as a publisher.

enum class PacketType : uint8_t {
  connect = 1,
  connack = 2,
  publish = 3,
  pingreq = 12,
  pingresp = 13,
  disconnect = 14,
};

void append_remaining_length(std::vector<uint8_t>& out, size_t len);
// Returns bytes consumed, or 0 if more input is needed; -1 on malformed.
int decode_remaining_length(const uint8_t* data, size_t len, size_t& value);

std::vector<uint8_t> encode_connect(const std::string& client_id,
                                    uint16_t keepalive_s = 60);
std::vector<uint8_t> encode_connack(bool session_present = false,
                                    uint8_t return_code = 0);
std::vector<uint8_t> encode_publish(const std::string& topic,
                                    const std::vector<uint8_t>& payload);
std::vector<uint8_t> encode_disconnect();

struct Packet {
  PacketType type;
  uint8_t flags = 0;
  std::vector<uint8_t> body;  // variable header + payload
};

// Incremental decoder over a byte buffer; consumes complete packets.
class Decoder {
 public:
  void feed(const uint8_t* data, size_t len);
  std::optional<Packet> next();

 private:
  std::vector<uint8_t> buf_;
};

struct PublishView {
  std::string topic;
  std::vector<uint8_t> payload;
};
std::optional<PublishView> parse_publish(const Packet& p);
std::optional<std::string> parse_connect_client_id(const Packet& p);

// Blocking TCP publisher: CONNECT on connect(), PUBLISH QoS 0 per message,
// DISCONNECT on close. Reconnects once per publish attempt after a session
// loss, counting reconnects.
class TcpPublisher {
 public:
  TcpPublisher(std::string host, uint16_t port, std::string client_id);
  ~TcpPublisher();

  bool connect();
  bool publish(const std::string& topic, const std::vector<uint8_t>& payload);
  void disconnect();

  uint64_t reconnects() const { return reconnects_; }

 private:
  bool send_all(const std::vector<uint8_t>& bytes);

  std::string host_;
  uint16_t port_;
  std::string client_id_;
  int fd_ = -1;
  uint64_t reconnects_ = 0;
};

// Minimal in-repo broker for interop tests and local runs: accepts CONNECT,
// replies CONNACK, records PUBLISH packets in arrival order.
class MiniBroker {
 public:
  MiniBroker();
  ~MiniBroker();

  uint16_t port() const { return port_; }
  void stop();

  std::vector<PublishView> published() const;
  size_t publish_count() const;

 private:
  void accept_loop();
  void client_loop(int fd);

  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{true};
  std::thread accept_thread_;
  mutable std::mutex mutex_;
  std::vector<PublishView> published_;
  std::vector<std::thread> clients_;
};

}  // namespace streammark::mqtt
