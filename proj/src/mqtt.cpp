#include "streammark/mqtt.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

namespace streammark::mqtt {

namespace {

void append_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

void append_utf8(std::vector<uint8_t>& out, const std::string& s) {
  append_u16(out, static_cast<uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

void append_remaining_length(std::vector<uint8_t>& out, size_t len) {
  do {
    uint8_t byte = len % 128;
    len /= 128;
    if (len > 0) byte |= 0x80;
    out.push_back(byte);
  } while (len > 0);
}

int decode_remaining_length(const uint8_t* data, size_t len, size_t& value) {
  value = 0;
  size_t multiplier = 1;
  for (size_t i = 0; i < 4; ++i) {
    if (i >= len) return 0;  // need more bytes
    value += static_cast<size_t>(data[i] & 0x7f) * multiplier;
    if (!(data[i] & 0x80)) return static_cast<int>(i + 1);
    multiplier *= 128;
  }
  return -1;  // over 4 bytes: malformed
}

std::vector<uint8_t> encode_connect(const std::string& client_id,
                                    uint16_t keepalive_s) {
  std::vector<uint8_t> body;
  append_utf8(body, "MQTT");
  body.push_back(0x04);  // protocol level 3.1.1
  body.push_back(0x02);  // clean session
  append_u16(body, keepalive_s);
  append_utf8(body, client_id);

  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(PacketType::connect) << 4);
  append_remaining_length(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<uint8_t> encode_connack(bool session_present, uint8_t return_code) {
  return {static_cast<uint8_t>(static_cast<uint8_t>(PacketType::connack) << 4), 0x02,
          static_cast<uint8_t>(session_present ? 1 : 0), return_code};
}

std::vector<uint8_t> encode_publish(const std::string& topic,
                                    const std::vector<uint8_t>& payload) {
  std::vector<uint8_t> body;
  append_utf8(body, topic);
  // QoS 0: no packet identifier.
  body.insert(body.end(), payload.begin(), payload.end());

  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(PacketType::publish) << 4);
  append_remaining_length(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<uint8_t> encode_disconnect() {
  return {static_cast<uint8_t>(static_cast<uint8_t>(PacketType::disconnect) << 4), 0x00};
}

void Decoder::feed(const uint8_t* data, size_t len) {
  buf_.insert(buf_.end(), data, data + len);
}

std::optional<Packet> Decoder::next() {
  if (buf_.size() < 2) return std::nullopt;
  size_t remaining = 0;
  int header = decode_remaining_length(buf_.data() + 1, buf_.size() - 1, remaining);
  if (header <= 0) return std::nullopt;
  size_t total = 1 + static_cast<size_t>(header) + remaining;
  if (buf_.size() < total) return std::nullopt;
  Packet p;
  p.type = static_cast<PacketType>(buf_[0] >> 4);
  p.flags = buf_[0] & 0x0f;
  p.body.assign(buf_.begin() + 1 + header, buf_.begin() + static_cast<long>(total));
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(total));
  return p;
}

std::optional<PublishView> parse_publish(const Packet& p) {
  if (p.type != PacketType::publish || p.body.size() < 2) return std::nullopt;
  size_t tlen = (static_cast<size_t>(p.body[0]) << 8) | p.body[1];
  if (p.body.size() < 2 + tlen) return std::nullopt;
  PublishView v;
  v.topic.assign(p.body.begin() + 2, p.body.begin() + 2 + static_cast<long>(tlen));
  size_t off = 2 + tlen;
  if ((p.flags & 0x06) != 0) {
    // QoS > 0 carries a packet identifier we do not support; skip it.
    if (p.body.size() < off + 2) return std::nullopt;
    off += 2;
  }
  v.payload.assign(p.body.begin() + static_cast<long>(off), p.body.end());
  return v;
}

std::optional<std::string> parse_connect_client_id(const Packet& p) {
  if (p.type != PacketType::connect || p.body.size() < 10) return std::nullopt;
  size_t plen = (static_cast<size_t>(p.body[0]) << 8) | p.body[1];
  size_t off = 2 + plen + 1 + 1 + 2;  // name, level, flags, keepalive
  if (p.body.size() < off + 2) return std::nullopt;
  size_t clen = (static_cast<size_t>(p.body[off]) << 8) | p.body[off + 1];
  off += 2;
  if (p.body.size() < off + clen) return std::nullopt;
  return std::string(p.body.begin() + static_cast<long>(off),
                     p.body.begin() + static_cast<long>(off + clen));
}

// ----------------------------------------------------------- TcpPublisher

TcpPublisher::TcpPublisher(std::string host, uint16_t port, std::string client_id)
    : host_(std::move(host)), port_(port), client_id_(std::move(client_id)) {}

TcpPublisher::~TcpPublisher() { disconnect(); }

bool TcpPublisher::send_all(const std::vector<uint8_t>& bytes) {
  size_t sent = 0;
  while (sent < bytes.size()) {
    ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<size_t>(n);
  }
  return true;
}

bool TcpPublisher::connect() {
  disconnect();
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) return false;
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port_);
  if (::inet_pton(AF_INET, host_.c_str(), &addr.sin_addr) != 1) {
    disconnect();
    return false;
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    disconnect();
    return false;
  }
  if (!send_all(encode_connect(client_id_))) {
    disconnect();
    return false;
  }
  // Wait for CONNACK.
  uint8_t buf[8];
  Decoder dec;
  while (true) {
    ssize_t n = ::recv(fd_, buf, sizeof buf, 0);
    if (n <= 0) {
      disconnect();
      return false;
    }
    dec.feed(buf, static_cast<size_t>(n));
    if (auto p = dec.next()) {
      if (p->type == PacketType::connack && p->body.size() >= 2 && p->body[1] == 0)
        return true;
      disconnect();
      return false;
    }
  }
}

bool TcpPublisher::publish(const std::string& topic,
                           const std::vector<uint8_t>& payload) {
  if (fd_ < 0) {
    ++reconnects_;
    if (!connect()) return false;
  }
  if (send_all(encode_publish(topic, payload))) return true;
  // Session lost mid-run: one reconnect attempt, then give up on this message.
  ++reconnects_;
  if (!connect()) return false;
  return send_all(encode_publish(topic, payload));
}

void TcpPublisher::disconnect() {
  if (fd_ >= 0) {
    std::vector<uint8_t> bye = encode_disconnect();
    (void)::send(fd_, bye.data(), bye.size(), MSG_NOSIGNAL);
    ::close(fd_);
    fd_ = -1;
  }
}

// -------------------------------------------------------------- MiniBroker

MiniBroker::MiniBroker() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("mini broker: socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;  // ephemeral
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw std::runtime_error("mini broker: bind failed");
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 16) != 0)
    throw std::runtime_error("mini broker: listen failed");
  accept_thread_ = std::thread([this] { accept_loop(); });
}

MiniBroker::~MiniBroker() { stop(); }

void MiniBroker::stop() {
  bool expected = true;
  if (!running_.compare_exchange_strong(expected, false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  for (auto& t : clients_)
    if (t.joinable()) t.join();
}

void MiniBroker::accept_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;
    std::lock_guard<std::mutex> lock(mutex_);
    clients_.emplace_back([this, fd] { client_loop(fd); });
  }
}

void MiniBroker::client_loop(int fd) {
  Decoder dec;
  uint8_t buf[4096];
  bool connected = false;
  while (running_) {
    ssize_t n = ::recv(fd, buf, sizeof buf, 0);
    if (n <= 0) break;
    dec.feed(buf, static_cast<size_t>(n));
    while (auto p = dec.next()) {
      switch (p->type) {
        case PacketType::connect: {
          connected = true;
          auto ack = encode_connack();
          (void)::send(fd, ack.data(), ack.size(), MSG_NOSIGNAL);
          break;
        }
        case PacketType::publish: {
          if (!connected) break;
          if (auto v = parse_publish(*p)) {
            std::lock_guard<std::mutex> lock(mutex_);
            published_.push_back(std::move(*v));
          }
          break;
        }
        case PacketType::pingreq: {
          std::vector<uint8_t> resp{
              static_cast<uint8_t>(static_cast<uint8_t>(PacketType::pingresp) << 4), 0};
          (void)::send(fd, resp.data(), resp.size(), MSG_NOSIGNAL);
          break;
        }
        case PacketType::disconnect:
          ::close(fd);
          return;
        default:
          break;
      }
    }
  }
  ::close(fd);
}

std::vector<PublishView> MiniBroker::published() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return published_;
}

size_t MiniBroker::publish_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return published_.size();
}

}  // namespace streammark::mqtt
