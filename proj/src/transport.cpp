/*
 * Copyright 2026 The Scotch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "scotch/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <thread>

namespace scotch::transport {

namespace {

constexpr u8 kMagic[4] = {'S', 'C', 'T', 'C'};
constexpr u8 kVersion = 1;
constexpr auto kSendTimeout = std::chrono::milliseconds(60000);

void put_u32(std::vector<u8>& out, u32 v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

void put_u64(std::vector<u8>& out, u64 v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<u8>(v >> (8 * i)));
}

u32 get_u32(std::span<const u8> b, std::size_t off) {
  u32 v = 0;
  for (int i = 0; i < 4; ++i) v |= u32{b[off + i]} << (8 * i);
  return v;
}

u64 get_u64(std::span<const u8> b, std::size_t off) {
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= u64{b[off + i]} << (8 * i);
  return v;
}

struct FrameHeader {
  MsgKind kind;
  u32 round;
  u32 sender;
  u8 l;
  u8 l_f;
  u64 payload_len;
};

FrameHeader parse_header(std::span<const u8> bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw TruncatedFrame("frame header cut short");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagic("frame does not start with SCTC");
  }
  if (bytes[4] != kVersion) {
    throw UnsupportedVersion("frame version " + std::to_string(bytes[4]));
  }
  const u8 kind_byte = bytes[5];
  if (kind_byte < 1 || kind_byte > 5) {
    throw UnsupportedVersion("unknown message kind " + std::to_string(kind_byte));
  }
  FrameHeader h;
  h.kind = static_cast<MsgKind>(kind_byte);
  h.round = get_u32(bytes, 6);
  h.sender = get_u32(bytes, 10);
  h.l = bytes[14];
  h.l_f = bytes[15];
  h.payload_len = get_u64(bytes, 16);
  if (h.payload_len > kMaxPayloadElems) {
    throw LengthOverrun("payload length " + std::to_string(h.payload_len));
  }
  if (!kind_has_payload(h.kind) && h.payload_len != 0) {
    throw LengthOverrun("control frame carries payload");
  }
  return h;
}

Message message_from(const FrameHeader& h, std::span<const u8> payload_bytes) {
  Message msg;
  msg.kind = h.kind;
  msg.round = h.round;
  msg.sender_id = h.sender;
  if (kind_has_payload(h.kind)) {
    ring::RingVector payload{ring::FixedPointConfig(h.l, h.l_f), {}};
    payload.elems.reserve(h.payload_len);
    for (u64 i = 0; i < h.payload_len; ++i) {
      payload.elems.push_back(get_u64(payload_bytes, i * 8));
    }
    msg.payload = std::move(payload);
  }
  return msg;
}

}  // namespace

bool kind_has_payload(MsgKind kind) {
  return kind == MsgKind::kShareUpload || kind == MsgKind::kSigmaBroadcast;
}

std::vector<u8> encode_frame(const Message& msg) {
  if (kind_has_payload(msg.kind) != msg.payload.has_value()) {
    throw TransportError("message payload does not match its kind");
  }
  std::vector<u8> out;
  const u64 len = msg.payload ? msg.payload->size() : 0;
  out.reserve(kHeaderBytes + len * 8);
  for (u8 b : kMagic) out.push_back(b);
  out.push_back(kVersion);
  out.push_back(static_cast<u8>(msg.kind));
  put_u32(out, msg.round);
  put_u32(out, msg.sender_id);
  if (msg.payload) {
    out.push_back(static_cast<u8>(msg.payload->cfg.total_bits));
    out.push_back(static_cast<u8>(msg.payload->cfg.frac_bits));
  } else {
    out.push_back(0);
    out.push_back(0);
  }
  put_u64(out, len);
  if (msg.payload) {
    for (u64 e : msg.payload->elems) put_u64(out, e);
  }
  return out;
}

Message decode_frame(std::span<const u8> bytes) {
  const FrameHeader h = parse_header(bytes);
  const std::size_t need = kHeaderBytes + h.payload_len * 8;
  if (bytes.size() < need) {
    throw TruncatedFrame("frame payload cut short");
  }
  if (bytes.size() > need) {
    throw LengthOverrun("trailing bytes after frame");
  }
  return message_from(h, bytes.subspan(kHeaderBytes));
}

void FrameReader::feed(std::span<const u8> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Message> FrameReader::next() {
  if (buffer_.size() < kHeaderBytes) return std::nullopt;
  const FrameHeader h = parse_header(buffer_);
  const std::size_t need = kHeaderBytes + h.payload_len * 8;
  if (buffer_.size() < need) return std::nullopt;
  Message msg = message_from(
      h, std::span<const u8>(buffer_).subspan(kHeaderBytes, h.payload_len * 8));
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(need));
  return msg;
}

WireCounters& WireCounters::operator+=(const WireCounters& other) {
  messages_sent += other.messages_sent;
  messages_received += other.messages_received;
  bytes_sent += other.bytes_sent;
  bytes_received += other.bytes_received;
  payload_sent += other.payload_sent;
  payload_received += other.payload_received;
  return *this;
}

void TraceSink::append(const std::string& channel, std::span<const u8> bytes) {
  std::lock_guard lock(mu_);
  auto& stream = channels_[channel];
  stream.insert(stream.end(), bytes.begin(), bytes.end());
}

std::map<std::string, std::vector<u8>> TraceSink::snapshot() const {
  std::lock_guard lock(mu_);
  return channels_;
}

void TraceSink::write_dir(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [channel, bytes] : snapshot()) {
    std::ofstream out(dir + "/" + channel + ".bin", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }
}

void Connection::send(const Message& msg) {
  const auto bytes = encode_frame(msg);
  send_bytes(bytes);
  if (trace_ != nullptr) {
    trace_->append(local_name_ + "_to_" + peer_name_, bytes);
  }
  record(msg, bytes.size(), /*sent=*/true);
}

Message Connection::recv(std::chrono::milliseconds timeout) {
  const auto bytes = recv_frame(timeout);
  Message msg = decode_frame(bytes);
  record(msg, bytes.size(), /*sent=*/false);
  return msg;
}

WireCounters Connection::totals() const {
  std::lock_guard lock(counter_mu_);
  return totals_;
}

std::map<u32, WireCounters> Connection::per_round() const {
  std::lock_guard lock(counter_mu_);
  return per_round_;
}

void Connection::record(const Message& msg, std::size_t bytes, bool sent) {
  std::lock_guard lock(counter_mu_);
  auto& round = per_round_[msg.round];
  if (sent) {
    ++totals_.messages_sent;
    ++round.messages_sent;
    totals_.bytes_sent += bytes;
    round.bytes_sent += bytes;
    if (kind_has_payload(msg.kind)) {
      ++totals_.payload_sent;
      ++round.payload_sent;
    }
  } else {
    ++totals_.messages_received;
    ++round.messages_received;
    totals_.bytes_received += bytes;
    round.bytes_received += bytes;
    if (kind_has_payload(msg.kind)) {
      ++totals_.payload_received;
      ++round.payload_received;
    }
  }
}

namespace {

struct LoopbackQueue {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::vector<u8>> frames;
  bool closed = false;
};

class LoopbackConnection final : public Connection {
 public:
  LoopbackConnection(std::string local, std::string peer,
                     std::shared_ptr<LoopbackQueue> in,
                     std::shared_ptr<LoopbackQueue> out)
      : Connection(std::move(local), std::move(peer)),
        in_(std::move(in)),
        out_(std::move(out)) {}

  ~LoopbackConnection() override {
    std::lock_guard lock(out_->mu);
    out_->closed = true;
    out_->cv.notify_all();
  }

 protected:
  void send_bytes(std::span<const u8> bytes) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) throw ConnectionClosed("loopback peer is gone");
    out_->frames.emplace_back(bytes.begin(), bytes.end());
    out_->cv.notify_all();
  }

  std::vector<u8> recv_frame(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_->mu);
    if (!in_->cv.wait_for(lock, timeout, [&] {
          return !in_->frames.empty() || in_->closed;
        })) {
      throw Timeout("recv timed out after " + std::to_string(timeout.count()) +
                    " ms");
    }
    if (in_->frames.empty()) {
      throw ConnectionClosed("loopback peer closed the channel");
    }
    auto frame = std::move(in_->frames.front());
    in_->frames.pop_front();
    return frame;
  }

 private:
  std::shared_ptr<LoopbackQueue> in_;
  std::shared_ptr<LoopbackQueue> out_;
};

}  // namespace

std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>>
LoopbackHub::make_pair(const std::string& a_name, const std::string& b_name) {
  auto a_to_b = std::make_shared<LoopbackQueue>();
  auto b_to_a = std::make_shared<LoopbackQueue>();
  return {std::make_unique<LoopbackConnection>(a_name, b_name, b_to_a, a_to_b),
          std::make_unique<LoopbackConnection>(b_name, a_name, a_to_b, b_to_a)};
}

namespace {

using Clock = std::chrono::steady_clock;

void wait_readable(int fd, Clock::time_point deadline, const char* what) {
  pollfd pfd{fd, POLLIN, 0};
  const auto now = Clock::now();
  if (now >= deadline) throw Timeout(std::string(what) + ": deadline passed");
  const auto remaining =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
  const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()) + 1);
  if (rc == 0) throw Timeout(std::string(what) + ": timed out");
  if (rc < 0) throw TransportError(std::string(what) + ": poll failed");
}

class SocketConnection final : public Connection {
 public:
  SocketConnection(int fd, std::string local, std::string peer)
      : Connection(std::move(local), std::move(peer)), fd_(fd) {
    const int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  ~SocketConnection() override {
    if (fd_ >= 0) ::close(fd_);
  }

 protected:
  void send_bytes(std::span<const u8> bytes) override {
    const auto deadline = Clock::now() + kSendTimeout;
    std::size_t off = 0;
    while (off < bytes.size()) {
      pollfd pfd{fd_, POLLOUT, 0};
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (remaining.count() <= 0) throw Timeout("send timed out");
      const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
      if (rc == 0) throw Timeout("send timed out");
      if (rc < 0) throw TransportError("send poll failed");
      const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw ConnectionClosed(std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::vector<u8> recv_frame(std::chrono::milliseconds timeout) override {
    const auto deadline = Clock::now() + timeout;
    std::vector<u8> frame(kHeaderBytes);
    read_exact(frame.data(), kHeaderBytes, deadline);
    const FrameHeader h = parse_header(frame);
    const std::size_t payload = h.payload_len * 8;
    frame.resize(kHeaderBytes + payload);
    read_exact(frame.data() + kHeaderBytes, payload, deadline);
    return frame;
  }

 private:
  void read_exact(u8* dst, std::size_t count, Clock::time_point deadline) {
    std::size_t off = 0;
    while (off < count) {
      wait_readable(fd_, deadline, "recv");
      const ssize_t n = ::recv(fd_, dst + off, count - off, 0);
      if (n == 0) throw ConnectionClosed("peer closed the connection");
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError(std::string("recv failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  int fd_;
};

sockaddr_in localhost_addr(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

}  // namespace

Listener::Listener(std::uint16_t port) : fd_(-1) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw TransportError("cannot create listen socket");
  const int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  const auto addr = localhost_addr(port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) < 0) {
    ::close(fd_);
    throw TransportError("cannot bind port " + std::to_string(port) + ": " +
                         std::strerror(errno));
  }
  if (::listen(fd_, 64) < 0) {
    ::close(fd_);
    throw TransportError("cannot listen on port " + std::to_string(port));
  }
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Connection> Listener::accept(std::chrono::milliseconds timeout,
                                             const std::string& local_name) {
  wait_readable(fd_, Clock::now() + timeout, "accept");
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw TransportError("accept failed");
  return std::make_unique<SocketConnection>(fd, local_name, "unknown");
}

std::unique_ptr<Connection> connect_to(std::uint16_t port,
                                       std::chrono::milliseconds timeout,
                                       const std::string& local_name,
                                       const std::string& peer_name) {
  const auto deadline = Clock::now() + timeout;
  const auto addr = localhost_addr(port);
  while (true) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("cannot create socket");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) ==
        0) {
      return std::make_unique<SocketConnection>(fd, local_name, peer_name);
    }
    ::close(fd);
    if (Clock::now() >= deadline) {
      throw Timeout("connect to port " + std::to_string(port) + " timed out");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

}  // namespace scotch::transport
