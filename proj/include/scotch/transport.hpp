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

#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scotch/ring.hpp"

namespace scotch::transport {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;

enum class MsgKind : u8 {
  kShareUpload = 1,
  kSigmaBroadcast = 2,
  kRoundBegin = 3,
  kRoundComplete = 4,
  kAbort = 5,
};

bool kind_has_payload(MsgKind kind);

// Wire envelope. Payload is present iff the kind is SHARE_UPLOAD or
// SIGMA_BROADCAST.
struct Message {
  MsgKind kind;
  u32 round = 0;
  u32 sender_id = 0;
  std::optional<ring::RingVector> payload;
};

// Frame layout, little-endian except the "SCTC" magic:
//   magic[4] | version u8 | kind u8 | round u32 | sender u32 |
//   l u8 | l_f u8 | payload_len u64 | payload elements as u64 each
inline constexpr std::size_t kHeaderBytes = 24;
inline constexpr u64 kMaxPayloadElems = u64{1} << 32;

std::vector<u8> encode_frame(const Message& msg);
Message decode_frame(std::span<const u8> bytes);

// Incremental decoder: feed arbitrary byte chunks, pop complete frames.
// Any prefix of a valid stream yields complete frames plus a pending tail.
class FrameReader {
 public:
  void feed(std::span<const u8> bytes);
  std::optional<Message> next();
  std::size_t pending_bytes() const { return buffer_.size(); }

 private:
  std::vector<u8> buffer_;
};

struct WireCounters {
  u64 messages_sent = 0;
  u64 messages_received = 0;
  u64 bytes_sent = 0;
  u64 bytes_received = 0;
  u64 payload_sent = 0;
  u64 payload_received = 0;

  WireCounters& operator+=(const WireCounters& other);
};

// Captures the exact bytes sent per directed channel, for transport
// equivalence checks. Thread-safe.
class TraceSink {
 public:
  void append(const std::string& channel, std::span<const u8> bytes);
  std::map<std::string, std::vector<u8>> snapshot() const;
  void write_dir(const std::string& dir) const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<u8>> channels_;
};

// Reliable ordered bidirectional message channel. One sender-side context and
// one receiver-side context per endpoint; counters are internally locked.
class Connection {
 public:
  virtual ~Connection() = default;

  void send(const Message& msg);
  Message recv(std::chrono::milliseconds timeout);

  const std::string& local_name() const { return local_name_; }
  const std::string& peer_name() const { return peer_name_; }
  // The socket acceptor learns who is on the other end only from the hello
  // message; callers rename the peer once identified.
  void set_peer_name(std::string peer) { peer_name_ = std::move(peer); }

  WireCounters totals() const;
  std::map<u32, WireCounters> per_round() const;

  void set_trace(TraceSink* sink) { trace_ = sink; }

 protected:
  Connection(std::string local_name, std::string peer_name)
      : local_name_(std::move(local_name)), peer_name_(std::move(peer_name)) {}

  virtual void send_bytes(std::span<const u8> bytes) = 0;
  // Blocks until a full frame is available or the deadline passes.
  virtual std::vector<u8> recv_frame(std::chrono::milliseconds timeout) = 0;

 private:
  void record(const Message& msg, std::size_t bytes, bool sent);

  std::string local_name_;
  std::string peer_name_;
  TraceSink* trace_ = nullptr;
  mutable std::mutex counter_mu_;
  WireCounters totals_;
  std::map<u32, WireCounters> per_round_;
};

// In-process transport: a pair of endpoints exchanging encoded frames through
// two queues, with semantics (blocking recv, timeout, counters) identical to
// the socket transport.
class LoopbackHub {
 public:
  std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>> make_pair(
      const std::string& a_name, const std::string& b_name);
};

// TCP transport over localhost.
class Listener {
 public:
  explicit Listener(std::uint16_t port);  // binds and listens
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  // Accepts one connection; names are resolved by the caller after the hello.
  std::unique_ptr<Connection> accept(std::chrono::milliseconds timeout,
                                     const std::string& local_name);

 private:
  int fd_;
};

// Connects to localhost:port, retrying until the deadline (the peer may not
// have bound yet).
std::unique_ptr<Connection> connect_to(std::uint16_t port,
                                       std::chrono::milliseconds timeout,
                                       const std::string& local_name,
                                       const std::string& peer_name);

}  // namespace scotch::transport
