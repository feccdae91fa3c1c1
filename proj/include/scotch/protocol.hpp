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
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "scotch/data.hpp"
#include "scotch/nn.hpp"
#include "scotch/ring.hpp"
#include "scotch/sharing.hpp"
#include "scotch/transport.hpp"

namespace scotch::protocol {

using ring::u64;

// Whether federated_sum divides by the client count (correct federated
// average) or by the server count (the literal wording of the aggregation
// step). The two coincide when m == n.
enum class DivisorMode { kClients, kServers };

struct RoundConfig {
  int m = 1;
  int n = 1;
  int iter = 1;
  ring::FixedPointConfig cfg{64, 32};
  double lr = 0.01;
  int epochs = 3;
  int batch_size = 32;
  DivisorMode divisor_mode = DivisorMode::kClients;
  std::uint64_t seed = 1;
  nn::NNArch arch;
  std::chrono::milliseconds timeout{30000};
  // Reject trained weights whose scaled aggregate could wrap the ring.
  // Turning this off reproduces the silent-overflow behavior of narrow-ring
  // configurations.
  bool enforce_headroom = true;

  int divisor() const {
    return divisor_mode == DivisorMode::kClients ? m : n;
  }
  void validate() const;  // throws ConfigError
};

// Domain tags for deriving independent rng streams from the experiment seed.
namespace seed_domain {
inline constexpr std::uint64_t kInit = 1;       // shared initial weights
inline constexpr std::uint64_t kClientData = 2; // per-client subset sampling
inline constexpr std::uint64_t kShares = 3;     // per-client share randomness
inline constexpr std::uint64_t kRerandomize = 4;// public per-round zero-sharing
inline constexpr std::uint64_t kSynthetic = 5;
inline constexpr std::uint64_t kSplit = 6;
inline constexpr std::uint64_t kSampleCap = 7;
}  // namespace seed_domain

struct ClientState {
  int id;  // in [1, m]
  data::Dataset dataset;
  nn::ModelParams current_weights;
  int round = 1;
  data::SubsetSampler sampler;
  Chacha20Rng data_rng;
  Chacha20Rng share_rng;

  ClientState(int client_id, data::Dataset ds, const RoundConfig& rc);
};

// One local training step per Algorithm round: random subset of size
// len(D)/iter from the sampler, SGD from the current weights. Stores and
// returns the trained model; enforces the fixed-point headroom bound.
nn::ModelParams local_training(ClientState& state, const RoundConfig& rc);

// Full client step: train, encode, split into one share per server.
std::vector<sharing::ShareVector> client_round(ClientState& state,
                                               const RoundConfig& rc,
                                               RandomSource& share_rng);

struct ServerState {
  int id;  // in [1, n]
  int round = 1;
  std::map<int, sharing::ShareVector> received;  // owner -> share
  std::optional<ring::RingVector> sigma;

  explicit ServerState(int server_id) : id(server_id) {}

  void begin_round(int k);
  void receive_share(int owner, sharing::ShareVector share,
                     const RoundConfig& rc);
};

// sigma_j = truncate(scale(sum of the m received shares, encode(1/D))).
ring::RingVector federated_sum(ServerState& state, const RoundConfig& rc);

// The public-seed zero-sharing component server j adds to sigma_j before
// broadcast; the n components sum to zero, so reconstruction is unchanged.
ring::RingVector rerandomizer_share(const RoundConfig& rc, int round,
                                    int server_id, std::size_t len);

// Sums the n sigmas mod 2^l, folds out the share-wrap residue left by the
// servers' share-local truncation (reduction into Z_{2^{l-l_f}}), decodes,
// and unflattens into the next round's weights.
nn::ModelParams compute_final_model(const std::vector<ring::RingVector>& sigmas,
                                    const RoundConfig& rc);

// Observation hook for tests and metrics. Callbacks may arrive from
// different participant threads; the orchestrator serializes them.
struct RoundObserver {
  virtual ~RoundObserver() = default;
  virtual void on_local_model(int /*round*/, int /*client_id*/,
                              const nn::ModelParams&) {}
  virtual void on_sigmas(int /*round*/, const std::vector<ring::RingVector>&) {}
  virtual void on_aggregate(int /*round*/, const nn::ModelParams&) {}
  // Measured by client 1; the loopback runner discards these to keep its
  // metrics reproducible.
  virtual void on_round_timing(int /*round*/, double /*wall_ms*/,
                               double /*train_ms*/, double /*aggregate_ms*/) {}
};

// Participant loops over an already-connected set of channels. Used by both
// the in-process runner and the socket-mode participant processes.
void run_client_actor(ClientState& state, const RoundConfig& rc,
                      std::vector<std::unique_ptr<transport::Connection>>& to_servers,
                      RoundObserver* observer = nullptr);
void run_server_actor(int server_id, const RoundConfig& rc,
                      std::vector<std::unique_ptr<transport::Connection>>& to_clients);

struct MetricsRecord {
  int round = 0;
  double test_accuracy = -1.0;  // -1 when no test set was supplied
  u64 messages = 0;
  u64 bytes = 0;
  u64 payload_messages = 0;
  double wall_ms = 0.0;
  double train_ms = 0.0;
  double aggregate_ms = 0.0;
};

struct ParticipantCounters {
  std::string name;  // "c1".."cm", "s1".."sn"
  transport::WireCounters totals;
  std::map<transport::u32, transport::WireCounters> per_round;
};

struct ProtocolResult {
  nn::ModelParams final_model;
  std::vector<MetricsRecord> rounds;
  transport::WireCounters totals;
  std::vector<ParticipantCounters> participants;
};

// Runs all iter rounds over the in-process loopback transport: m client
// threads, n server threads, barrier-synchronous rounds. Deterministic in
// the seed. Partial round records survive in *out_rounds when a round
// aborts.
ProtocolResult run_protocol(const RoundConfig& rc,
                            std::vector<data::Dataset> client_datasets,
                            const nn::Batch* testset = nullptr,
                            RoundObserver* observer = nullptr,
                            transport::TraceSink* trace = nullptr,
                            std::vector<MetricsRecord>* out_rounds = nullptr);

}  // namespace scotch::protocol
