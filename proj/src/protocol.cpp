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

#include "scotch/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>

namespace scotch::protocol {

using transport::Connection;
using transport::Message;
using transport::MsgKind;

void RoundConfig::validate() const {
  if (m < 1) throw ConfigError("client count m must be >= 1");
  if (n < 1) throw ConfigError("server count n must be >= 1");
  if (iter < 1) throw ConfigError("iteration count must be >= 1");
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  arch.validate();
}

ClientState::ClientState(int client_id, data::Dataset ds, const RoundConfig& rc)
    : id(client_id),
      dataset(std::move(ds)),
      round(1),
      sampler(dataset.size()),
      data_rng(derive_seed(rc.seed, seed_domain::kClientData),
               static_cast<std::uint64_t>(client_id)),
      share_rng(derive_seed(rc.seed, seed_domain::kShares),
                static_cast<std::uint64_t>(client_id)) {
  if (client_id < 1 || client_id > rc.m) {
    throw ConfigError("client id " + std::to_string(client_id) +
                      " outside [1, m]");
  }
  if (dataset.size() / static_cast<std::size_t>(rc.iter) == 0) {
    throw ConfigError("client " + std::to_string(client_id) + " holds " +
                      std::to_string(dataset.size()) +
                      " samples, fewer than iter=" + std::to_string(rc.iter));
  }
  // Clients agree on the architecture and initial weights before the run.
  Chacha20Rng init_rng(derive_seed(rc.seed, seed_domain::kInit), 0);
  current_weights = nn::init_params(rc.arch, init_rng);
}

nn::ModelParams local_training(ClientState& state, const RoundConfig& rc) {
  const std::size_t subset =
      state.dataset.size() / static_cast<std::size_t>(rc.iter);
  const auto idx = state.sampler.take(subset, state.data_rng);
  const nn::Batch batch = data::make_batch(state.dataset, idx);
  nn::ModelParams trained = nn::train(state.current_weights, batch, rc.lr,
                                      rc.epochs, rc.batch_size);

  // Federated_sum multiplies the encoded sum by encode(1/D), so the true
  // product carries 2*l_f fractional bits and the reduced reconstruction
  // ring has l - l_f bits. Silent wrap corrupts weights undetectably; fail
  // loudly instead.
  if (rc.enforce_headroom) {
    const int exponent = std::min(rc.cfg.integer_bits(),
                                  rc.cfg.total_bits - 1 - 2 * rc.cfg.frac_bits);
    const double bound = std::ldexp(1.0, exponent) *
                         static_cast<double>(rc.divisor()) /
                         static_cast<double>(rc.m);
    for (const auto& layer : trained.layers) {
      const double biggest = std::max(layer.weights.cwiseAbs().maxCoeff(),
                                      layer.biases.cwiseAbs().maxCoeff());
      if (biggest >= bound) {
        throw OverflowError(
            "trained weight magnitude " + std::to_string(biggest) +
            " exceeds the fixed-point headroom " + std::to_string(bound) +
            " for l=" + std::to_string(rc.cfg.total_bits) +
            ", l_f=" + std::to_string(rc.cfg.frac_bits));
      }
    }
  }
  state.current_weights = trained;
  return trained;
}

std::vector<sharing::ShareVector> client_round(ClientState& state,
                                               const RoundConfig& rc,
                                               RandomSource& share_rng) {
  if (state.round > rc.iter) {
    throw ConfigError("client round " + std::to_string(state.round) +
                      " past iter=" + std::to_string(rc.iter));
  }
  const nn::ModelParams trained = local_training(state, rc);
  const ring::RingVector encoded =
      ring::encode_vec(nn::flatten(trained), rc.cfg);
  return sharing::split_secret_shares(encoded, rc.n, share_rng, state.round);
}

void ServerState::begin_round(int k) {
  round = k;
  received.clear();
  sigma.reset();
}

void ServerState::receive_share(int owner, sharing::ShareVector share,
                                const RoundConfig& rc) {
  if (owner < 1 || owner > rc.m) {
    throw ConfigError("share owner " + std::to_string(owner) +
                      " outside [1, m]");
  }
  if (share.party_index != id) {
    throw MissingShare("share for party " + std::to_string(share.party_index) +
                       " routed to server " + std::to_string(id));
  }
  if (share.round != round) {
    throw IncompleteRound("share for round " + std::to_string(share.round) +
                          " received in round " + std::to_string(round));
  }
  if (received.contains(owner)) {
    throw DuplicateShare("second share from client " + std::to_string(owner) +
                         " in round " + std::to_string(round));
  }
  if (!received.empty()) {
    const auto& ref = received.begin()->second.payload;
    if (share.payload.size() != ref.size()) {
      throw LengthMismatch("share length varies across clients");
    }
    if (!(share.payload.cfg == ref.cfg)) {
      throw ConfigMismatch("share config varies across clients");
    }
  }
  received.emplace(owner, std::move(share));
}

ring::RingVector federated_sum(ServerState& state, const RoundConfig& rc) {
  if (static_cast<int>(state.received.size()) != rc.m) {
    throw IncompleteRound("server " + std::to_string(state.id) + " holds " +
                          std::to_string(state.received.size()) + " of " +
                          std::to_string(rc.m) + " shares");
  }
  ring::RingVector sum = state.received.begin()->second.payload;
  for (auto it = std::next(state.received.begin()); it != state.received.end();
       ++it) {
    sum = ring::add(sum, it->second.payload);
  }
  const u64 inv_divisor =
      ring::encode(1.0 / static_cast<double>(rc.divisor()), rc.cfg);
  state.sigma = ring::truncate(ring::scale(sum, inv_divisor));
  return *state.sigma;
}

ring::RingVector rerandomizer_share(const RoundConfig& rc, int round,
                                    int server_id, std::size_t len) {
  // Every server derives the same round-keyed zero-sharing from the shared
  // seed and keeps only its own component.
  Chacha20Rng rng(derive_seed(rc.seed, seed_domain::kRerandomize),
                  static_cast<std::uint64_t>(round));
  auto zeros = sharing::zero_sharing(rc.n, len, rc.cfg, rng);
  return std::move(zeros[static_cast<std::size_t>(server_id) - 1]);
}

nn::ModelParams compute_final_model(const std::vector<ring::RingVector>& sigmas,
                                    const RoundConfig& rc) {
  if (static_cast<int>(sigmas.size()) != rc.n) {
    throw LengthMismatch("expected " + std::to_string(rc.n) + " sigmas, got " +
                         std::to_string(sigmas.size()));
  }
  ring::RingVector agg = sigmas.front();
  if (!(agg.cfg == rc.cfg)) {
    throw ConfigMismatch("sigma config differs from the round config");
  }
  for (std::size_t j = 1; j < sigmas.size(); ++j) {
    agg = ring::add(agg, sigmas[j]);
  }
  agg = ring::wrap_correct(agg);
  return nn::unflatten(ring::decode_vec(agg), rc.arch);
}

namespace {

Message expect(Connection& conn, const RoundConfig& rc, MsgKind kind, int round,
               int sender) {
  Message msg = conn.recv(rc.timeout);
  if (msg.kind == MsgKind::kAbort) {
    throw TransportError("participant " + std::to_string(msg.sender_id) +
                         " aborted in round " + std::to_string(msg.round));
  }
  if (msg.kind != kind || msg.round != static_cast<transport::u32>(round) ||
      msg.sender_id != static_cast<transport::u32>(sender)) {
    throw TransportError("unexpected message: kind=" +
                         std::to_string(static_cast<int>(msg.kind)) +
                         " round=" + std::to_string(msg.round) + " sender=" +
                         std::to_string(msg.sender_id));
  }
  return msg;
}

void abort_all(std::vector<std::unique_ptr<Connection>>& conns, int round,
               int self_id) {
  for (auto& conn : conns) {
    try {
      conn->send(Message{MsgKind::kAbort, static_cast<transport::u32>(round),
                         static_cast<transport::u32>(self_id), std::nullopt});
    } catch (const Error&) {
      // Peer already gone; nothing more to do.
    }
  }
}

}  // namespace

void run_client_actor(ClientState& state, const RoundConfig& rc,
                      std::vector<std::unique_ptr<Connection>>& to_servers,
                      RoundObserver* observer) {
  if (static_cast<int>(to_servers.size()) != rc.n) {
    throw ConfigError("client needs one connection per server");
  }
  try {
    for (auto& conn : to_servers) {
      conn->send(Message{MsgKind::kRoundBegin, 0,
                         static_cast<transport::u32>(state.id), std::nullopt});
    }
    using Clock = std::chrono::steady_clock;
    const auto ms_since = [](Clock::time_point start) {
      return std::chrono::duration<double, std::milli>(Clock::now() - start)
          .count();
    };
    for (int k = 1; k <= rc.iter; ++k) {
      const auto round_start = Clock::now();
      auto shares = client_round(state, rc, state.share_rng);
      const double train_ms = ms_since(round_start);
      if (observer != nullptr) {
        observer->on_local_model(k, state.id, state.current_weights);
      }
      for (int j = 1; j <= rc.n; ++j) {
        to_servers[j - 1]->send(
            Message{MsgKind::kShareUpload, static_cast<transport::u32>(k),
                    static_cast<transport::u32>(state.id),
                    std::move(shares[j - 1].payload)});
      }
      std::vector<ring::RingVector> sigmas;
      sigmas.reserve(rc.n);
      for (int j = 1; j <= rc.n; ++j) {
        Message msg =
            expect(*to_servers[j - 1], rc, MsgKind::kSigmaBroadcast, k, j);
        sigmas.push_back(std::move(*msg.payload));
      }
      if (observer != nullptr && state.id == 1) {
        observer->on_sigmas(k, sigmas);
      }
      const auto agg_start = Clock::now();
      state.current_weights = compute_final_model(sigmas, rc);
      const double aggregate_ms = ms_since(agg_start);
      state.round = k + 1;
      if (observer != nullptr && state.id == 1) {
        observer->on_aggregate(k, state.current_weights);
        observer->on_round_timing(k, ms_since(round_start), train_ms,
                                  aggregate_ms);
      }
    }
    for (auto& conn : to_servers) {
      conn->send(Message{MsgKind::kRoundComplete,
                         static_cast<transport::u32>(rc.iter),
                         static_cast<transport::u32>(state.id), std::nullopt});
    }
  } catch (const Error&) {
    abort_all(to_servers, state.round, state.id);
    throw;
  }
}

void run_server_actor(int server_id, const RoundConfig& rc,
                      std::vector<std::unique_ptr<Connection>>& to_clients) {
  if (static_cast<int>(to_clients.size()) != rc.m) {
    throw ConfigError("server needs one connection per client");
  }
  ServerState state(server_id);
  try {
    // Identify the client behind each connection from its hello.
    std::vector<Connection*> by_client(static_cast<std::size_t>(rc.m), nullptr);
    for (auto& conn : to_clients) {
      Message hello = conn->recv(rc.timeout);
      if (hello.kind != MsgKind::kRoundBegin) {
        throw TransportError("expected hello, got kind=" +
                             std::to_string(static_cast<int>(hello.kind)));
      }
      const int client = static_cast<int>(hello.sender_id);
      if (client < 1 || client > rc.m) {
        throw TransportError("hello from unknown client " +
                             std::to_string(client));
      }
      if (by_client[client - 1] != nullptr) {
        throw TransportError("two connections claim client " +
                             std::to_string(client));
      }
      conn->set_peer_name("c" + std::to_string(client));
      by_client[client - 1] = conn.get();
    }

    for (int k = 1; k <= rc.iter; ++k) {
      state.begin_round(k);
      for (int i = 1; i <= rc.m; ++i) {
        Message msg =
            expect(*by_client[i - 1], rc, MsgKind::kShareUpload, k, i);
        state.receive_share(
            i, sharing::ShareVector{server_id, k, std::move(*msg.payload)}, rc);
      }
      ring::RingVector sigma = federated_sum(state, rc);
      const ring::RingVector blind =
          rerandomizer_share(rc, k, server_id, sigma.size());
      const ring::RingVector broadcast = ring::add(sigma, blind);
      for (int i = 1; i <= rc.m; ++i) {
        by_client[i - 1]->send(Message{
            MsgKind::kSigmaBroadcast, static_cast<transport::u32>(k),
            static_cast<transport::u32>(server_id), broadcast});
      }
    }
    for (int i = 1; i <= rc.m; ++i) {
      Message done = to_clients[i - 1]->recv(rc.timeout);
      if (done.kind != MsgKind::kRoundComplete) {
        throw TransportError("expected completion, got kind=" +
                             std::to_string(static_cast<int>(done.kind)));
      }
    }
  } catch (const Error&) {
    abort_all(to_clients, state.round, server_id);
    throw;
  }
}

namespace {

// Forwards observer callbacks under a lock and assembles per-round metrics
// as aggregates land.
class OrchestratorObserver final : public RoundObserver {
 public:
  OrchestratorObserver(const nn::Batch* testset, RoundObserver* user,
                       std::vector<MetricsRecord>* records)
      : testset_(testset), user_(user), records_(records) {}

  void on_local_model(int round, int client_id,
                      const nn::ModelParams& params) override {
    std::lock_guard lock(mu_);
    if (user_ != nullptr) user_->on_local_model(round, client_id, params);
  }

  void on_sigmas(int round, const std::vector<ring::RingVector>& sigmas) override {
    std::lock_guard lock(mu_);
    if (user_ != nullptr) user_->on_sigmas(round, sigmas);
  }

  void on_aggregate(int round, const nn::ModelParams& params) override {
    std::lock_guard lock(mu_);
    if (user_ != nullptr) user_->on_aggregate(round, params);
    if (records_ != nullptr) {
      MetricsRecord rec;
      rec.round = round;
      if (testset_ != nullptr) {
        rec.test_accuracy = nn::evaluate(params, *testset_);
      }
      records_->push_back(rec);
    }
  }

  void on_round_timing(int round, double wall_ms, double train_ms,
                       double aggregate_ms) override {
    // Timings are deliberately not merged into the records: loopback output
    // must be byte-identical across runs.
    std::lock_guard lock(mu_);
    if (user_ != nullptr) {
      user_->on_round_timing(round, wall_ms, train_ms, aggregate_ms);
    }
  }

 private:
  std::mutex mu_;
  const nn::Batch* testset_;
  RoundObserver* user_;
  std::vector<MetricsRecord>* records_;
};

}  // namespace

ProtocolResult run_protocol(const RoundConfig& rc,
                            std::vector<data::Dataset> client_datasets,
                            const nn::Batch* testset, RoundObserver* observer,
                            transport::TraceSink* trace,
                            std::vector<MetricsRecord>* out_rounds) {
  rc.validate();
  if (static_cast<int>(client_datasets.size()) != rc.m) {
    throw ConfigError("need one dataset per client");
  }

  transport::LoopbackHub hub;
  std::vector<std::vector<std::unique_ptr<Connection>>> client_conns(rc.m);
  std::vector<std::vector<std::unique_ptr<Connection>>> server_conns(rc.n);
  for (int j = 0; j < rc.n; ++j) server_conns[j].resize(rc.m);
  for (int i = 0; i < rc.m; ++i) {
    for (int j = 0; j < rc.n; ++j) {
      auto [client_end, server_end] =
          hub.make_pair("c" + std::to_string(i + 1), "s" + std::to_string(j + 1));
      if (trace != nullptr) {
        client_end->set_trace(trace);
        server_end->set_trace(trace);
      }
      client_conns[i].push_back(std::move(client_end));
      server_conns[j][i] = std::move(server_end);
    }
  }

  std::vector<ClientState> states;
  states.reserve(rc.m);
  for (int i = 0; i < rc.m; ++i) {
    states.emplace_back(i + 1, std::move(client_datasets[i]), rc);
  }

  std::vector<MetricsRecord> local_records;
  std::vector<MetricsRecord>* records =
      out_rounds != nullptr ? out_rounds : &local_records;
  OrchestratorObserver orchestrator(testset, observer, records);

  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> failures(
      static_cast<std::size_t>(rc.m + rc.n));
  for (int j = 0; j < rc.n; ++j) {
    threads.emplace_back([&, j] {
      try {
        run_server_actor(j + 1, rc, server_conns[j]);
      } catch (...) {
        failures[static_cast<std::size_t>(j)] = std::current_exception();
      }
    });
  }
  for (int i = 0; i < rc.m; ++i) {
    threads.emplace_back([&, i] {
      try {
        run_client_actor(states[i], rc, client_conns[i], &orchestrator);
      } catch (...) {
        failures[static_cast<std::size_t>(rc.n + i)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  // A root-cause failure (say, an overflow in one client) makes its peers
  // fail secondarily with abort/timeout errors; surface the root cause.
  std::exception_ptr secondary;
  for (const auto& failure : failures) {
    if (!failure) continue;
    try {
      std::rethrow_exception(failure);
    } catch (const TransportError&) {
      if (!secondary) secondary = failure;
    } catch (const Timeout&) {
      if (!secondary) secondary = failure;
    } catch (const ConnectionClosed&) {
      if (!secondary) secondary = failure;
    } catch (...) {
      std::rethrow_exception(failure);
    }
  }
  if (secondary) std::rethrow_exception(secondary);

  // Per-round wire totals, each message counted once at its sender; plus
  // per-participant views for the complexity assertions.
  std::map<transport::u32, transport::WireCounters> per_round;
  transport::WireCounters totals;
  std::vector<ParticipantCounters> participants;
  auto absorb = [&](std::string name,
                    const std::vector<std::unique_ptr<Connection>>& conns) {
    ParticipantCounters pc;
    pc.name = std::move(name);
    for (const auto& conn : conns) {
      if (conn == nullptr) continue;
      totals += conn->totals();
      pc.totals += conn->totals();
      for (const auto& [round, counters] : conn->per_round()) {
        per_round[round] += counters;
        pc.per_round[round] += counters;
      }
    }
    participants.push_back(std::move(pc));
  };
  for (int i = 0; i < rc.m; ++i) {
    absorb("c" + std::to_string(i + 1), client_conns[i]);
  }
  for (int j = 0; j < rc.n; ++j) {
    absorb("s" + std::to_string(j + 1), server_conns[j]);
  }

  const u64 expected_payload = 2ull * static_cast<u64>(rc.m) * rc.n;
  for (auto& rec : *records) {
    const auto it = per_round.find(static_cast<transport::u32>(rec.round));
    if (it != per_round.end()) {
      rec.messages = it->second.messages_sent;
      rec.bytes = it->second.bytes_sent;
      rec.payload_messages = it->second.payload_sent;
    }
    if (rec.payload_messages != expected_payload) {
      throw Error("round " + std::to_string(rec.round) + " moved " +
                  std::to_string(rec.payload_messages) +
                  " payload messages, expected " +
                  std::to_string(expected_payload));
    }
  }

  ProtocolResult result;
  result.final_model = states.front().current_weights;
  result.rounds = *records;
  result.totals = totals;
  result.participants = std::move(participants);
  return result;
}

}  // namespace scotch::protocol
