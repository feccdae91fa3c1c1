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

#include "scotch/experiment.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "scotch/oracle.hpp"

namespace scotch::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using protocol::MetricsRecord;

namespace {

int exit_code_for(const Error& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitConfig;
  if (dynamic_cast<const DataNotFound*>(&e) != nullptr) return kExitData;
  if (dynamic_cast<const Timeout*>(&e) != nullptr ||
      dynamic_cast<const ConnectionClosed*>(&e) != nullptr ||
      dynamic_cast<const TransportError*>(&e) != nullptr ||
      dynamic_cast<const IncompleteRound*>(&e) != nullptr) {
    return kExitTransport;
  }
  return kExitFailure;
}

data::Dataset concat(data::Dataset a, const data::Dataset& b) {
  const auto rows_a = a.images.rows();
  a.images.conservativeResize(rows_a + b.images.rows(), Eigen::NoChange);
  a.images.bottomRows(b.images.rows()) = b.images;
  a.labels.insert(a.labels.end(), b.labels.begin(), b.labels.end());
  return a;
}

struct FilePair {
  std::string images;
  std::string labels;
};

std::vector<FilePair> idx_candidates(const std::string& dataset) {
  if (dataset == "emnist") {
    return {{"emnist-digits-train-images-idx3-ubyte",
             "emnist-digits-train-labels-idx1-ubyte"},
            {"emnist-digits-test-images-idx3-ubyte",
             "emnist-digits-test-labels-idx1-ubyte"}};
  }
  // mnist and fmnist ship under the same canonical names.
  return {{"train-images-idx3-ubyte", "train-labels-idx1-ubyte"},
          {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}};
}

std::string find_idx_file(const std::string& dir, const std::string& dataset,
                          const std::string& stem) {
  for (const auto& base : {fs::path(dir), fs::path(dir) / dataset}) {
    for (const auto& name : {stem, stem + ".gz"}) {
      const auto candidate = base / name;
      if (fs::exists(candidate)) return candidate.string();
    }
  }
  return {};
}

std::string resolve_data_dir(const ExperimentConfig& cfg) {
  if (!cfg.data_dir.empty()) return cfg.data_dir;
  if (const char* env = std::getenv("SCOTCH_DATA_DIR"); env != nullptr) {
    return env;
  }
  throw DataNotFound("no data directory: pass --data-dir or set SCOTCH_DATA_DIR");
}

data::Dataset load_named_dataset(const ExperimentConfig& cfg) {
  const std::string dir = resolve_data_dir(cfg);
  const bool transpose = cfg.dataset == "emnist";
  data::Dataset pool;
  bool any = false;
  for (const auto& pair : idx_candidates(cfg.dataset)) {
    const std::string images = find_idx_file(dir, cfg.dataset, pair.images);
    const std::string labels = find_idx_file(dir, cfg.dataset, pair.labels);
    if (images.empty() || labels.empty()) continue;
    data::Dataset part = data::load_idx(images, labels, transpose);
    pool = any ? concat(std::move(pool), part) : std::move(part);
    any = true;
  }
  if (!any) {
    throw DataNotFound("no " + cfg.dataset + " IDX files under " + dir);
  }
  return pool;
}

json counters_json(const transport::WireCounters& c) {
  return json{{"messages_sent", c.messages_sent},
              {"messages_received", c.messages_received},
              {"bytes_sent", c.bytes_sent},
              {"bytes_received", c.bytes_received},
              {"payload_sent", c.payload_sent},
              {"payload_received", c.payload_received}};
}

transport::WireCounters counters_from_json(const json& j) {
  transport::WireCounters c;
  c.messages_sent = j.value("messages_sent", 0ull);
  c.messages_received = j.value("messages_received", 0ull);
  c.bytes_sent = j.value("bytes_sent", 0ull);
  c.bytes_received = j.value("bytes_received", 0ull);
  c.payload_sent = j.value("payload_sent", 0ull);
  c.payload_received = j.value("payload_received", 0ull);
  return c;
}

json round_json(const MetricsRecord& rec) {
  return json{{"type", "round"},
              {"round", rec.round},
              {"test_accuracy", rec.test_accuracy},
              {"messages", rec.messages},
              {"bytes", rec.bytes},
              {"payload_messages", rec.payload_messages},
              {"wall_ms", rec.wall_ms},
              {"train_ms", rec.train_ms},
              {"aggregate_ms", rec.aggregate_ms}};
}

MetricsRecord round_from_json(const json& j) {
  MetricsRecord rec;
  rec.round = j.value("round", 0);
  rec.test_accuracy = j.value("test_accuracy", -1.0);
  rec.messages = j.value("messages", 0ull);
  rec.bytes = j.value("bytes", 0ull);
  rec.payload_messages = j.value("payload_messages", 0ull);
  rec.wall_ms = j.value("wall_ms", 0.0);
  rec.train_ms = j.value("train_ms", 0.0);
  rec.aggregate_ms = j.value("aggregate_ms", 0.0);
  return rec;
}

json summary_json(const ExperimentConfig& cfg,
                  const std::vector<MetricsRecord>& rounds,
                  const transport::WireCounters& totals, double wall_ms) {
  const double final_accuracy =
      rounds.empty() ? -1.0 : rounds.back().test_accuracy;
  return json{{"type", "summary"},
              {"dataset", cfg.dataset},
              {"m", cfg.m},
              {"n", cfg.n},
              {"iter", cfg.iter},
              {"l", cfg.l},
              {"lf", cfg.lf},
              {"lr", cfg.lr},
              {"epochs", cfg.epochs},
              {"seed", cfg.seed},
              {"divisor_mode", cfg.divisor_mode},
              {"transport",
               cfg.transport == TransportKind::kLoopback ? "loopback" : "sockets"},
              {"max_samples", cfg.max_samples},
              {"rounds_completed", rounds.size()},
              {"final_accuracy", final_accuracy},
              {"messages", totals.messages_sent},
              {"bytes", totals.bytes_sent},
              {"payload_messages", totals.payload_sent},
              {"wall_ms", wall_ms}};
}

void write_metrics(const std::string& path,
                   const std::vector<MetricsRecord>& rounds,
                   const json& summary) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write metrics file " + path);
  for (const auto& rec : rounds) out << round_json(rec).dump() << "\n";
  out << summary.dump() << "\n";
  out.close();

  fs::path csv_path(path);
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path);
  csv << "dataset,m,n,iter,l,lf,seed,divisor_mode,transport,rounds_completed,"
         "final_accuracy,payload_messages,messages,bytes,wall_ms\n";
  csv << summary["dataset"].get<std::string>() << ','
      << summary["m"].get<int>() << ',' << summary["n"].get<int>() << ','
      << summary["iter"].get<int>() << ',' << summary["l"].get<int>() << ','
      << summary["lf"].get<int>() << ',' << summary["seed"].get<std::uint64_t>()
      << ',' << summary["divisor_mode"].get<std::string>() << ','
      << summary["transport"].get<std::string>() << ','
      << summary["rounds_completed"].get<std::size_t>() << ','
      << summary["final_accuracy"].get<double>() << ','
      << summary["payload_messages"].get<std::uint64_t>() << ','
      << summary["messages"].get<std::uint64_t>() << ','
      << summary["bytes"].get<std::uint64_t>() << ','
      << summary["wall_ms"].get<double>() << "\n";
}

std::string participant_file(const ExperimentConfig& cfg,
                             const std::string& role, int id,
                             const std::string& what) {
  return cfg.output + "." + role.substr(0, 1) + std::to_string(id) + "." + what;
}

}  // namespace

void load_config_file(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto from = s.find_first_not_of(" \t\r");
      if (from == std::string::npos) return std::string{};
      const auto to = s.find_last_not_of(" \t\r");
      return s.substr(from, to - from + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key=value");
    }
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    try {
      if (key == "dataset") cfg.dataset = value;
      else if (key == "data-dir") cfg.data_dir = value;
      else if (key == "m") cfg.m = std::stoi(value);
      else if (key == "n") cfg.n = std::stoi(value);
      else if (key == "iter") cfg.iter = std::stoi(value);
      else if (key == "l") cfg.l = std::stoi(value);
      else if (key == "lf") cfg.lf = std::stoi(value);
      else if (key == "lr") cfg.lr = std::stod(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "batch-size") cfg.batch_size = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "divisor-mode") cfg.divisor_mode = value;
      else if (key == "transport") {
        if (value == "loopback") cfg.transport = TransportKind::kLoopback;
        else if (value == "sockets") cfg.transport = TransportKind::kSockets;
        else throw ConfigError("unknown transport '" + value + "'");
      }
      else if (key == "listen-base-port") cfg.listen_base_port = std::stoi(value);
      else if (key == "timeout-ms") cfg.timeout_ms = std::stoi(value);
      else if (key == "output") cfg.output = value;
      else if (key == "max-samples") cfg.max_samples = std::stoull(value);
      else if (key == "hidden") cfg.hidden = std::stoi(value);
      else if (key == "synth-samples") cfg.synth_samples = std::stoull(value);
      else if (key == "synth-classes") cfg.synth_classes = std::stoi(value);
      else if (key == "trace-dir") cfg.trace_dir = value;
      else if (key == "no-headroom-check") {
        cfg.enforce_headroom = !(value == "true" || value == "1");
      }
      else {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": bad value for '" + key + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": value out of range for '" + key + "'");
    }
  }
}

protocol::RoundConfig to_round_config(const ExperimentConfig& cfg) {
  static const std::set<std::string> kDatasets = {"mnist", "emnist", "fmnist",
                                                  "synthetic"};
  if (!kDatasets.contains(cfg.dataset)) {
    throw ConfigError("unknown dataset '" + cfg.dataset + "'");
  }
  if (cfg.divisor_mode != "clients" && cfg.divisor_mode != "servers") {
    throw ConfigError("divisor-mode must be 'clients' or 'servers'");
  }
  if (cfg.timeout_ms <= 0) throw ConfigError("timeout must be positive");
  if (cfg.hidden < 1) throw ConfigError("hidden layer size must be >= 1");
  if (cfg.output.empty()) throw ConfigError("output path must not be empty");
  if (cfg.listen_base_port < 1 || cfg.listen_base_port > 65535 - cfg.n) {
    throw ConfigError("listen base port out of range");
  }

  protocol::RoundConfig rc;
  rc.m = cfg.m;
  rc.n = cfg.n;
  rc.iter = cfg.iter;
  rc.cfg = ring::FixedPointConfig(cfg.l, cfg.lf);
  rc.lr = cfg.lr;
  rc.epochs = cfg.epochs;
  rc.batch_size = cfg.batch_size;
  rc.divisor_mode = cfg.divisor_mode == "clients"
                        ? protocol::DivisorMode::kClients
                        : protocol::DivisorMode::kServers;
  rc.seed = cfg.seed;
  rc.arch.layer_sizes = {data::kImagePixels, cfg.hidden, data::kNumClasses};
  rc.timeout = std::chrono::milliseconds(cfg.timeout_ms);
  rc.enforce_headroom = cfg.enforce_headroom;
  rc.validate();
  return rc;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  data::Dataset pool;
  if (cfg.dataset == "synthetic") {
    pool = data::synthetic_dataset(cfg.seed, cfg.synth_samples,
                                   cfg.synth_classes);
  } else {
    pool = load_named_dataset(cfg);
  }

  if (cfg.max_samples > 0 && pool.size() > cfg.max_samples) {
    Chacha20Rng cap_rng(derive_seed(cfg.seed, protocol::seed_domain::kSampleCap),
                        0);
    pool = data::sample_without_replacement(pool, cfg.max_samples, cap_rng);
  }

  Chacha20Rng split_rng(derive_seed(cfg.seed, protocol::seed_domain::kSplit), 0);
  auto [train, test] = data::split_train_test(pool, 0.7, split_rng);

  PreparedData prepared;
  prepared.client_train = data::partition_clients(train, cfg.m);
  std::vector<std::size_t> all(test.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  prepared.test = data::make_batch(test, all);
  return prepared;
}

namespace {

int run_loopback(const ExperimentConfig& cfg, const protocol::RoundConfig& rc) {
  PreparedData prepared = prepare_data(cfg);
  transport::TraceSink sink;
  transport::TraceSink* trace = cfg.trace_dir.empty() ? nullptr : &sink;

  std::vector<MetricsRecord> rounds;
  try {
    protocol::ProtocolResult result =
        protocol::run_protocol(rc, std::move(prepared.client_train),
                               &prepared.test, nullptr, trace, &rounds);
    if (trace != nullptr) sink.write_dir(cfg.trace_dir);
    // Loopback is the reproducible mode: timing fields stay zero so two runs
    // with one seed produce byte-identical files.
    write_metrics(cfg.output, result.rounds,
                  summary_json(cfg, result.rounds, result.totals, 0.0));
    return kExitOk;
  } catch (const Error& e) {
    if (trace != nullptr) sink.write_dir(cfg.trace_dir);
    write_metrics(cfg.output, rounds,
                  summary_json(cfg, rounds, transport::WireCounters{}, 0.0));
    std::cerr << "scotch: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

// Client-1 observer in socket mode: collects per-round records with real
// wall-clock timings.
class SocketMetricsObserver final : public protocol::RoundObserver {
 public:
  SocketMetricsObserver(const nn::Batch* testset) : testset_(testset) {}

  void on_aggregate(int round, const nn::ModelParams& params) override {
    MetricsRecord rec;
    rec.round = round;
    if (testset_ != nullptr) {
      rec.test_accuracy = nn::evaluate(params, *testset_);
    }
    records_.push_back(rec);
  }

  void on_round_timing(int round, double wall_ms, double train_ms,
                       double aggregate_ms) override {
    for (auto& rec : records_) {
      if (rec.round == round) {
        rec.wall_ms = wall_ms;
        rec.train_ms = train_ms;
        rec.aggregate_ms = aggregate_ms;
      }
    }
  }

  const std::vector<MetricsRecord>& records() const { return records_; }

 private:
  const nn::Batch* testset_;
  std::vector<MetricsRecord> records_;
};

void write_participant_counters(
    const ExperimentConfig& cfg, const std::string& role, int id,
    const std::vector<std::unique_ptr<transport::Connection>>& conns) {
  transport::WireCounters totals;
  std::map<transport::u32, transport::WireCounters> per_round;
  for (const auto& conn : conns) {
    totals += conn->totals();
    for (const auto& [round, c] : conn->per_round()) per_round[round] += c;
  }
  json j{{"role", role}, {"id", id}, {"totals", counters_json(totals)}};
  json rounds = json::object();
  for (const auto& [round, c] : per_round) {
    rounds[std::to_string(round)] = counters_json(c);
  }
  j["per_round"] = rounds;
  std::ofstream out(participant_file(cfg, role, id, "counters.json"));
  out << j.dump() << "\n";
}

int run_sockets(const ExperimentConfig& cfg) {
  if (const auto parent = fs::path(cfg.output).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::cout.flush();
  std::cerr.flush();

  struct Child {
    pid_t pid;
    std::string role;
    int id;
  };
  std::vector<Child> children;
  auto spawn = [&](const std::string& role, int id) {
    const pid_t pid = fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      _exit(run_participant(cfg, role, id));
    }
    children.push_back(Child{pid, role, id});
  };
  for (int j = 1; j <= cfg.n; ++j) spawn("server", j);
  for (int i = 1; i <= cfg.m; ++i) spawn("client", i);

  const auto t0 = std::chrono::steady_clock::now();
  int worst = kExitOk;
  for (const auto& child : children) {
    int status = 0;
    waitpid(child.pid, &status, 0);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitFailure;
    if (code != kExitOk) {
      std::cerr << "scotch: " << child.role << " " << child.id
                << " exited with code " << code << "\n";
      // Transport failures outrank generic ones in the report.
      if (worst == kExitOk || code == kExitTransport) worst = code;
    }
  }
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                t0)
          .count();

  // Merge whatever the participants managed to write.
  std::vector<MetricsRecord> rounds;
  const std::string rounds_path = participant_file(cfg, "client", 1, "rounds.json");
  if (fs::exists(rounds_path)) {
    std::ifstream in(rounds_path);
    json arr = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (arr.is_array()) {
      for (const auto& item : arr) rounds.push_back(round_from_json(item));
    }
  }
  transport::WireCounters totals;
  std::map<transport::u32, transport::WireCounters> per_round;
  auto merge_counters = [&](const std::string& role, int id) {
    const std::string path = participant_file(cfg, role, id, "counters.json");
    if (!fs::exists(path)) return;
    std::ifstream in(path);
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (!j.is_object()) return;
    totals += counters_from_json(j["totals"]);
    for (const auto& [key, value] : j["per_round"].items()) {
      per_round[static_cast<transport::u32>(std::stoul(key))] +=
          counters_from_json(value);
    }
    fs::remove(path);
  };
  for (int j = 1; j <= cfg.n; ++j) merge_counters("server", j);
  for (int i = 1; i <= cfg.m; ++i) merge_counters("client", i);
  for (auto& rec : rounds) {
    const auto it = per_round.find(static_cast<transport::u32>(rec.round));
    if (it != per_round.end()) {
      rec.messages = it->second.messages_sent;
      rec.bytes = it->second.bytes_sent;
      rec.payload_messages = it->second.payload_sent;
    }
  }
  if (fs::exists(rounds_path)) fs::remove(rounds_path);

  write_metrics(cfg.output, rounds, summary_json(cfg, rounds, totals, wall_ms));
  return worst;
}

}  // namespace

int run_participant(const ExperimentConfig& cfg, const std::string& role,
                    int id) {
  try {
    const protocol::RoundConfig rc = to_round_config(cfg);
    transport::TraceSink sink;
    transport::TraceSink* trace = cfg.trace_dir.empty() ? nullptr : &sink;
    const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);

    if (role == "server") {
      if (id < 1 || id > cfg.n) throw ConfigError("server id out of range");
      transport::Listener listener(
          static_cast<std::uint16_t>(cfg.listen_base_port + id - 1));
      std::vector<std::unique_ptr<transport::Connection>> conns;
      for (int i = 0; i < cfg.m; ++i) {
        auto conn = listener.accept(timeout, "s" + std::to_string(id));
        if (trace != nullptr) conn->set_trace(trace);
        conns.push_back(std::move(conn));
      }
      protocol::run_server_actor(id, rc, conns);
      write_participant_counters(cfg, role, id, conns);
      if (trace != nullptr) sink.write_dir(cfg.trace_dir);
      return kExitOk;
    }

    if (role != "client") throw ConfigError("role must be client or server");
    if (id < 1 || id > cfg.m) throw ConfigError("client id out of range");

    // Every participant derives the identical data pipeline from the seed.
    PreparedData prepared = prepare_data(cfg);
    protocol::ClientState state(id, std::move(prepared.client_train[id - 1]),
                                rc);

    std::vector<std::unique_ptr<transport::Connection>> conns;
    for (int j = 1; j <= cfg.n; ++j) {
      auto conn = transport::connect_to(
          static_cast<std::uint16_t>(cfg.listen_base_port + j - 1), timeout,
          "c" + std::to_string(id), "s" + std::to_string(j));
      if (trace != nullptr) conn->set_trace(trace);
      conns.push_back(std::move(conn));
    }

    SocketMetricsObserver observer(id == 1 ? &prepared.test : nullptr);
    protocol::run_client_actor(state, rc, conns,
                               id == 1 ? &observer : nullptr);
    write_participant_counters(cfg, role, id, conns);
    if (trace != nullptr) sink.write_dir(cfg.trace_dir);
    if (id == 1) {
      json arr = json::array();
      for (const auto& rec : observer.records()) arr.push_back(round_json(rec));
      std::ofstream out(participant_file(cfg, role, 1, "rounds.json"));
      out << arr.dump() << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "scotch[" << role << " " << id << "]: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "scotch[" << role << " " << id << "]: " << e.what() << "\n";
    return kExitFailure;
  }
}

int run_experiment(const ExperimentConfig& cfg) {
  try {
    const protocol::RoundConfig rc = to_round_config(cfg);
    if (cfg.transport == TransportKind::kSockets) return run_sockets(cfg);
    return run_loopback(cfg, rc);
  } catch (const Error& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return kExitFailure;
  }
}

namespace {

struct RunSummary {
  std::string dataset;
  int m = 0;
  int n = 0;
  int lf = 0;
  double accuracy = -1.0;
};

std::vector<RunSummary> read_summaries(const std::vector<std::string>& files) {
  std::vector<RunSummary> out;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) throw IncompatibleRuns("cannot open metrics file " + file);
    std::string line;
    bool found = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (!j.is_object() || j.value("type", "") != "summary") continue;
      RunSummary s;
      s.dataset = j.value("dataset", "");
      s.m = j.value("m", 0);
      s.n = j.value("n", 0);
      s.lf = j.value("lf", 0);
      s.accuracy = j.value("final_accuracy", -1.0);
      out.push_back(s);
      found = true;
    }
    if (!found) throw IncompatibleRuns("no summary record in " + file);
  }
  return out;
}

}  // namespace

void emit_table(const std::vector<std::string>& metrics_files,
                const std::string& layout, std::ostream& out) {
  const auto runs = read_summaries(metrics_files);
  if (runs.empty()) throw IncompatibleRuns("no runs supplied");

  if (layout == "clients-x-dataset") {
    for (const auto& r : runs) {
      if (r.n != runs.front().n || r.lf != runs.front().lf) {
        throw IncompatibleRuns("runs differ in n or l_f");
      }
    }
    static const std::vector<std::string> kOrder = {"mnist", "emnist", "fmnist",
                                                    "synthetic"};
    std::vector<std::string> datasets;
    for (const auto& name : kOrder) {
      if (std::any_of(runs.begin(), runs.end(),
                      [&](const RunSummary& r) { return r.dataset == name; })) {
        datasets.push_back(name);
      }
    }
    std::set<int> clients;
    std::map<std::pair<int, std::string>, double> cells;
    for (const auto& r : runs) {
      if (!cells.emplace(std::make_pair(r.m, r.dataset), r.accuracy).second) {
        throw IncompatibleRuns("two runs for m=" + std::to_string(r.m) +
                               ", dataset=" + r.dataset);
      }
      clients.insert(r.m);
    }
    out << "clients";
    for (const auto& d : datasets) out << ',' << d;
    out << "\n";
    for (int m : clients) {
      out << m;
      for (const auto& d : datasets) {
        out << ',';
        const auto it = cells.find({m, d});
        if (it != cells.end()) out << it->second;
      }
      out << "\n";
    }
    return;
  }

  if (layout == "precision") {
    for (const auto& r : runs) {
      if (r.dataset != runs.front().dataset) {
        throw IncompatibleRuns(
            "precision table mixes datasets; use clients-x-dataset");
      }
    }
    std::set<int> precisions;
    std::set<int> clients;
    std::map<std::pair<int, int>, double> cells;  // (lf, m) -> accuracy
    for (const auto& r : runs) {
      if (!cells.emplace(std::make_pair(r.lf, r.m), r.accuracy).second) {
        throw IncompatibleRuns("two runs for lf=" + std::to_string(r.lf) +
                               ", m=" + std::to_string(r.m));
      }
      precisions.insert(r.lf);
      clients.insert(r.m);
    }
    out << "lf";
    for (int m : clients) out << ",clients_" << m;
    out << "\n";
    for (int lf : precisions) {
      out << lf;
      for (int m : clients) {
        out << ',';
        const auto it = cells.find({lf, m});
        if (it != cells.end()) out << it->second;
      }
      out << "\n";
    }
    return;
  }

  throw ConfigError("unknown table layout '" + layout +
                    "'; expected clients-x-dataset or precision");
}

}  // namespace scotch::cli
