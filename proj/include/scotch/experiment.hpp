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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "scotch/data.hpp"
#include "scotch/nn.hpp"
#include "scotch/protocol.hpp"

namespace scotch::cli {

enum class TransportKind { kLoopback, kSockets };

struct ExperimentConfig {
  std::string dataset = "synthetic";  // mnist | emnist | fmnist | synthetic
  std::string data_dir;               // falls back to $SCOTCH_DATA_DIR
  int m = 3;
  int n = 3;
  int iter = 4;
  int l = 64;
  int lf = 32;
  double lr = 0.01;
  int epochs = 3;
  int batch_size = 32;
  std::uint64_t seed = 1;
  std::string divisor_mode = "clients";  // clients | servers
  TransportKind transport = TransportKind::kLoopback;
  int listen_base_port = 7701;
  int timeout_ms = 30000;
  std::string output = "scotch-metrics.jsonl";
  std::size_t max_samples = 12000;  // desk-scale cap; 0 = full data
  int hidden = 128;
  std::size_t synth_samples = 2000;
  int synth_classes = 10;
  std::string trace_dir;  // empty = no wire trace
  bool enforce_headroom = true;
};

// Distinct nonzero exit codes per error family.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTransport = 4;

protocol::RoundConfig to_round_config(const ExperimentConfig& cfg);

// Applies `key=value` lines (keys named after the long CLI flags, '#'
// comments allowed) onto the config. Values given as flags override the file
// because the file is applied before flag parsing.
void load_config_file(const std::string& path, ExperimentConfig& cfg);

struct PreparedData {
  std::vector<data::Dataset> client_train;  // m disjoint partitions
  nn::Batch test;
};

// Loads (or synthesizes), caps to max_samples, 70-30 splits, and partitions
// per client. Deterministic in the seed. Throws DataNotFound when the IDX
// files are missing.
PreparedData prepare_data(const ExperimentConfig& cfg);

// Runs the experiment end to end, writes the JSONL metrics file plus a CSV
// summary next to it, and returns an exit code. Never throws.
int run_experiment(const ExperimentConfig& cfg);

// One participant process body for socket transport ("client" or "server").
// Returns an exit code; used by both the orchestrator's forked children and
// the client/server CLI subcommands.
int run_participant(const ExperimentConfig& cfg, const std::string& role,
                    int id);

// Collates summary records from several metrics files into a report-ready
// CSV table. Layouts: "clients-x-dataset" (rows = client counts, one column per
// dataset) and "precision" (rows = l_f values, one column per client count,
// single dataset required).
void emit_table(const std::vector<std::string>& metrics_files,
                const std::string& layout, std::ostream& out);

}  // namespace scotch::cli
