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

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scotch/experiment.hpp"

namespace {

void add_experiment_flags(CLI::App& app, scotch::cli::ExperimentConfig& cfg,
                          std::string& transport) {
  app.add_option("--dataset", cfg.dataset,
                 "mnist | emnist | fmnist | synthetic")
      ->capture_default_str();
  app.add_option("--data-dir", cfg.data_dir,
                 "directory holding the IDX files (default: $SCOTCH_DATA_DIR)");
  app.add_option("--m", cfg.m, "number of clients")->capture_default_str();
  app.add_option("--n", cfg.n, "number of aggregation servers")
      ->capture_default_str();
  app.add_option("--iter", cfg.iter, "global aggregation rounds")
      ->capture_default_str();
  app.add_option("--l", cfg.l, "ring width in bits")->capture_default_str();
  app.add_option("--lf", cfg.lf, "fractional (precision) bits")
      ->capture_default_str();
  app.add_option("--lr", cfg.lr, "SGD learning rate")->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "local epochs per round")
      ->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "SGD mini-batch size")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "experiment seed")->capture_default_str();
  app.add_option("--divisor-mode", cfg.divisor_mode,
                 "divide aggregate by 'clients' or 'servers'")
      ->capture_default_str();
  app.add_option("--transport", transport, "loopback | sockets")
      ->capture_default_str();
  app.add_option("--listen-base-port", cfg.listen_base_port,
                 "first server port (server j uses base+j-1)")
      ->capture_default_str();
  app.add_option("--timeout-ms", cfg.timeout_ms, "receive timeout")
      ->capture_default_str();
  app.add_option("--output", cfg.output, "metrics JSONL path")
      ->capture_default_str();
  app.add_option("--max-samples", cfg.max_samples,
                 "desk-scale cap on the data pool (0 = full)")
      ->capture_default_str();
  app.add_option("--hidden", cfg.hidden, "hidden layer width")
      ->capture_default_str();
  app.add_option("--synth-samples", cfg.synth_samples,
                 "synthetic dataset size")
      ->capture_default_str();
  app.add_option("--synth-classes", cfg.synth_classes,
                 "synthetic class count")
      ->capture_default_str();
  app.add_option("--trace-dir", cfg.trace_dir,
                 "record per-channel wire traces into this directory");
  app.add_flag("!--no-headroom-check", cfg.enforce_headroom,
               "allow scaled aggregates to wrap the ring silently");
  // The file was already applied in main(); registering the flag here keeps
  // it documented and accepted by the parser.
  app.add_option("--config", "key=value config file (flags override it)");
}

int parse_transport(const std::string& transport,
                    scotch::cli::ExperimentConfig& cfg) {
  if (transport == "loopback") {
    cfg.transport = scotch::cli::TransportKind::kLoopback;
  } else if (transport == "sockets") {
    cfg.transport = scotch::cli::TransportKind::kSockets;
  } else {
    std::cerr << "scotch: unknown transport '" << transport << "'\n";
    return scotch::cli::kExitConfig;
  }
  return scotch::cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized m-client / n-server secure federated averaging"};
  app.require_subcommand(1);

  scotch::cli::ExperimentConfig cfg;
  std::string transport = "loopback";

  // Apply --config before registering flags so explicit flags override the
  // file's values.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        scotch::cli::load_config_file(argv[i + 1], cfg);
      } else if (arg.rfind("--config=", 0) == 0) {
        scotch::cli::load_config_file(arg.substr(9), cfg);
      }
    }
    if (cfg.transport == scotch::cli::TransportKind::kSockets) {
      transport = "sockets";
    }
  } catch (const scotch::ConfigError& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return scotch::cli::kExitConfig;
  }

  auto* run = app.add_subcommand("run", "run a full experiment");
  add_experiment_flags(*run, cfg, transport);

  auto* client = app.add_subcommand("client", "run one client participant");
  int client_id = 1;
  client->add_option("--id", client_id, "client index in [1, m]")->required();
  add_experiment_flags(*client, cfg, transport);

  auto* server = app.add_subcommand("server", "run one server participant");
  int server_id = 1;
  server->add_option("--id", server_id, "server index in [1, n]")->required();
  add_experiment_flags(*server, cfg, transport);

  auto* table = app.add_subcommand("emit-table",
                                   "collate metrics files into a table CSV");
  std::vector<std::string> metrics_files;
  std::string layout = "clients-x-dataset";
  std::string table_out;
  table->add_option("files", metrics_files, "metrics JSONL files")->required();
  table->add_option("--layout", layout, "clients-x-dataset | precision")
      ->capture_default_str();
  table->add_option("--output", table_out, "CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (table->parsed()) {
      if (table_out.empty()) {
        scotch::cli::emit_table(metrics_files, layout, std::cout);
      } else {
        std::ofstream out(table_out);
        if (!out) {
          std::cerr << "scotch: cannot write " << table_out << "\n";
          return scotch::cli::kExitConfig;
        }
        scotch::cli::emit_table(metrics_files, layout, out);
      }
      return scotch::cli::kExitOk;
    }

    if (const int rc = parse_transport(transport, cfg); rc != 0) return rc;
    if (run->parsed()) return scotch::cli::run_experiment(cfg);
    if (client->parsed()) return scotch::cli::run_participant(cfg, "client", client_id);
    if (server->parsed()) return scotch::cli::run_participant(cfg, "server", server_id);
  } catch (const scotch::ConfigError& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return scotch::cli::kExitConfig;
  } catch (const scotch::IncompatibleRuns& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return scotch::cli::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "scotch: " << e.what() << "\n";
    return scotch::cli::kExitFailure;
  }
  return scotch::cli::kExitOk;
}
