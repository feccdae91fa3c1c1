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

#include <vector>

#include "scotch/nn.hpp"
#include "scotch/protocol.hpp"
#include "scotch/ring.hpp"

namespace scotch::oracle {

// Plaintext federated average: elementwise mean in real arithmetic.
nn::ModelParams fedavg_float(const std::vector<nn::ModelParams>& models);

// Fixed-point federated average without sharing: encode each model, sum in
// the ring, apply the same scale-by-encode(1/divisor) + truncate as
// federated_sum, decode. divisor = 0 means the model count.
nn::ModelParams fedavg_quantized(const std::vector<nn::ModelParams>& models,
                                 const ring::FixedPointConfig& cfg,
                                 int divisor = 0);

struct CentralizedResult {
  nn::ModelParams final_model;
  std::vector<double> round_accuracy;
};

// Single-server federated loop with quantized aggregation: the same local
// training schedule as the protocol, aggregated through fedavg_quantized.
// Bit-identical to run_protocol with n = 1.
CentralizedResult centralized_run(const protocol::RoundConfig& rc,
                                  std::vector<data::Dataset> client_datasets,
                                  const nn::Batch* testset = nullptr);

}  // namespace scotch::oracle
