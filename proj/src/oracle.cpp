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

#include "scotch/oracle.hpp"

#include <string>

namespace scotch::oracle {

namespace {

void check_same_shapes(const std::vector<nn::ModelParams>& models) {
  if (models.empty()) throw ShapeMismatch("no models to average");
  const auto ref = nn::arch_of(models.front());
  for (const auto& model : models) {
    if (nn::arch_of(model).layer_sizes != ref.layer_sizes) {
      throw ShapeMismatch("models have different architectures");
    }
  }
}

}  // namespace

nn::ModelParams fedavg_float(const std::vector<nn::ModelParams>& models) {
  check_same_shapes(models);
  nn::ModelParams avg = models.front();
  for (std::size_t i = 1; i < models.size(); ++i) {
    for (std::size_t k = 0; k < avg.layers.size(); ++k) {
      avg.layers[k].weights += models[i].layers[k].weights;
      avg.layers[k].biases += models[i].layers[k].biases;
    }
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (auto& layer : avg.layers) {
    layer.weights *= inv;
    layer.biases *= inv;
  }
  return avg;
}

nn::ModelParams fedavg_quantized(const std::vector<nn::ModelParams>& models,
                                 const ring::FixedPointConfig& cfg,
                                 int divisor) {
  check_same_shapes(models);
  if (divisor == 0) divisor = static_cast<int>(models.size());
  if (divisor < 1) throw ConfigError("divisor must be >= 1");

  ring::RingVector sum = ring::encode_vec(nn::flatten(models.front()), cfg);
  for (std::size_t i = 1; i < models.size(); ++i) {
    sum = ring::add(sum, ring::encode_vec(nn::flatten(models[i]), cfg));
  }
  const ring::u64 inv = ring::encode(1.0 / static_cast<double>(divisor), cfg);
  const ring::RingVector averaged = ring::truncate(ring::scale(sum, inv));
  return nn::unflatten(ring::decode_vec(averaged), nn::arch_of(models.front()));
}

CentralizedResult centralized_run(const protocol::RoundConfig& rc,
                                  std::vector<data::Dataset> client_datasets,
                                  const nn::Batch* testset) {
  rc.validate();
  if (static_cast<int>(client_datasets.size()) != rc.m) {
    throw ConfigError("need one dataset per client");
  }
  std::vector<protocol::ClientState> states;
  states.reserve(rc.m);
  for (int i = 0; i < rc.m; ++i) {
    states.emplace_back(i + 1, std::move(client_datasets[i]), rc);
  }

  CentralizedResult result;
  for (int k = 1; k <= rc.iter; ++k) {
    std::vector<nn::ModelParams> locals;
    locals.reserve(rc.m);
    for (auto& state : states) {
      locals.push_back(protocol::local_training(state, rc));
    }
    const nn::ModelParams agg =
        fedavg_quantized(locals, rc.cfg, rc.divisor());
    for (auto& state : states) {
      state.current_weights = agg;
      state.round = k + 1;
    }
    if (testset != nullptr) {
      result.round_accuracy.push_back(nn::evaluate(agg, *testset));
    }
  }
  result.final_model = states.front().current_weights;
  return result;
}

}  // namespace scotch::oracle
