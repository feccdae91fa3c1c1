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

#include <cmath>

#include "doctest.h"

using namespace scotch;
using namespace std::chrono_literals;
using protocol::RoundConfig;

namespace {

nn::ModelParams scalar_model(double w) {
  nn::ModelParams params;
  params.layers.push_back({nn::Matrix::Constant(1, 1, w), nn::Vector::Zero(1)});
  return params;
}

double scalar_of(const nn::ModelParams& params) {
  return params.layers[0].weights(0, 0);
}

RoundConfig small_config(int m, int n, int iter, int lf = 24) {
  RoundConfig rc;
  rc.m = m;
  rc.n = n;
  rc.iter = iter;
  rc.cfg = ring::FixedPointConfig(64, lf);
  rc.lr = 0.01;
  rc.epochs = 1;
  rc.seed = 77;
  rc.arch.layer_sizes = {784, 8, 10};
  rc.timeout = 5000ms;
  return rc;
}

}  // namespace

TEST_CASE("fedavg_float basics") {
  CHECK(scalar_of(oracle::fedavg_float({scalar_model(3.25)})) == 3.25);
  CHECK(scalar_of(oracle::fedavg_float({scalar_model(10.0),
                                        scalar_model(20.0)})) == 15.0);
  CHECK(scalar_of(oracle::fedavg_float({scalar_model(1.5),
                                        scalar_model(-1.5)})) == 0.0);

  nn::ModelParams other;
  other.layers.push_back({nn::Matrix::Zero(2, 1), nn::Vector::Zero(2)});
  CHECK_THROWS_AS(oracle::fedavg_float({scalar_model(1.0), other}),
                  ShapeMismatch);
  CHECK_THROWS_AS(oracle::fedavg_float({}), ShapeMismatch);
}

TEST_CASE("fedavg_quantized error decreases monotonically in l_f") {
  // The scaled product carries 2*l_f fractional bits, so l_f tops out at 31
  // in a 64-bit ring; within that range the error shrinks monotonically
  // toward fedavg_float.
  Chacha20Rng rng(55, 0);
  const nn::NNArch arch{{6, 5, 3}};
  std::vector<nn::ModelParams> models;
  for (int i = 0; i < 3; ++i) models.push_back(nn::init_params(arch, rng));

  const auto exact = nn::flatten(oracle::fedavg_float(models));
  double previous = 1e9;
  for (int lf : {8, 16, 24, 30}) {
    const auto approx = nn::flatten(
        oracle::fedavg_quantized(models, ring::FixedPointConfig(64, lf)));
    double err = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
      err = std::max(err, std::abs(approx[i] - exact[i]));
    }
    CHECK(err < previous);
    CHECK(err <= 4.0 * std::ldexp(1.0, -lf));
    previous = err;
  }
}

TEST_CASE("quantized averaging of dyadic scalars is exact") {
  const ring::FixedPointConfig cfg(64, 16);
  const auto avg = oracle::fedavg_quantized(
      {scalar_model(10.0), scalar_model(20.0)}, cfg);
  CHECK(scalar_of(avg) == 15.0);
}

TEST_CASE("centralized run is bit-identical to the protocol at n = 1") {
  const RoundConfig rc = small_config(3, 1, /*iter=*/3);
  const auto pool = data::synthetic_dataset(rc.seed, 120, 10);
  const auto parts = data::partition_clients(pool, rc.m);

  const auto central = oracle::centralized_run(rc, parts);
  const auto proto = protocol::run_protocol(rc, parts);
  CHECK(nn::flatten(central.final_model) == nn::flatten(proto.final_model));
}

TEST_CASE("centralized run reports per-round accuracy when given a test set") {
  const RoundConfig rc = small_config(2, 1, /*iter=*/2);
  const auto pool = data::synthetic_dataset(rc.seed, 220, 10);
  Chacha20Rng split_rng(rc.seed, 1);
  const auto [train, holdout] = data::split_train_test(pool, 8.0 / 11.0, split_rng);
  auto parts = data::partition_clients(train, rc.m);
  std::vector<std::size_t> all(holdout.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const nn::Batch test = data::make_batch(holdout, all);

  const auto result = oracle::centralized_run(rc, parts, &test);
  REQUIRE(result.round_accuracy.size() == 2);
  for (double acc : result.round_accuracy) {
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
  }
}

TEST_CASE("restricting the total ring width wrecks training, wider rings do not") {
  // The federated_sum product carries 2*l_f fractional bits; at l = 16 it
  // overflows the ring for realistic weights and the aggregate turns to
  // noise, while l = 32 with the same l_f trains fine. This reproduces the
  // reported 16-bit-versus-32-bit "precision" collapse mechanistically.
  RoundConfig narrow = small_config(2, 3, /*iter=*/2, /*lf=*/13);
  narrow.cfg = ring::FixedPointConfig(16, 13);
  narrow.enforce_headroom = false;  // let it wrap, as a naive port would
  narrow.lr = 0.08;
  narrow.epochs = 5;
  RoundConfig wide = small_config(2, 3, /*iter=*/2, /*lf=*/13);
  wide.cfg = ring::FixedPointConfig(32, 13);
  wide.lr = 0.08;
  wide.epochs = 5;

  const auto pool = data::synthetic_dataset(narrow.seed, 900, 10);
  Chacha20Rng split_rng(narrow.seed, 1);
  const auto [train, holdout] = data::split_train_test(pool, 2.0 / 3.0, split_rng);
  const auto parts = data::partition_clients(train, 2);
  std::vector<std::size_t> all(holdout.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const nn::Batch test = data::make_batch(holdout, all);

  const auto broken = protocol::run_protocol(narrow, parts, &test);
  const auto healthy = protocol::run_protocol(wide, parts, &test);
  const double broken_acc = broken.rounds.back().test_accuracy;
  const double healthy_acc = healthy.rounds.back().test_accuracy;
  CHECK(healthy_acc >= 0.9);
  CHECK(broken_acc <= 0.4);
  CHECK(healthy_acc - broken_acc >= 0.5);
}
