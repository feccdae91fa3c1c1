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

#include "scotch/nn.hpp"

#include <cmath>

#include "doctest.h"

using namespace scotch;
using nn::Batch;
using nn::Matrix;
using nn::ModelParams;
using nn::NNArch;

namespace {

Batch random_batch(int rows, int features, int classes, RandomSource& rng) {
  Batch batch;
  batch.inputs.resize(rows, features);
  batch.targets = Matrix::Zero(rows, classes);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < features; ++c) batch.inputs(r, c) = rng.next_unit();
    batch.targets(r, static_cast<Eigen::Index>(rng.next_below(classes))) = 1.0;
  }
  return batch;
}

// Central finite differences of the mean cross-entropy, the independent
// oracle for backprop.
std::vector<double> fd_gradient(const ModelParams& params, const Batch& batch,
                                double h) {
  const NNArch arch = nn::arch_of(params);
  std::vector<double> flat = nn::flatten(params);
  std::vector<double> grad(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    const double up = nn::cross_entropy(nn::unflatten(flat, arch), batch);
    flat[i] = keep - h;
    const double down = nn::cross_entropy(nn::unflatten(flat, arch), batch);
    flat[i] = keep;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Finite differences are meaningless within h of a ReLU kink, so the check
// only runs at configurations whose pre-activations stay clear of zero.
bool clear_of_kinks(const ModelParams& params, const Batch& batch,
                    double margin) {
  Matrix a = batch.inputs;
  for (std::size_t k = 0; k + 1 < params.layers.size(); ++k) {
    Matrix z = a * params.layers[k].weights.transpose();
    z.rowwise() += params.layers[k].biases.transpose();
    if (z.cwiseAbs().minCoeff() < margin) return false;
    a = z.cwiseMax(0.0);
  }
  return true;
}

// Randomized net with jittered biases (exact zeros park whole layers on the
// kink) and a batch kept away from kinks.
std::pair<ModelParams, Batch> gradcheck_case(const std::vector<int>& sizes,
                                             RandomSource& rng) {
  const NNArch arch{sizes};
  for (int attempt = 0; attempt < 100; ++attempt) {
    ModelParams params = nn::init_params(arch, rng);
    for (auto& layer : params.layers) {
      for (Eigen::Index i = 0; i < layer.biases.size(); ++i) {
        layer.biases(i) = 0.2 * rng.next_unit() - 0.1;
      }
    }
    const Batch batch = random_batch(6, sizes.front(), sizes.back(), rng);
    if (clear_of_kinks(params, batch, 1e-3)) return {params, batch};
  }
  throw std::runtime_error("could not find a kink-free configuration");
}

}  // namespace

TEST_CASE("init produces the contracted shapes, deterministically") {
  const NNArch arch{{784, 128, 10}};
  Chacha20Rng rng_a(3, 0);
  Chacha20Rng rng_b(3, 0);
  const ModelParams a = nn::init_params(arch, rng_a);
  const ModelParams b = nn::init_params(arch, rng_b);
  REQUIRE(a.layers.size() == 2);
  CHECK(a.layers[0].weights.rows() == 128);
  CHECK(a.layers[0].weights.cols() == 784);
  CHECK(a.layers[0].biases.size() == 128);
  CHECK(a.layers[1].weights.rows() == 10);
  CHECK(a.layers[1].weights.cols() == 128);
  CHECK(a.layers[1].biases.size() == 10);
  CHECK(nn::flatten(a) == nn::flatten(b));
  CHECK(a.layers[0].biases.isZero());

  // Mean of N uniform(-limit, limit) draws stays within 3 sigma of zero.
  const double limit = std::sqrt(6.0 / 784.0);
  const double n_draws = 128.0 * 784.0;
  const double sigma_mean = limit / std::sqrt(3.0 * n_draws);
  CHECK(std::abs(a.layers[0].weights.mean()) < 3.0 * sigma_mean);
}

TEST_CASE("softmax rows are normalized probabilities") {
  const NNArch arch{{12, 6, 10}};
  Chacha20Rng rng(4, 0);
  const ModelParams params = nn::init_params(arch, rng);
  const Batch batch = random_batch(40, 12, 10, rng);
  const Matrix probs = nn::forward(params, batch.inputs);
  for (int r = 0; r < probs.rows(); ++r) {
    CHECK(probs.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probs.row(r).minCoeff() > 0.0);
    CHECK(probs.row(r).maxCoeff() < 1.0);
  }
}

TEST_CASE("all-zero parameters give the uniform distribution") {
  ModelParams params;
  params.layers.push_back({Matrix::Zero(8, 20), nn::Vector::Zero(8)});
  params.layers.push_back({Matrix::Zero(10, 8), nn::Vector::Zero(10)});
  Chacha20Rng rng(5, 0);
  const Batch batch = random_batch(7, 20, 10, rng);
  const Matrix probs = nn::forward(params, batch.inputs);
  for (int r = 0; r < probs.rows(); ++r) {
    for (int c = 0; c < 10; ++c) {
      CHECK(probs(r, c) == doctest::Approx(0.1).epsilon(1e-12));
    }
  }

  // chance level on balanced data: uniform probs predict class 0 every time
  Batch balanced;
  balanced.inputs = Matrix::Constant(20, 20, 0.5);
  balanced.targets = Matrix::Zero(20, 10);
  for (int r = 0; r < 20; ++r) balanced.targets(r, r % 10) = 1.0;
  CHECK(nn::evaluate(params, balanced) == doctest::Approx(0.1));
}

TEST_CASE("forward rejects mismatched input width") {
  const NNArch arch{{12, 6, 10}};
  Chacha20Rng rng(6, 0);
  const ModelParams params = nn::init_params(arch, rng);
  Matrix wrong(3, 11);
  wrong.setZero();
  CHECK_THROWS_AS(nn::forward(params, wrong), ShapeMismatch);
}

TEST_CASE("one sgd epoch on a single sample decreases its loss") {
  const NNArch arch{{10, 5, 3}};
  Chacha20Rng rng(7, 0);
  const ModelParams params = nn::init_params(arch, rng);
  const Batch batch = random_batch(1, 10, 3, rng);
  const double before = nn::cross_entropy(params, batch);
  const ModelParams after = nn::train(params, batch, 0.05, 1);
  CHECK(nn::cross_entropy(after, batch) < before);
}

TEST_CASE("backprop matches central finite differences") {
  Chacha20Rng rng(8, 0);
  for (const auto& sizes :
       {std::vector<int>{3, 4, 2}, {5, 3, 3}, {2, 2, 2, 2}}) {
    const auto [params, batch] = gradcheck_case(sizes, rng);
    const std::vector<double> analytic = nn::flatten(nn::gradients(params, batch));
    const std::vector<double> numeric = fd_gradient(params, batch, 1e-5);
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      const double rel = std::abs(analytic[i] - numeric[i]) /
                         std::max({std::abs(analytic[i]), std::abs(numeric[i]),
                                   1e-6});
      worst = std::max(worst, rel);
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("training is deterministic") {
  const NNArch arch{{16, 8, 4}};
  Chacha20Rng rng(9, 0);
  const ModelParams params = nn::init_params(arch, rng);
  const Batch batch = random_batch(50, 16, 4, rng);
  const ModelParams a = nn::train(params, batch, 0.01, 3, 16);
  const ModelParams b = nn::train(params, batch, 0.01, 3, 16);
  CHECK(nn::flatten(a) == nn::flatten(b));  // bit-identical
}

TEST_CASE("non-finite numerics raise NonFiniteLoss") {
  const NNArch arch{{6, 4, 3}};
  Chacha20Rng rng(10, 0);
  const ModelParams params = nn::init_params(arch, rng);
  Batch batch = random_batch(8, 6, 3, rng);
  batch.inputs(0, 0) = INFINITY;  // corrupt data poisons the loss
  CHECK_THROWS_AS(nn::train(params, batch, 0.01, 1), NonFiniteLoss);
}

TEST_CASE("train validates its preconditions") {
  const NNArch arch{{6, 4, 3}};
  Chacha20Rng rng(11, 0);
  const ModelParams params = nn::init_params(arch, rng);
  const Batch batch = random_batch(4, 6, 3, rng);
  CHECK_THROWS_AS(nn::train(params, batch, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(nn::train(params, batch, 0.01, 0), ConfigError);
}

TEST_CASE("evaluate counts argmax agreement") {
  ModelParams params;
  params.layers.push_back({Matrix::Zero(3, 3), nn::Vector::Zero(3)});
  params.layers[0].weights.setIdentity();
  params.layers[0].weights *= 5.0;

  Batch batch;
  batch.inputs.resize(3, 3);
  batch.inputs << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  batch.targets = batch.inputs;
  CHECK(nn::evaluate(params, batch) == 1.0);

  batch.targets.setZero();
  batch.targets(0, 1) = 1;
  batch.targets(1, 0) = 1;
  batch.targets(2, 2) = 1;
  CHECK(nn::evaluate(params, batch) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("flatten uses the canonical order and total length") {
  const NNArch arch{{784, 128, 10}};
  CHECK(arch.num_params() == 101770);

  const NNArch tiny{{2, 2, 2}};
  ModelParams params;
  params.layers.push_back({Matrix(2, 2), nn::Vector(2)});
  params.layers[0].weights << 1, 2, 3, 4;  // row-major walk: 1 2 3 4
  params.layers[0].biases << 5, 6;
  params.layers.push_back({Matrix(2, 2), nn::Vector(2)});
  params.layers[1].weights << 7, 8, 9, 10;
  params.layers[1].biases << 11, 12;
  CHECK(nn::flatten(params) ==
        std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});

  const ModelParams back = nn::unflatten(nn::flatten(params), tiny);
  CHECK(nn::flatten(back) == nn::flatten(params));
  CHECK_THROWS_AS(nn::unflatten(std::vector<double>(11), tiny), LengthMismatch);
}

TEST_CASE("unflatten round-trips random models") {
  Chacha20Rng rng(12, 0);
  const NNArch arch{{9, 7, 5, 4}};
  const ModelParams params = nn::init_params(arch, rng);
  const auto flat = nn::flatten(params);
  CHECK(flat.size() == arch.num_params());
  CHECK(nn::flatten(nn::unflatten(flat, arch)) == flat);
}
