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

#include <Eigen/Core>
#include <span>
#include <vector>

#include "scotch/errors.hpp"
#include "scotch/rng.hpp"

namespace scotch::nn {

// Row-major so flatten() is a straight copy of each weight matrix.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// MLP shape: input, hidden..., output. Hidden activations are ReLU, the
// output is a softmax over the class count.
struct NNArch {
  std::vector<int> layer_sizes;

  void validate() const;  // throws ShapeMismatch
  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  std::size_t num_params() const;
};

struct LayerParams {
  Matrix weights;  // out x in
  Vector biases;   // out
};

struct ModelParams {
  std::vector<LayerParams> layers;
};

// Recovers the architecture implied by a parameter set.
NNArch arch_of(const ModelParams& params);

struct Batch {
  Matrix inputs;   // samples x features, values in [0, 1]
  Matrix targets;  // samples x classes, one-hot rows
};

// He-style fan-in scaled uniform weights, zero biases. Deterministic given
// the rng stream.
ModelParams init_params(const NNArch& arch, RandomSource& rng);

// Class probabilities, one softmax row per input row.
Matrix forward(const ModelParams& params, const Matrix& inputs);

// Mean cross-entropy of the batch under the model.
double cross_entropy(const ModelParams& params, const Batch& batch);

// Backprop gradients of mean cross-entropy, same shapes as the params.
ModelParams gradients(const ModelParams& params, const Batch& batch);

// Mini-batch SGD on cross-entropy, consuming the batch in order (sequential
// slices, repeated per epoch). Deterministic given the batch order.
// Throws NonFiniteLoss if the loss stops being finite.
ModelParams train(ModelParams params, const Batch& data, double lr, int epochs,
                  int batch_size = 32);

// Fraction of rows whose argmax prediction matches the target argmax.
double evaluate(const ModelParams& params, const Batch& testset);

// Canonical order: layers in sequence, weights row-major, then biases.
std::vector<double> flatten(const ModelParams& params);
ModelParams unflatten(std::span<const double> vec, const NNArch& arch);

}  // namespace scotch::nn
