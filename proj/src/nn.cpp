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
#include <string>

namespace scotch::nn {

namespace {

constexpr double kLogFloor = 1e-12;  // clamp inside log() for dead softmax bins

void check_inputs(const ModelParams& params, const Matrix& inputs) {
  if (params.layers.empty()) throw ShapeMismatch("model has no layers");
  if (inputs.cols() != params.layers.front().weights.cols()) {
    throw ShapeMismatch("input width " + std::to_string(inputs.cols()) +
                        " does not match first layer fan-in " +
                        std::to_string(params.layers.front().weights.cols()));
  }
}

void check_batch(const ModelParams& params, const Batch& batch) {
  check_inputs(params, batch.inputs);
  if (batch.inputs.rows() != batch.targets.rows()) {
    throw ShapeMismatch("inputs/targets row mismatch");
  }
  if (batch.targets.cols() != params.layers.back().weights.rows()) {
    throw ShapeMismatch("target width does not match output layer");
  }
}

// Forward pass keeping every post-activation, for backprop.
// activations[0] is the input, activations[k] the output of layer k-1.
std::vector<Matrix> forward_all(const ModelParams& params,
                                const Matrix& inputs) {
  std::vector<Matrix> activations;
  activations.reserve(params.layers.size() + 1);
  activations.push_back(inputs);
  const std::size_t last = params.layers.size() - 1;
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const auto& layer = params.layers[k];
    Matrix z = activations.back() * layer.weights.transpose();
    z.rowwise() += layer.biases.transpose();
    if (k < last) {
      activations.push_back(z.cwiseMax(0.0));  // ReLU
    } else {
      // Stable softmax.
      Matrix shifted = z.colwise() - z.rowwise().maxCoeff();
      Matrix e = shifted.array().exp();
      activations.push_back(e.array().colwise() / e.rowwise().sum().array());
    }
  }
  return activations;
}

double loss_from_probs(const Matrix& probs, const Matrix& targets) {
  const auto clamped = probs.array().max(kLogFloor);
  return -(targets.array() * clamped.log()).sum() /
         static_cast<double>(probs.rows());
}

// Backprop from cached activations. Returns mean-reduced gradients and the
// batch loss via out-param.
ModelParams backprop(const ModelParams& params,
                     const std::vector<Matrix>& activations,
                     const Matrix& targets, double& loss_out) {
  const auto rows = static_cast<double>(targets.rows());
  const Matrix& probs = activations.back();
  loss_out = loss_from_probs(probs, targets);

  ModelParams grads;
  grads.layers.resize(params.layers.size());

  // Softmax + cross-entropy collapse to (p - t) / batch.
  Matrix delta = (probs - targets) / rows;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    grads.layers[k].weights = delta.transpose() * activations[k];
    grads.layers[k].biases = delta.colwise().sum().transpose();
    if (k > 0) {
      Matrix back = delta * params.layers[k].weights;
      // ReLU gate of the producing layer.
      delta = back.array() * (activations[k].array() > 0.0).cast<double>();
    }
  }
  return grads;
}

}  // namespace

void NNArch::validate() const {
  if (layer_sizes.size() < 2) {
    throw ShapeMismatch("architecture needs at least input and output layers");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw ShapeMismatch("layer sizes must be positive");
  }
}

std::size_t NNArch::num_params() const {
  std::size_t total = 0;
  for (std::size_t k = 1; k < layer_sizes.size(); ++k) {
    total += static_cast<std::size_t>(layer_sizes[k]) * layer_sizes[k - 1] +
             layer_sizes[k];
  }
  return total;
}

NNArch arch_of(const ModelParams& params) {
  NNArch arch;
  if (params.layers.empty()) throw ShapeMismatch("model has no layers");
  arch.layer_sizes.push_back(
      static_cast<int>(params.layers.front().weights.cols()));
  for (const auto& layer : params.layers) {
    arch.layer_sizes.push_back(static_cast<int>(layer.weights.rows()));
  }
  return arch;
}

ModelParams init_params(const NNArch& arch, RandomSource& rng) {
  arch.validate();
  ModelParams params;
  params.layers.reserve(arch.layer_sizes.size() - 1);
  for (std::size_t k = 1; k < arch.layer_sizes.size(); ++k) {
    const int fan_in = arch.layer_sizes[k - 1];
    const int fan_out = arch.layer_sizes[k];
    const double limit = std::sqrt(6.0 / fan_in);
    LayerParams layer;
    layer.weights.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layer.weights(r, c) = (2.0 * rng.next_unit() - 1.0) * limit;
      }
    }
    layer.biases = Vector::Zero(fan_out);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Matrix forward(const ModelParams& params, const Matrix& inputs) {
  check_inputs(params, inputs);
  return forward_all(params, inputs).back();
}

double cross_entropy(const ModelParams& params, const Batch& batch) {
  check_batch(params, batch);
  return loss_from_probs(forward_all(params, batch.inputs).back(),
                         batch.targets);
}

ModelParams gradients(const ModelParams& params, const Batch& batch) {
  check_batch(params, batch);
  double loss = 0.0;
  return backprop(params, forward_all(params, batch.inputs), batch.targets,
                  loss);
}

ModelParams train(ModelParams params, const Batch& data, double lr, int epochs,
                  int batch_size) {
  check_batch(params, data);
  if (lr <= 0.0) throw ConfigError("learning rate must be positive");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");

  const Eigen::Index total = data.inputs.rows();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (Eigen::Index start = 0; start < total; start += batch_size) {
      const Eigen::Index count = std::min<Eigen::Index>(batch_size, total - start);
      const Matrix inputs = data.inputs.middleRows(start, count);
      const Matrix targets = data.targets.middleRows(start, count);

      double loss = 0.0;
      const auto activations = forward_all(params, inputs);
      const ModelParams grads = backprop(params, activations, targets, loss);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("loss diverged at epoch " + std::to_string(epoch));
      }
      for (std::size_t k = 0; k < params.layers.size(); ++k) {
        params.layers[k].weights -= lr * grads.layers[k].weights;
        params.layers[k].biases -= lr * grads.layers[k].biases;
      }
    }
  }
  return params;
}

double evaluate(const ModelParams& params, const Batch& testset) {
  check_batch(params, testset);
  const Matrix probs = forward(params, testset.inputs);
  Eigen::Index correct = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index predicted = 0, actual = 0;
    probs.row(r).maxCoeff(&predicted);
    testset.targets.row(r).maxCoeff(&actual);
    if (predicted == actual) ++correct;
  }
  return probs.rows() == 0
             ? 0.0
             : static_cast<double>(correct) / static_cast<double>(probs.rows());
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> out;
  out.reserve(arch_of(params).num_params());
  for (const auto& layer : params.layers) {
    // Row-major storage, so this is the row-major walk.
    out.insert(out.end(), layer.weights.data(),
               layer.weights.data() + layer.weights.size());
    out.insert(out.end(), layer.biases.data(),
               layer.biases.data() + layer.biases.size());
  }
  return out;
}

ModelParams unflatten(std::span<const double> vec, const NNArch& arch) {
  arch.validate();
  if (vec.size() != arch.num_params()) {
    throw LengthMismatch("unflatten: expected " +
                         std::to_string(arch.num_params()) + " values, got " +
                         std::to_string(vec.size()));
  }
  ModelParams params;
  std::size_t pos = 0;
  for (std::size_t k = 1; k < arch.layer_sizes.size(); ++k) {
    const int fan_in = arch.layer_sizes[k - 1];
    const int fan_out = arch.layer_sizes[k];
    LayerParams layer;
    layer.weights.resize(fan_out, fan_in);
    std::copy_n(vec.begin() + pos, static_cast<std::size_t>(fan_out) * fan_in,
                layer.weights.data());
    pos += static_cast<std::size_t>(fan_out) * fan_in;
    layer.biases.resize(fan_out);
    std::copy_n(vec.begin() + pos, fan_out, layer.biases.data());
    pos += fan_out;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace scotch::nn
