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
#include <string>
#include <utility>
#include <vector>

#include "scotch/nn.hpp"
#include "scotch/rng.hpp"

namespace scotch::data {

inline constexpr int kNumClasses = 10;
inline constexpr int kImagePixels = 784;  // 28 x 28, flattened

struct Dataset {
  nn::Matrix images;        // N x 784, values in [0, 1]
  std::vector<int> labels;  // N entries in [0, 10)

  std::size_t size() const { return labels.size(); }
};

// Reads an IDX image/label file pair (gzip-compressed files are handled
// transparently). Pixels are divided by 255. `transpose_images` corrects
// the transposed storage used by EMNIST.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 bool transpose_images = false);

std::vector<double> one_hot(int label, int classes);

// Seeded shuffle, then a disjoint |train| = floor(ratio * N) split.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double ratio,
                                             RandomSource& rng);

// Contiguous chunks with sizes differing by at most one. Callers shuffle
// upstream (split_train_test already does).
std::vector<Dataset> partition_clients(const Dataset& train, int m);

// Dataset rows at the given indices, with one-hot targets attached.
nn::Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx);

// k samples without replacement under a fresh permutation.
nn::Batch choose_subset(const Dataset& ds, RandomSource& rng, std::size_t k);

// Walks one seeded permutation across successive take() calls, so per-round
// subsets never repeat an index until the permutation is exhausted; then
// re-permutes. Leftover indices smaller than k are discarded on re-permute.
class SubsetSampler {
 public:
  explicit SubsetSampler(std::size_t n) : n_(n) {}

  std::vector<std::size_t> take(std::size_t k, RandomSource& rng);

 private:
  std::size_t n_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

// Random k-subset of the dataset (used by the desk-scale sample cap).
Dataset sample_without_replacement(const Dataset& ds, std::size_t k,
                                   RandomSource& rng);

// Gaussian class blobs in pixel space, balanced within +-1 per class,
// shuffled, deterministic in the seed. Linearly separable by design.
Dataset synthetic_dataset(std::uint64_t seed, std::size_t n, int classes);

}  // namespace scotch::data
