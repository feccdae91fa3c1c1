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

#include "scotch/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scotch::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

// Reads a whole file through zlib; gzread hands back raw bytes for files
// that are not gzip-compressed, which gives transparent .gz support.
std::vector<std::uint8_t> read_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) {
    throw TruncatedFile("cannot open " + path);
  }
  std::vector<std::uint8_t> bytes;
  std::uint8_t buf[1 << 16];
  int got;
  while ((got = gzread(f, buf, sizeof(buf))) > 0) {
    bytes.insert(bytes.end(), buf, buf + got);
  }
  const bool error = got < 0;
  gzclose(f);
  if (error) {
    throw TruncatedFile("read error in " + path);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes,
                        std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw TruncatedFile(path + ": header cut short");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

std::vector<std::size_t> permutation(std::size_t n, RandomSource& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
    std::swap(idx[i - 1], idx[rng.next_below(i)]);
  }
  return idx;
}

Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.images.resize(static_cast<Eigen::Index>(idx.size()), ds.images.cols());
  out.labels.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.images.row(static_cast<Eigen::Index>(i)) =
        ds.images.row(static_cast<Eigen::Index>(idx[i]));
    out.labels.push_back(ds.labels[idx[i]]);
  }
  return out;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 bool transpose_images) {
  const auto img_bytes = read_file(images_path);
  const auto lab_bytes = read_file(labels_path);

  if (read_be32(img_bytes, 0, images_path) != kImagesMagic) {
    throw BadMagic(images_path + ": not an IDX image file");
  }
  if (read_be32(lab_bytes, 0, labels_path) != kLabelsMagic) {
    throw BadMagic(labels_path + ": not an IDX label file");
  }

  const std::uint32_t n_img = read_be32(img_bytes, 4, images_path);
  const std::uint32_t rows = read_be32(img_bytes, 8, images_path);
  const std::uint32_t cols = read_be32(img_bytes, 12, images_path);
  const std::uint32_t n_lab = read_be32(lab_bytes, 4, labels_path);

  if (n_img != n_lab) {
    throw DimensionMismatch("image count " + std::to_string(n_img) +
                            " != label count " + std::to_string(n_lab));
  }
  if (rows * cols != kImagePixels) {
    throw DimensionMismatch("expected 28x28 images, got " +
                            std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::size_t want_img = 16 + std::size_t{n_img} * kImagePixels;
  if (img_bytes.size() < want_img) {
    throw TruncatedFile(images_path + ": pixel data cut short");
  }
  const std::size_t want_lab = 8 + std::size_t{n_lab};
  if (lab_bytes.size() < want_lab) {
    throw TruncatedFile(labels_path + ": label data cut short");
  }

  Dataset ds;
  ds.images.resize(n_img, kImagePixels);
  ds.labels.reserve(n_lab);
  for (std::uint32_t i = 0; i < n_img; ++i) {
    const std::uint8_t* px = img_bytes.data() + 16 + std::size_t{i} * kImagePixels;
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) {
        const std::uint32_t src = transpose_images ? c * rows + r : r * cols + c;
        ds.images(i, static_cast<Eigen::Index>(r * cols + c)) =
            static_cast<double>(px[src]) / 255.0;
      }
    }
    const int label = lab_bytes[8 + i];
    if (label < 0 || label >= kNumClasses) {
      throw OutOfRange(labels_path + ": label " + std::to_string(label) +
                       " outside [0, 10)");
    }
    ds.labels.push_back(label);
  }
  return ds;
}

std::vector<double> one_hot(int label, int classes) {
  if (label < 0 || label >= classes) {
    throw OutOfRange("label " + std::to_string(label) + " outside [0, " +
                     std::to_string(classes) + ")");
  }
  std::vector<double> v(static_cast<std::size_t>(classes), 0.0);
  v[static_cast<std::size_t>(label)] = 1.0;
  return v;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double ratio,
                                             RandomSource& rng) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must be in (0, 1)");
  }
  const auto idx = permutation(ds.size(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(ds.size())));
  std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + n_train);
  std::vector<std::size_t> test_idx(idx.begin() + n_train, idx.end());
  return {select_rows(ds, train_idx), select_rows(ds, test_idx)};
}

std::vector<Dataset> partition_clients(const Dataset& train, int m) {
  if (m < 1) throw ConfigError("client count must be >= 1");
  const std::size_t n = train.size();
  const std::size_t base = n / static_cast<std::size_t>(m);
  const std::size_t extra = n % static_cast<std::size_t>(m);
  std::vector<Dataset> parts;
  parts.reserve(m);
  std::size_t start = 0;
  for (int i = 0; i < m; ++i) {
    const std::size_t count = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), start);
    parts.push_back(select_rows(train, idx));
    start += count;
  }
  return parts;
}

nn::Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& idx) {
  nn::Batch batch;
  batch.inputs.resize(static_cast<Eigen::Index>(idx.size()), ds.images.cols());
  batch.targets = nn::Matrix::Zero(static_cast<Eigen::Index>(idx.size()),
                                   kNumClasses);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    batch.inputs.row(static_cast<Eigen::Index>(i)) =
        ds.images.row(static_cast<Eigen::Index>(idx[i]));
    batch.targets(static_cast<Eigen::Index>(i), ds.labels[idx[i]]) = 1.0;
  }
  return batch;
}

nn::Batch choose_subset(const Dataset& ds, RandomSource& rng, std::size_t k) {
  if (k < 1 || k > ds.size()) {
    throw SubsetTooLarge("subset size " + std::to_string(k) +
                         " outside [1, " + std::to_string(ds.size()) + "]");
  }
  auto idx = permutation(ds.size(), rng);
  idx.resize(k);
  return make_batch(ds, idx);
}

std::vector<std::size_t> SubsetSampler::take(std::size_t k, RandomSource& rng) {
  if (k < 1 || k > n_) {
    throw SubsetTooLarge("subset size " + std::to_string(k) + " outside [1, " +
                         std::to_string(n_) + "]");
  }
  if (order_.empty() || pos_ + k > n_) {
    order_ = permutation(n_, rng);
    pos_ = 0;
  }
  std::vector<std::size_t> out(order_.begin() + pos_, order_.begin() + pos_ + k);
  pos_ += k;
  return out;
}

Dataset sample_without_replacement(const Dataset& ds, std::size_t k,
                                   RandomSource& rng) {
  if (k > ds.size()) {
    throw SubsetTooLarge("sample size exceeds dataset size");
  }
  auto idx = permutation(ds.size(), rng);
  idx.resize(k);
  return select_rows(ds, idx);
}

Dataset synthetic_dataset(std::uint64_t seed, std::size_t n, int classes) {
  if (classes < 2 || classes > kNumClasses) {
    throw ConfigError("synthetic class count must be in [2, 10]");
  }
  if (n < static_cast<std::size_t>(classes)) {
    throw ConfigError("need at least one sample per class");
  }
  Chacha20Rng rng(seed, /*stream=*/0x53594e54);  // "SYNT"

  // Gaussian blobs around block-structured means: each class lights up its
  // own band of pixels. The bands keep the classes nearly orthogonal, so one
  // SGD epoch at a modest learning rate already separates them.
  const int band = kImagePixels / classes;
  std::vector<std::vector<double>> means(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    auto& mean = means[static_cast<std::size_t>(c)];
    mean.resize(kImagePixels);
    for (int p = 0; p < kImagePixels; ++p) {
      const bool lit = p >= c * band && p < (c + 1) * band;
      mean[static_cast<std::size_t>(p)] =
          (lit ? 0.9 : 0.05) + 0.04 * (2.0 * rng.next_unit() - 1.0);
    }
  }

  Dataset ds;
  ds.images.resize(static_cast<Eigen::Index>(n), kImagePixels);
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    ds.labels[i] = label;
    const auto& mean = means[static_cast<std::size_t>(label)];
    for (int p = 0; p < kImagePixels; ++p) {
      const double v = mean[static_cast<std::size_t>(p)] + 0.08 * rng.next_gaussian();
      ds.images(static_cast<Eigen::Index>(i), p) = std::clamp(v, 0.0, 1.0);
    }
  }
  return select_rows(ds, permutation(n, rng));
}

}  // namespace scotch::data
