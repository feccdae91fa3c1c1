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

#include <array>
#include <cstddef>
#include <cstdint>

namespace scotch {

// Seedable random source. Every consumer takes a RandomSource& so tests can
// substitute scripted streams; protocol runs use Chacha20Rng seeded from the
// experiment seed, one independent stream per (participant, purpose).
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  virtual std::uint64_t next_u64() = 0;

  // Uniform double in [0, 1) with 53 random bits.
  double next_unit();

  // Uniform integer in [0, bound), bias-free (rejection sampling). bound > 0.
  std::uint64_t next_below(std::uint64_t bound);

  // Standard normal via Box-Muller. Draws two words per call so the stream
  // position stays a pure function of the call count.
  double next_gaussian();
};

// One 64-byte ChaCha20 keystream block (RFC 7539 layout: 8-word key,
// 1-word block counter, 3-word nonce).
void chacha20_block(const std::array<std::uint32_t, 8>& key,
                    std::uint32_t counter,
                    const std::array<std::uint32_t, 3>& nonce,
                    std::array<std::uint32_t, 16>& out);

// Deterministic ChaCha20-based generator. The 64-bit seed is expanded into a
// 256-bit key with SplitMix64; `stream` selects an independent keystream via
// the nonce, so participants derived from one experiment seed never share
// randomness.
class Chacha20Rng final : public RandomSource {
 public:
  explicit Chacha20Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() override;

 private:
  void refill();

  std::array<std::uint32_t, 8> key_;
  std::array<std::uint32_t, 3> nonce_;
  std::uint32_t counter_ = 0;
  std::array<std::uint32_t, 16> block_{};
  std::size_t word_pos_ = 16;  // forces refill on first use
};

// SplitMix64 step; used for seed expansion and domain separation.
std::uint64_t splitmix64(std::uint64_t& state);

// Derives a sub-seed for an independent purpose ("domain") from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t domain);

}  // namespace scotch
