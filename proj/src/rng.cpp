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

#include "scotch/rng.hpp"

#include <cmath>

namespace scotch {

namespace {

inline std::uint32_t rotl32(std::uint32_t x, int k) {
  return (x << k) | (x >> (32 - k));
}

inline void quarter_round(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c,
                          std::uint32_t& d) {
  a += b; d ^= a; d = rotl32(d, 16);
  c += d; b ^= c; b = rotl32(b, 12);
  a += b; d ^= a; d = rotl32(d, 8);
  c += d; b ^= c; b = rotl32(b, 7);
}

}  // namespace

double RandomSource::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomSource::next_below(std::uint64_t bound) {
  // Rejection sampling over the largest multiple of bound below 2^64.
  const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

double RandomSource::next_gaussian() {
  // Box-Muller; u1 nudged away from 0 so log() stays finite.
  double u1 = next_unit();
  double u2 = next_unit();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

void chacha20_block(const std::array<std::uint32_t, 8>& key,
                    std::uint32_t counter,
                    const std::array<std::uint32_t, 3>& nonce,
                    std::array<std::uint32_t, 16>& out) {
  const std::array<std::uint32_t, 16> input = {
      0x61707865, 0x3320646e, 0x79622d32, 0x6b206574,  // "expand 32-byte k"
      key[0], key[1], key[2], key[3],
      key[4], key[5], key[6], key[7],
      counter, nonce[0], nonce[1], nonce[2],
  };
  out = input;
  for (int round = 0; round < 10; ++round) {
    quarter_round(out[0], out[4], out[8], out[12]);
    quarter_round(out[1], out[5], out[9], out[13]);
    quarter_round(out[2], out[6], out[10], out[14]);
    quarter_round(out[3], out[7], out[11], out[15]);
    quarter_round(out[0], out[5], out[10], out[15]);
    quarter_round(out[1], out[6], out[11], out[12]);
    quarter_round(out[2], out[7], out[8], out[13]);
    quarter_round(out[3], out[4], out[9], out[14]);
  }
  for (int i = 0; i < 16; ++i) out[i] += input[i];
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t domain) {
  std::uint64_t s = master ^ (0xd1b54a32d192ed03ULL * (domain + 1));
  return splitmix64(s);
}

Chacha20Rng::Chacha20Rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t w = splitmix64(s);
    key_[2 * i] = static_cast<std::uint32_t>(w);
    key_[2 * i + 1] = static_cast<std::uint32_t>(w >> 32);
  }
  nonce_ = {0, static_cast<std::uint32_t>(stream),
            static_cast<std::uint32_t>(stream >> 32)};
}

void Chacha20Rng::refill() {
  chacha20_block(key_, counter_, nonce_, block_);
  ++counter_;
  if (counter_ == 0) ++nonce_[0];  // 96-bit block index in practice
  word_pos_ = 0;
}

std::uint64_t Chacha20Rng::next_u64() {
  if (word_pos_ + 2 > block_.size()) refill();
  const std::uint64_t lo = block_[word_pos_];
  const std::uint64_t hi = block_[word_pos_ + 1];
  word_pos_ += 2;
  return lo | (hi << 32);
}

}  // namespace scotch
