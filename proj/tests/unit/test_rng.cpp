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

#include <array>
#include <cmath>
#include <set>

#include "doctest.h"

using namespace scotch;

TEST_CASE("chacha20 block matches the RFC 7539 test vector") {
  std::array<std::uint32_t, 8> key{};
  for (int i = 0; i < 8; ++i) {
    // Key bytes 00 01 02 ... 1f, interpreted little-endian per word.
    const std::uint32_t base = static_cast<std::uint32_t>(4 * i);
    key[i] = base | ((base + 1) << 8) | ((base + 2) << 16) | ((base + 3) << 24);
  }
  const std::array<std::uint32_t, 3> nonce{0x09000000, 0x4a000000, 0x00000000};
  std::array<std::uint32_t, 16> out{};
  chacha20_block(key, 1, nonce, out);

  const std::array<std::uint32_t, 16> expected{
      0xe4e7f110, 0x15593bd1, 0x1fdd0f50, 0xc47120a3,
      0xc7f4d1c7, 0x0368c033, 0x9aaa2204, 0x4e6cd4c3,
      0x466482d2, 0x09aa9f07, 0x05d7c214, 0xa2028bd9,
      0xd19c12b5, 0xb94e16de, 0xe883d0cb, 0x4e3c50a2,
  };
  CHECK(out == expected);
}

TEST_CASE("chacha rng streams are deterministic and independent") {
  Chacha20Rng a(42, 0);
  Chacha20Rng b(42, 0);
  Chacha20Rng c(42, 1);
  Chacha20Rng d(43, 0);
  bool all_equal_c = true;
  bool all_equal_d = true;
  for (int i = 0; i < 256; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    all_equal_c = all_equal_c && (va == c.next_u64());
    all_equal_d = all_equal_d && (va == d.next_u64());
  }
  CHECK_FALSE(all_equal_c);
  CHECK_FALSE(all_equal_d);
}

TEST_CASE("derive_seed separates domains") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t domain = 0; domain < 64; ++domain) {
    seen.insert(derive_seed(7, domain));
  }
  CHECK(seen.size() == 64);
}

TEST_CASE("next_unit and next_below stay in range") {
  Chacha20Rng rng(1, 0);
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto v = rng.next_below(7);
    CHECK(v < 7);
  }
}

TEST_CASE("next_gaussian has roughly standard moments") {
  Chacha20Rng rng(5, 0);
  const int n = 20000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.1);
}
