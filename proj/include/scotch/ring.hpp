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
#include <span>
#include <vector>

#include "scotch/errors.hpp"

namespace scotch::ring {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Bit layout of the fixed-point embedding into Z_{2^l}: l total bits split
// into l_x integer bits, l_f fractional bits and one sign bit,
// l = l_x + l_f + 1. Values in [2^{l-1}, 2^l) represent value - 2^l
// (two's complement).
struct FixedPointConfig {
  int total_bits;  // l
  int frac_bits;   // l_f

  FixedPointConfig(int l, int l_f);

  int integer_bits() const { return total_bits - frac_bits - 1; }  // l_x

  u64 mask() const {
    return total_bits == 64 ? ~u64{0} : (u64{1} << total_bits) - 1;
  }
  u64 sign_bit() const { return u64{1} << (total_bits - 1); }

  i64 to_signed(u64 v) const;
  u64 from_signed(i64 s) const { return static_cast<u64>(s) & mask(); }

  friend bool operator==(const FixedPointConfig&,
                         const FixedPointConfig&) = default;
};

// A ring element is a plain u64 in [0, 2^l) under a given config; vectors
// carry the config once for all elements.
struct RingVector {
  FixedPointConfig cfg;
  std::vector<u64> elems;

  std::size_t size() const { return elems.size(); }
};

// float -> ring, round to nearest (ties away from zero).
// Throws OverflowError unless |x| < 2^{l_x}.
u64 encode(double x, const FixedPointConfig& cfg);

// ring -> float: signed(r) / 2^{l_f}.
double decode(u64 r, const FixedPointConfig& cfg);

u64 add(u64 a, u64 b, const FixedPointConfig& cfg);
u64 sub(u64 a, u64 b, const FixedPointConfig& cfg);
u64 mul(u64 a, u64 b, const FixedPointConfig& cfg);

// Signed arithmetic right-shift by l_f (floor toward -inf), re-embedded
// mod 2^l. Rescales a product that carries 2*l_f fractional bits.
u64 truncate(u64 r, const FixedPointConfig& cfg);

// Reduction applied after summing share-locally truncated shares: the sum's
// top l_f bits carry only share-wrap residue (multiples of 2^{l-l_f}), so the
// value is sign-reduced from Z_{2^l} into Z_{2^{l-l_f}} and re-embedded.
// Identity on values with |signed(r)| < 2^{l-l_f-1}.
u64 wrap_correct(u64 r, const FixedPointConfig& cfg);

RingVector encode_vec(std::span<const double> xs, const FixedPointConfig& cfg);
std::vector<double> decode_vec(const RingVector& v);

RingVector add(const RingVector& a, const RingVector& b);
RingVector sub(const RingVector& a, const RingVector& b);
RingVector scale(const RingVector& v, u64 c);
RingVector truncate(const RingVector& v);
RingVector wrap_correct(const RingVector& v);

}  // namespace scotch::ring
