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

#include "scotch/ring.hpp"

#include <cmath>
#include <string>

namespace scotch::ring {

namespace {

void check_same_layout(const RingVector& a, const RingVector& b) {
  if (!(a.cfg == b.cfg)) {
    throw ConfigMismatch("ring vectors have different fixed-point configs");
  }
  if (a.size() != b.size()) {
    throw LengthMismatch("ring vectors have different lengths: " +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
}

}  // namespace

FixedPointConfig::FixedPointConfig(int l, int l_f)
    : total_bits(l), frac_bits(l_f) {
  if (l < 2 || l > 64) {
    throw ConfigError("ring width l must be in [2, 64], got " +
                      std::to_string(l));
  }
  if (l_f < 1 || l_f > l - 2) {
    throw ConfigError("fractional bits l_f must be in [1, l-2], got l_f=" +
                      std::to_string(l_f) + " with l=" + std::to_string(l));
  }
}

i64 FixedPointConfig::to_signed(u64 v) const {
  v &= mask();
  if (total_bits == 64) return static_cast<i64>(v);
  if (v & sign_bit()) return static_cast<i64>(v | ~mask());
  return static_cast<i64>(v);
}

u64 encode(double x, const FixedPointConfig& cfg) {
  if (!std::isfinite(x)) {
    throw OverflowError("encode: value is not finite");
  }
  const long double bound = std::ldexp(1.0L, cfg.integer_bits());
  if (std::fabs(static_cast<long double>(x)) >= bound) {
    throw OverflowError("encode: |" + std::to_string(x) + "| >= 2^" +
                        std::to_string(cfg.integer_bits()));
  }
  // 80-bit intermediate: |x * 2^l_f| < 2^{l-1} <= 2^63 keeps llroundl exact.
  const long double scaled =
      std::ldexp(static_cast<long double>(x), cfg.frac_bits);
  const long double rounded = std::roundl(scaled);  // ties away from zero
  if (rounded >= std::ldexp(1.0L, cfg.total_bits - 1)) {
    throw OverflowError("encode: value rounds past the signed range");
  }
  return cfg.from_signed(static_cast<i64>(rounded));
}

double decode(u64 r, const FixedPointConfig& cfg) {
  return std::ldexp(static_cast<double>(cfg.to_signed(r)), -cfg.frac_bits);
}

u64 add(u64 a, u64 b, const FixedPointConfig& cfg) {
  return (a + b) & cfg.mask();
}

u64 sub(u64 a, u64 b, const FixedPointConfig& cfg) {
  return (a - b) & cfg.mask();
}

u64 mul(u64 a, u64 b, const FixedPointConfig& cfg) {
  // u64 multiplication wraps mod 2^64; masking reduces to mod 2^l since
  // 2^l divides 2^64.
  return (a * b) & cfg.mask();
}

u64 truncate(u64 r, const FixedPointConfig& cfg) {
  return cfg.from_signed(cfg.to_signed(r) >> cfg.frac_bits);
}

u64 wrap_correct(u64 r, const FixedPointConfig& cfg) {
  const int reduced_bits = cfg.total_bits - cfg.frac_bits;
  const u64 reduced_mask =
      reduced_bits == 64 ? ~u64{0} : (u64{1} << reduced_bits) - 1;
  u64 low = r & reduced_mask;
  if (low & (u64{1} << (reduced_bits - 1))) {
    low |= cfg.mask() & ~reduced_mask;  // sign-extend back into l bits
  }
  return low;
}

RingVector encode_vec(std::span<const double> xs, const FixedPointConfig& cfg) {
  RingVector out{cfg, {}};
  out.elems.reserve(xs.size());
  for (double x : xs) out.elems.push_back(encode(x, cfg));
  return out;
}

std::vector<double> decode_vec(const RingVector& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (u64 r : v.elems) out.push_back(decode(r, v.cfg));
  return out;
}

RingVector add(const RingVector& a, const RingVector& b) {
  check_same_layout(a, b);
  RingVector out{a.cfg, {}};
  out.elems.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.elems.push_back(add(a.elems[i], b.elems[i], a.cfg));
  }
  return out;
}

RingVector sub(const RingVector& a, const RingVector& b) {
  check_same_layout(a, b);
  RingVector out{a.cfg, {}};
  out.elems.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.elems.push_back(sub(a.elems[i], b.elems[i], a.cfg));
  }
  return out;
}

RingVector scale(const RingVector& v, u64 c) {
  RingVector out{v.cfg, {}};
  out.elems.reserve(v.size());
  for (u64 r : v.elems) out.elems.push_back(mul(r, c, v.cfg));
  return out;
}

RingVector truncate(const RingVector& v) {
  RingVector out{v.cfg, {}};
  out.elems.reserve(v.size());
  for (u64 r : v.elems) out.elems.push_back(truncate(r, v.cfg));
  return out;
}

RingVector wrap_correct(const RingVector& v) {
  RingVector out{v.cfg, {}};
  out.elems.reserve(v.size());
  for (u64 r : v.elems) out.elems.push_back(wrap_correct(r, v.cfg));
  return out;
}

}  // namespace scotch::ring
