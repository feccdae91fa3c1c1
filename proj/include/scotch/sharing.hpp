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

#include <vector>

#include "scotch/ring.hpp"
#include "scotch/rng.hpp"

namespace scotch::sharing {

// One party's additive share of a secret vector, tagged so misrouted shares
// are detectable.
struct ShareVector {
  int party_index;  // in [1, n]
  int round;        // >= 1
  ring::RingVector payload;
};

// n-out-of-n additive sharing: shares 1..n-1 are uniform draws from the rng
// (independent of the secret), share n = secret - sum of the others. Any n-1
// shares therefore carry no information about the secret.
std::vector<ShareVector> split_secret_shares(const ring::RingVector& secret,
                                             int n, RandomSource& rng,
                                             int round = 1);

// Elementwise sum mod 2^l. Requires exactly one share per party index 1..n,
// all of equal length and config.
ring::RingVector reconstruct(const std::vector<ShareVector>& shares);

// n vectors summing to zero mod 2^l; vectors 1..n-1 are uniform.
std::vector<ring::RingVector> zero_sharing(int n, std::size_t len,
                                           const ring::FixedPointConfig& cfg,
                                           RandomSource& rng);

// Adds a fresh zero-sharing; reconstruction is unchanged.
std::vector<ShareVector> rerandomize(const std::vector<ShareVector>& shares,
                                     RandomSource& rng);

}  // namespace scotch::sharing
