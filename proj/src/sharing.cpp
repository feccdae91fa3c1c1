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

#include "scotch/sharing.hpp"

#include <algorithm>
#include <string>

namespace scotch::sharing {

using ring::RingVector;
using ring::u64;

std::vector<ShareVector> split_secret_shares(const RingVector& secret, int n,
                                             RandomSource& rng, int round) {
  if (n < 1) {
    throw InvalidPartyCount("party count must be >= 1, got " +
                            std::to_string(n));
  }
  if (secret.elems.empty()) {
    throw LengthMismatch("cannot share an empty secret");
  }
  const u64 mask = secret.cfg.mask();
  std::vector<ShareVector> shares;
  shares.reserve(n);

  RingVector running{secret.cfg, std::vector<u64>(secret.size(), 0)};
  for (int j = 1; j < n; ++j) {
    RingVector payload{secret.cfg, {}};
    payload.elems.reserve(secret.size());
    for (std::size_t i = 0; i < secret.size(); ++i) {
      const u64 r = rng.next_u64() & mask;
      payload.elems.push_back(r);
      running.elems[i] = (running.elems[i] + r) & mask;
    }
    shares.push_back(ShareVector{j, round, std::move(payload)});
  }

  RingVector last{secret.cfg, {}};
  last.elems.reserve(secret.size());
  for (std::size_t i = 0; i < secret.size(); ++i) {
    last.elems.push_back((secret.elems[i] - running.elems[i]) & mask);
  }
  shares.push_back(ShareVector{n, round, std::move(last)});
  return shares;
}

RingVector reconstruct(const std::vector<ShareVector>& shares) {
  if (shares.empty()) {
    throw MissingShare("reconstruct: no shares supplied");
  }
  const int n = static_cast<int>(shares.size());
  const auto& ref = shares.front().payload;

  std::vector<bool> seen(static_cast<std::size_t>(n) + 1, false);
  for (const auto& s : shares) {
    if (!(s.payload.cfg == ref.cfg)) {
      throw ConfigMismatch("reconstruct: shares disagree on config");
    }
    if (s.payload.size() != ref.size()) {
      throw LengthMismatch("reconstruct: shares disagree on length");
    }
    if (s.party_index < 1 || s.party_index > n) {
      throw MissingShare("reconstruct: party index " +
                         std::to_string(s.party_index) +
                         " outside [1, " + std::to_string(n) + "]");
    }
    if (seen[s.party_index]) {
      throw DuplicateParty("reconstruct: two shares from party " +
                           std::to_string(s.party_index));
    }
    seen[s.party_index] = true;
  }

  const u64 mask = ref.cfg.mask();
  RingVector out{ref.cfg, std::vector<u64>(ref.size(), 0)};
  for (const auto& s : shares) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      out.elems[i] = (out.elems[i] + s.payload.elems[i]) & mask;
    }
  }
  return out;
}

std::vector<RingVector> zero_sharing(int n, std::size_t len,
                                     const ring::FixedPointConfig& cfg,
                                     RandomSource& rng) {
  if (n < 1) {
    throw InvalidPartyCount("party count must be >= 1, got " +
                            std::to_string(n));
  }
  const u64 mask = cfg.mask();
  std::vector<RingVector> out;
  out.reserve(n);
  std::vector<u64> running(len, 0);
  for (int j = 1; j < n; ++j) {
    RingVector z{cfg, {}};
    z.elems.reserve(len);
    for (std::size_t i = 0; i < len; ++i) {
      const u64 r = rng.next_u64() & mask;
      z.elems.push_back(r);
      running[i] = (running[i] + r) & mask;
    }
    out.push_back(std::move(z));
  }
  RingVector last{cfg, {}};
  last.elems.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    last.elems.push_back((0 - running[i]) & mask);
  }
  out.push_back(std::move(last));
  return out;
}

std::vector<ShareVector> rerandomize(const std::vector<ShareVector>& shares,
                                     RandomSource& rng) {
  reconstruct(shares);  // validates the share group
  const auto& ref = shares.front().payload;
  const auto zeros =
      zero_sharing(static_cast<int>(shares.size()), ref.size(), ref.cfg, rng);

  std::vector<ShareVector> out;
  out.reserve(shares.size());
  for (const auto& s : shares) {
    out.push_back(ShareVector{
        s.party_index, s.round,
        ring::add(s.payload, zeros[static_cast<std::size_t>(s.party_index) - 1])});
  }
  return out;
}

}  // namespace scotch::sharing
