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
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include "scotch/rng.hpp"

namespace scotch::test {

// Emits a fixed word sequence; for tests that pin the exact rng stream.
class ScriptedRng final : public RandomSource {
 public:
  ScriptedRng(std::initializer_list<std::uint64_t> words) : words_(words) {}

  std::uint64_t next_u64() override {
    if (pos_ >= words_.size()) {
      throw std::out_of_range("scripted rng exhausted");
    }
    return words_[pos_++];
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t pos_ = 0;
};

}  // namespace scotch::test
