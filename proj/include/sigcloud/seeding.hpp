// Copyright 2026 The sigcloud Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace sigcloud {

// FNV-1a; std::hash is not stable across standard libraries.
constexpr std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Engine seeded from a tuple of 64-bit keys, so derived streams do not depend
// on generation order.
inline std::mt19937_64 derived_engine(std::initializer_list<std::uint64_t> keys) {
  std::seed_seq::result_type words[16] = {};
  std::size_t n = 0;
  for (std::uint64_t k : keys) {
    if (n + 2 > 16) break;
    words[n++] = static_cast<std::seed_seq::result_type>(k & 0xffffffffULL);
    words[n++] = static_cast<std::seed_seq::result_type>(k >> 32);
  }
  std::seed_seq seq(words, words + n);
  return std::mt19937_64(seq);
}

}  // namespace sigcloud
