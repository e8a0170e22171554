// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_RNG_HPP_
#define SRINIT_RNG_HPP_

#include <cstdint>
#include <random>

namespace srinit {

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the independent random stream identified by (seed, key). Every
// random draw in the library goes through a stream keyed this way, so results
// do not depend on the order in which streams are consumed.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t key) {
  return splitmix64(splitmix64(seed) ^ key);
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t key) {
  return std::mt19937_64(stream_seed(seed, key));
}

// Domain tags mixed into the seed so that streams used for different purposes
// never coincide.
inline constexpr std::uint64_t kBuildDomain = 0x6275696C64000000ULL;    // "build"
inline constexpr std::uint64_t kShuffleDomain = 0x7368756666000000ULL;  // "shuff"
inline constexpr std::uint64_t kDataDomain = 0x6461746100000000ULL;     // "data"

}  // namespace srinit

#endif  // SRINIT_RNG_HPP_
