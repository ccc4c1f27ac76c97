// Copyright 2026 The dnmf Authors. All rights reserved.
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

#ifndef DNMF_RNG_HPP_
#define DNMF_RNG_HPP_

#include <cstdint>

namespace dnmf {

// Counter-based generator built on the SplitMix64 finalizer ("splitmix64-ctr").
//
//   key        = mix(seed ^ mix(stream * 0x9e3779b97f4a7c15 + 0x632be59bd9b4e019))
//   bits(i)    = mix(key + (i + 1) * 0x9e3779b97f4a7c15)
//   uniform(i) = (bits(i) >> 11) * 2^-53                      in [0, 1)
//
// where mix is the SplitMix64 output function. Entry i of any stream can be
// produced directly, so a worker can draw exactly its own slice and any
// language with 64-bit unsigned arithmetic reproduces the values bit for bit.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream * kGolden + 0x632be59bd9b4e019ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t index) const {
    return mix(key_ + (index + 1) * kGolden);
  }

  constexpr double uniform(std::uint64_t index) const {
    return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

// Stream ids used by the data and initialization routines.
namespace rng_stream {
inline constexpr std::uint64_t kData = 0;
inline constexpr std::uint64_t kTruthB = 1;
inline constexpr std::uint64_t kTruthC = 2;
inline constexpr std::uint64_t kInitB = 3;
inline constexpr std::uint64_t kInitC = 4;
inline constexpr std::uint64_t kKmeans = 5;
}  // namespace rng_stream

}  // namespace dnmf

#endif  // DNMF_RNG_HPP_
