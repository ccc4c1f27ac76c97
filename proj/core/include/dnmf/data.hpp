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

#ifndef DNMF_DATA_HPP_
#define DNMF_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "dnmf/matrix.hpp"

namespace dnmf {

// M x N matrix with i.i.d. uniform [0, 1) entries; entry (i, j) is
// CounterRng(seed, kData).uniform(j * M + i).
Matrix synth_data(std::size_t m, std::size_t n, std::uint64_t seed);

// X = B* C* with B* (M x rank) and C* (rank x N) uniform [0, 1), so X has an
// exact nonnegative factorization of the given rank.
Matrix synth_low_rank(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed);

enum class InitMethod { kScaledRandom, kKmeans };

InitMethod parse_init_method(std::string_view name);
std::string_view to_string(InitMethod m);

struct Factors {
  Matrix b;  // M x K
  Matrix c;  // K x N
};

// scaled-random: B, C uniform [0, 1) times s = sqrt(mean(X) / K).
// kmeans: k-means++ seeding, then Lloyd's algorithm on the columns of X; B holds the centroids and
// C the one-hot assignments plus 0.1. An empty cluster is re-seeded with the
// point farthest from its centroid.
// Throws ConfigError unless 1 <= K <= min(M, N).
Factors init_factors(const Matrix& x, std::size_t k, std::uint64_t seed, InitMethod method);

}  // namespace dnmf

#endif  // DNMF_DATA_HPP_
