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

#include "dnmf/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dnmf/error.hpp"
#include "dnmf/rng.hpp"

namespace dnmf {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, const CounterRng& rng, double scale) {
  Matrix out(rows, cols);
  auto v = out.values();
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = scale * rng.uniform(t);
  return out;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Factors kmeans_init(const Matrix& x, std::size_t k, std::uint64_t seed) {
  const std::size_t m = x.rows();
  const std::size_t n = x.cols();
  const CounterRng rng(seed, rng_stream::kKmeans);

  // k-means++ seeding: first centre uniform, then each next centre drawn with
  // probability proportional to the squared distance to the nearest centre.
  Matrix centroids(m, k);
  std::uint64_t draw = 0;
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = std::min(n - 1, static_cast<std::size_t>(rng.uniform(draw++) *
                                                              static_cast<double>(n)));
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = x.col(pick);
    std::copy(src.begin(), src.end(), centroids.col(c).begin());
    if (c + 1 == k) break;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      nearest[j] = std::min(nearest[j], sq_dist(x.col(j), centroids.col(c)));
      total += nearest[j];
    }
    if (total <= 0.0) {
      // Every point coincides with a centre; fall back to the next column.
      pick = (pick + 1) % n;
      continue;
    }
    const double target = rng.uniform(draw++) * total;
    double acc = 0.0;
    pick = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (nearest[j] <= 0.0) continue;
      acc += nearest[j];
      pick = j;
      if (acc > target) break;
    }
  }

  std::vector<std::size_t> assign(n, k);
  std::vector<double> dist(n);
  std::vector<std::size_t> counts(k);
  constexpr int kMaxLloydIters = 100;
  for (int it = 0; it < kMaxLloydIters; ++it) {
    bool changed = false;
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(x.col(j), centroids.col(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist[j] = best_d;
      if (assign[j] != best) {
        assign[j] = best;
        changed = true;
      }
    }

    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t j = 0; j < n; ++j) ++counts[assign[j]];
    // Empty cluster: take the farthest point from a cluster that can spare it.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (counts[assign[j]] < 2) continue;
        if (far == n || dist[j] > dist[far]) far = j;
      }
      if (far == n) break;
      --counts[assign[far]];
      assign[far] = c;
      dist[far] = 0.0;
      ++counts[c];
      changed = true;
    }

    centroids.fill(0.0);
    for (std::size_t j = 0; j < n; ++j) axpy(1.0, x.col(j), centroids.col(assign[j]));
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (double& v : centroids.col(c)) v *= inv;
    }
    if (!changed) break;
  }

  Matrix c(k, n, 0.1);
  for (std::size_t j = 0; j < n; ++j) c(assign[j], j) += 1.0;
  return Factors{project_nonneg(std::move(centroids)), std::move(c)};
}

}  // namespace

Matrix synth_data(std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m == 0 || n == 0) throw ConfigError("synth_data: dimensions must be >= 1");
  return uniform_matrix(m, n, CounterRng(seed, rng_stream::kData), 1.0);
}

Matrix synth_low_rank(std::size_t m, std::size_t n, std::size_t rank, std::uint64_t seed) {
  if (m == 0 || n == 0 || rank == 0) throw ConfigError("synth_low_rank: dimensions must be >= 1");
  const Matrix b = uniform_matrix(m, rank, CounterRng(seed, rng_stream::kTruthB), 1.0);
  const Matrix c = uniform_matrix(rank, n, CounterRng(seed, rng_stream::kTruthC), 1.0);
  return matmul(b, c);
}

InitMethod parse_init_method(std::string_view name) {
  if (name == "scaled-random") return InitMethod::kScaledRandom;
  if (name == "kmeans") return InitMethod::kKmeans;
  throw ConfigError("unknown init method '" + std::string(name) + "'");
}

std::string_view to_string(InitMethod m) {
  return m == InitMethod::kKmeans ? "kmeans" : "scaled-random";
}

Factors init_factors(const Matrix& x, std::size_t k, std::uint64_t seed, InitMethod method) {
  if (k == 0 || k > std::min(x.rows(), x.cols())) {
    throw ConfigError("init_factors: K = " + std::to_string(k) + " must be in [1, min(M, N) = " +
                      std::to_string(std::min(x.rows(), x.cols())) + "]");
  }
  if (method == InitMethod::kKmeans) return kmeans_init(x, k, seed);

  double sum = 0.0;
  for (double v : x.values()) sum += v;
  const double mean = sum / static_cast<double>(x.size());
  const double s = std::sqrt(std::max(mean, 0.0) / static_cast<double>(k));
  return Factors{uniform_matrix(x.rows(), k, CounterRng(seed, rng_stream::kInitB), s),
                 uniform_matrix(k, x.cols(), CounterRng(seed, rng_stream::kInitC), s)};
}

}  // namespace dnmf
