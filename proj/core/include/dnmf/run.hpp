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

#ifndef DNMF_RUN_HPP_
#define DNMF_RUN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "dnmf/comm.hpp"
#include "dnmf/data.hpp"
#include "dnmf/matrix.hpp"
#include "dnmf/tcp_transport.hpp"

namespace dnmf {

enum class Algorithm { kHals, kBcd, kAnls, kAdmm, kDadmm, kDbcd, kDid };
enum class TransportKind { kInProcess, kTcp };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);
bool is_distributed(Algorithm a);
TransportKind parse_transport(std::string_view name);
std::string_view to_string(TransportKind t);

struct RunConfig {
  Algorithm algorithm = Algorithm::kDid;
  std::size_t m = 5;
  std::size_t n = 1000;
  std::size_t k = 3;
  std::size_t p = 1;
  double epsilon = 1e-6;
  std::size_t max_iters = 1000;
  double max_time_s = 600.0;
  double rho = 1.0;
  std::uint64_t seed = 42;
  TransportKind transport = TransportKind::kInProcess;
  InitMethod init = InitMethod::kScaledRandom;
  // 0: X uniform [0, 1). r > 0: X = B* C* of exact rank r.
  std::size_t synth_rank = 0;
  // When set, X is loaded from this DMAT1/CSV file and m, n are taken from it.
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> metrics_out;
  TcpOptions tcp;
};

// Throws ConfigError on an invalid configuration (K > min(M, N), P < 1,
// epsilon <= 0, P > N, P != 1 for a sequential algorithm, ...).
void validate(const RunConfig& cfg);

struct IterationRecord {
  std::size_t iter = 0;
  double objective = 0.0;  // 0.5 * residual_sq
  double residual_sq = 0.0;
  std::uint64_t allreduce_calls = 0;  // algorithmic collectives this iteration
  std::uint64_t bytes = 0;            // their modeled volume
  double compute_s = 0.0;
  double comm_s = 0.0;
  double b_norm = 0.0;  // ||B||_F after the iteration, not written to CSV
};

struct RunMetrics {
  std::vector<IterationRecord> rows;
  std::size_t iterations = 0;
  double total_time = 0.0;
  bool converged = false;
  double initial_residual_sq = 0.0;
  std::size_t degenerate_events = 0;
  CommStats comm;  // rank-local totals (zero for sequential runs)
  Matrix b;        // final basis
};

// ||E^t||^2 <= epsilon * ||E^0||^2; a zero initial residual counts as
// converged.
bool stopping_check(double e_t_sq, double e_0_sq, double epsilon);

// Data and shared initial point, identical for every algorithm and world
// size with the same config.
struct Problem {
  Matrix x;
  Factors init;
};
Problem make_problem(const RunConfig& cfg);

// Runs one rank of a distributed algorithm on an existing world. All ranks
// return the same metrics apart from timings and comm totals.
RunMetrics run_rank(CommWorld& world, const Problem& problem, const RunConfig& cfg);

// Sequential algorithms run directly; distributed ones use P in-process
// ranks, or for TCP this process joins as rank cfg.tcp.rank. Writes the
// metrics CSV when cfg.metrics_out is set (rank 0 only).
RunMetrics run(const RunConfig& cfg);
RunMetrics run(const RunConfig& cfg, const Problem& problem);

inline constexpr std::string_view kMetricsHeader =
    "iter,objective,residual_sq,allreduce_calls,bytes,compute_s,comm_s";

void write_metrics_csv(const RunMetrics& metrics, std::ostream& os);
void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path);

}  // namespace dnmf

#endif  // DNMF_RUN_HPP_
