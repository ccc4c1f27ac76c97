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

#include "dnmf/run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

#include "dnmf/distributed.hpp"
#include "dnmf/error.hpp"
#include "dnmf/kernels.hpp"
#include "dnmf/matrix_io.hpp"

namespace dnmf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

RunMetrics run_sequential(const RunConfig& cfg, const Problem& problem) {
  const Matrix& x = problem.x;
  FactorState state = make_factor_state(x, problem.init.b, problem.init.c);
  std::optional<AdmmAuxState> aux;
  if (cfg.algorithm == Algorithm::kAdmm) aux = make_admm_aux(state, cfg.rho);

  RunMetrics out;
  out.initial_residual_sq = frob_norm_sq(state.e);
  const auto start = Clock::now();
  if (stopping_check(out.initial_residual_sq, out.initial_residual_sq, cfg.epsilon)) {
    out.converged = true;
  }
  for (std::size_t t = 1; !out.converged && t <= cfg.max_iters; ++t) {
    const auto it_start = Clock::now();
    switch (cfg.algorithm) {
      case Algorithm::kHals: hals_iterate(x, state); break;
      case Algorithm::kBcd: bcd_iterate(x, state); break;
      case Algorithm::kAnls: anls_iterate(x, state); break;
      case Algorithm::kAdmm: admm_iterate(x, state, *aux); break;
      default: throw ConfigError("not a sequential algorithm");
    }
    IterationRecord rec;
    rec.iter = t;
    rec.residual_sq = frob_norm_sq(state.e);
    rec.objective = 0.5 * rec.residual_sq;
    rec.b_norm = frob_norm(state.b);
    rec.compute_s = seconds_since(it_start);
    out.rows.push_back(rec);
    out.iterations = t;
    out.converged = stopping_check(rec.residual_sq, out.initial_residual_sq, cfg.epsilon);
    if (seconds_since(start) > cfg.max_time_s) break;
  }
  out.total_time = seconds_since(start);
  out.degenerate_events = state.degenerate_events;
  out.b = std::move(state.b);
  return out;
}

std::unique_ptr<DistributedWorker> make_worker(const RunConfig& cfg, ColumnBlock block) {
  switch (cfg.algorithm) {
    case Algorithm::kDbcd: return std::make_unique<DbcdWorker>(std::move(block));
    case Algorithm::kDid: return std::make_unique<DidWorker>(std::move(block));
    case Algorithm::kDadmm: return std::make_unique<DadmmWorker>(std::move(block), cfg.rho);
    default: throw ConfigError("not a distributed algorithm");
  }
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "hals") return Algorithm::kHals;
  if (name == "bcd") return Algorithm::kBcd;
  if (name == "anls") return Algorithm::kAnls;
  if (name == "admm") return Algorithm::kAdmm;
  if (name == "dadmm") return Algorithm::kDadmm;
  if (name == "dbcd") return Algorithm::kDbcd;
  if (name == "did") return Algorithm::kDid;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kHals: return "hals";
    case Algorithm::kBcd: return "bcd";
    case Algorithm::kAnls: return "anls";
    case Algorithm::kAdmm: return "admm";
    case Algorithm::kDadmm: return "dadmm";
    case Algorithm::kDbcd: return "dbcd";
    case Algorithm::kDid: return "did";
  }
  return "?";
}

bool is_distributed(Algorithm a) {
  return a == Algorithm::kDadmm || a == Algorithm::kDbcd || a == Algorithm::kDid;
}

TransportKind parse_transport(std::string_view name) {
  if (name == "in-process") return TransportKind::kInProcess;
  if (name == "tcp") return TransportKind::kTcp;
  throw ConfigError("unknown transport '" + std::string(name) + "'");
}

std::string_view to_string(TransportKind t) {
  return t == TransportKind::kTcp ? "tcp" : "in-process";
}

void validate(const RunConfig& cfg) {
  if (cfg.m == 0 || cfg.n == 0) throw ConfigError("M and N must be >= 1");
  if (cfg.k == 0 || cfg.k > std::min(cfg.m, cfg.n)) {
    throw ConfigError("K = " + std::to_string(cfg.k) + " must be in [1, min(M, N)]");
  }
  if (cfg.p == 0) throw ConfigError("P must be >= 1");
  if (cfg.p > cfg.n) throw ConfigError("P exceeds the number of columns");
  if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(cfg.rho > 0.0)) throw ConfigError("rho must be positive");
  if (!(cfg.max_time_s > 0.0)) throw ConfigError("time limit must be positive");
  if (!is_distributed(cfg.algorithm) && cfg.p != 1) {
    throw ConfigError(std::string(to_string(cfg.algorithm)) + " is sequential; use P = 1");
  }
  if (cfg.transport == TransportKind::kTcp && cfg.tcp.world != cfg.p) {
    throw ConfigError("TCP world size " + std::to_string(cfg.tcp.world) + " differs from P = " +
                      std::to_string(cfg.p));
  }
}

bool stopping_check(double e_t_sq, double e_0_sq, double epsilon) {
  if (e_0_sq <= 0.0) return true;
  return e_t_sq <= epsilon * e_0_sq;
}

Problem make_problem(const RunConfig& cfg) {
  Matrix x;
  if (cfg.input) {
    x = load_matrix(*cfg.input);
  } else if (cfg.synth_rank > 0) {
    x = synth_low_rank(cfg.m, cfg.n, cfg.synth_rank, cfg.seed);
  } else {
    x = synth_data(cfg.m, cfg.n, cfg.seed);
  }
  Factors init = init_factors(x, cfg.k, cfg.seed, cfg.init);
  return Problem{std::move(x), std::move(init)};
}

RunMetrics run_rank(CommWorld& world, const Problem& problem, const RunConfig& cfg) {
  const auto ranges = partition_columns(problem.x.cols(), world.size());
  auto worker = make_worker(cfg, make_column_block(problem.x, problem.init.c, world.rank(),
                                                   ranges[world.rank()]));
  Matrix b = problem.init.b;
  worker->resync(b);

  RunMetrics out;
  out.initial_residual_sq =
      world.allreduce_sum(worker->local_residual_sq(), Traffic::kInstrumentation);
  const auto start = Clock::now();
  if (stopping_check(out.initial_residual_sq, out.initial_residual_sq, cfg.epsilon)) {
    out.converged = true;
  }
  for (std::size_t t = 1; !out.converged && t <= cfg.max_iters; ++t) {
    const auto it_start = Clock::now();
    const CommStats before = world.stats();
    worker->iterate(world, b);

    // Residual and the time-limit vote travel in one instrumentation
    // collective so every rank stops on the same iteration.
    Matrix probe(2, 1);
    probe(0, 0) = worker->local_residual_sq();
    probe(1, 0) = (world.rank() == 0 && seconds_since(start) > cfg.max_time_s) ? 1.0 : 0.0;
    world.allreduce_sum({&probe}, Traffic::kInstrumentation);

    const CommStats& after = world.stats();
    IterationRecord rec;
    rec.iter = t;
    rec.residual_sq = probe(0, 0);
    rec.objective = 0.5 * rec.residual_sq;
    rec.b_norm = frob_norm(b);
    rec.allreduce_calls = after.allreduce_calls - before.allreduce_calls;
    rec.bytes = after.bytes_sent - before.bytes_sent;
    rec.comm_s = after.comm_wall_time - before.comm_wall_time;
    rec.compute_s = std::max(0.0, seconds_since(it_start) - rec.comm_s);
    world.add_compute_time(rec.compute_s);
    out.rows.push_back(rec);
    out.iterations = t;
    out.converged = stopping_check(rec.residual_sq, out.initial_residual_sq, cfg.epsilon);
    if (probe(1, 0) > 0.0) break;
  }
  out.total_time = seconds_since(start);
  out.degenerate_events = worker->degenerate_events();
  out.comm = world.stats();
  out.b = std::move(b);
  return out;
}

RunMetrics run(const RunConfig& cfg) { return run(cfg, make_problem(cfg)); }

RunMetrics run(const RunConfig& cfg, const Problem& problem) {
  RunConfig checked = cfg;
  checked.m = problem.x.rows();
  checked.n = problem.x.cols();
  validate(checked);

  RunMetrics metrics;
  bool is_rank0 = true;
  if (!is_distributed(cfg.algorithm)) {
    metrics = run_sequential(cfg, problem);
  } else if (cfg.transport == TransportKind::kInProcess) {
    std::mutex mu;
    run_in_process(cfg.p, [&](CommWorld& world) {
      RunMetrics local = run_rank(world, problem, cfg);
      if (world.rank() == 0) {
        std::lock_guard<std::mutex> lock(mu);
        metrics = std::move(local);
      }
    });
  } else {
    CommWorld world(connect_tcp(cfg.tcp));
    is_rank0 = world.rank() == 0;
    metrics = run_rank(world, problem, cfg);
  }
  if (cfg.metrics_out && is_rank0) write_metrics_csv(metrics, *cfg.metrics_out);
  return metrics;
}

void write_metrics_csv(const RunMetrics& metrics, std::ostream& os) {
  os << kMetricsHeader << '\n';
  char buf[256];
  for (const auto& r : metrics.rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%llu,%llu,%.9f,%.9f\n", r.iter, r.objective,
                  r.residual_sq, static_cast<unsigned long long>(r.allreduce_calls),
                  static_cast<unsigned long long>(r.bytes), r.compute_s, r.comm_s);
    os << buf;
  }
  if (!os) throw IoError("metrics CSV: write failed");
}

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_metrics_csv(metrics, os);
}

}  // namespace dnmf
