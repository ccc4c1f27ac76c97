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

// nmf: command-line front end.
//
//   nmf run --alg did --m 5 --n 100000 --k 3 --p 4 --eps 1e-6 --seed 42 \
//           --transport in-process --out metrics.csv
//   nmf synth --m 5 --n 1000 --seed 7 --out x.dmat
//   nmf convert in.csv out.dmat
//
// With --transport tcp and no NMF_RANK in the environment, `run` launches P
// copies of itself on localhost, one per rank. With NMF_RANK set, the process
// joins the rendezvous at NMF_ADDR as that rank.

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnmf/data.hpp"
#include "dnmf/error.hpp"
#include "dnmf/matrix_io.hpp"
#include "dnmf/run.hpp"
#include "dnmf/tcp_transport.hpp"

namespace {

using dnmf::RunConfig;

std::uint16_t pick_free_port(const std::string& host) {
  dnmf::TcpListener probe(host, 0);
  return probe.port();
}

// Re-executes this binary once per rank with the rendezvous variables set.
int launch_tcp_ranks(const RunConfig& cfg, char** argv) {
  const std::uint16_t port = pick_free_port(cfg.tcp.host);
  const std::string addr = cfg.tcp.host + ":" + std::to_string(port);
  std::vector<pid_t> children;
  for (std::size_t r = 0; r < cfg.p; ++r) {
    const pid_t pid = fork();
    if (pid < 0) {
      std::perror("fork");
      return 1;
    }
    if (pid == 0) {
      setenv("NMF_ADDR", addr.c_str(), 1);
      setenv("NMF_RANK", std::to_string(r).c_str(), 1);
      setenv("NMF_WORLD", std::to_string(cfg.p).c_str(), 1);
      execv("/proc/self/exe", argv);
      std::perror("execv");
      _exit(127);
    }
    children.push_back(pid);
  }
  int status_out = 0;
  for (std::size_t r = 0; r < children.size(); ++r) {
    int status = 0;
    waitpid(children[r], &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      std::cerr << "nmf: rank " << r << " failed\n";
      status_out = 1;
    }
  }
  return status_out;
}

void print_summary(const RunConfig& cfg, const dnmf::RunMetrics& m) {
  const double obj = m.rows.empty() ? 0.5 * m.initial_residual_sq : m.rows.back().objective;
  std::printf("alg=%s P=%zu iterations=%zu converged=%s objective=%.12g time=%.3fs\n",
              std::string(dnmf::to_string(cfg.algorithm)).c_str(), cfg.p, m.iterations,
              m.converged ? "yes" : "no", obj, m.total_time);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed nonnegative matrix factorization"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string alg = "did";
  std::string transport = "in-process";
  std::string init = "scaled-random";
  std::string out;
  std::string input;
  double timeout_s = 30.0;

  auto* run_cmd = app.add_subcommand("run", "Factorize X and write per-iteration metrics");
  run_cmd->add_option("--alg", alg, "hals|bcd|anls|admm|dadmm|dbcd|did")->capture_default_str();
  run_cmd->add_option("--m", cfg.m, "Rows of X")->capture_default_str();
  run_cmd->add_option("--n", cfg.n, "Columns of X")->capture_default_str();
  run_cmd->add_option("--k", cfg.k, "Factorization rank")->capture_default_str();
  run_cmd->add_option("--p", cfg.p, "World size")->capture_default_str();
  run_cmd->add_option("--eps", cfg.epsilon, "Stopping tolerance")->capture_default_str();
  run_cmd->add_option("--seed", cfg.seed, "PRNG seed")->capture_default_str();
  run_cmd->add_option("--transport", transport, "in-process|tcp")->capture_default_str();
  run_cmd->add_option("--out", out, "Metrics CSV path");
  run_cmd->add_option("--rho", cfg.rho, "ADMM penalty")->capture_default_str();
  run_cmd->add_option("--max-iters", cfg.max_iters, "Iteration cap")->capture_default_str();
  run_cmd->add_option("--max-time", cfg.max_time_s, "Wall-time cap in seconds")
      ->capture_default_str();
  run_cmd->add_option("--init", init, "scaled-random|kmeans")->capture_default_str();
  run_cmd->add_option("--rank", cfg.synth_rank, "Synthesize X with this exact rank (0: uniform)")
      ->capture_default_str();
  run_cmd->add_option("--input", input, "Load X from a DMAT1 or CSV file");
  run_cmd->add_option("--timeout", timeout_s, "TCP receive timeout in seconds")
      ->capture_default_str();

  std::size_t sm = 5, sn = 1000, srank = 0;
  std::uint64_t sseed = 42;
  std::string sout;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic matrix");
  synth_cmd->add_option("--m", sm, "Rows")->capture_default_str();
  synth_cmd->add_option("--n", sn, "Columns")->capture_default_str();
  synth_cmd->add_option("--seed", sseed, "PRNG seed")->capture_default_str();
  synth_cmd->add_option("--rank", srank, "Exact rank (0: uniform)")->capture_default_str();
  synth_cmd->add_option("--out", sout, "Output path (.csv or DMAT1)")->required();

  std::string cin_path, cout_path;
  auto* convert_cmd = app.add_subcommand("convert", "Convert between CSV and DMAT1");
  convert_cmd->add_option("input", cin_path, "Input file")->required();
  convert_cmd->add_option("output", cout_path, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      const dnmf::Matrix x =
          srank > 0 ? dnmf::synth_low_rank(sm, sn, srank, sseed) : dnmf::synth_data(sm, sn, sseed);
      dnmf::save_matrix(x, sout);
      return 0;
    }
    if (*convert_cmd) {
      dnmf::save_matrix(dnmf::load_matrix(cin_path), cout_path);
      return 0;
    }

    cfg.algorithm = dnmf::parse_algorithm(alg);
    cfg.transport = dnmf::parse_transport(transport);
    cfg.init = dnmf::parse_init_method(init);
    if (!input.empty()) cfg.input = input;
    if (!out.empty()) cfg.metrics_out = out;
    cfg.tcp.world = cfg.p;
    cfg.tcp.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));

    if (cfg.transport == dnmf::TransportKind::kTcp) {
      if (std::getenv("NMF_RANK") == nullptr) {
        if (!cfg.input) dnmf::validate(cfg);
        return launch_tcp_ranks(cfg, argv);
      }
      cfg.tcp = dnmf::tcp_options_from_env(cfg.tcp);
    }
    const dnmf::RunMetrics metrics = dnmf::run(cfg);
    if (cfg.transport != dnmf::TransportKind::kTcp || cfg.tcp.rank == 0) {
      print_summary(cfg, metrics);
    }
    return 0;
  } catch (const dnmf::ConfigError& e) {
    std::cerr << "nmf: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "nmf: " << e.what() << '\n';
    return 1;
  }
}
