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

#include <benchmark/benchmark.h>

#include <cstddef>

#include "dnmf/comm.hpp"
#include "dnmf/data.hpp"
#include "dnmf/distributed.hpp"
#include "dnmf/kernels.hpp"
#include "dnmf/matrix.hpp"
#include "dnmf/nnls.hpp"

namespace dnmf {
namespace {

constexpr std::size_t kM = 5;
constexpr std::size_t kK = 3;

FactorState make_state(const Matrix& x) {
  Factors f = init_factors(x, kK, 7, InitMethod::kScaledRandom);
  return make_factor_state(x, std::move(f.b), std::move(f.c));
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const Matrix b = synth_data(kM, kK, 1);
  const Matrix c = synth_data(kK, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(b, c));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Matmul)->Arg(1000)->Arg(100000);

void BM_NnlsRows(benchmark::State& state) {
  const std::size_t k = state.range(0);
  const Matrix a = synth_data(k, 4 * k, 3);
  const Matrix rhs = synth_data(1000, 4 * k, 4);
  const GramSystem sys{matmul_nt(a, a), matmul_nt(rhs, a)};
  for (auto _ : state) benchmark::DoNotOptimize(nnls_rows(sys));
  state.SetItemsProcessed(state.iterations() * rhs.rows());
}
BENCHMARK(BM_NnlsRows)->Arg(3)->Arg(8)->Arg(16);

template <void (*Iterate)(const Matrix&, FactorState&)>
void BM_Sequential(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const Matrix x = synth_data(kM, n, 5);
  FactorState s = make_state(x);
  for (auto _ : state) Iterate(x, s);
  state.SetItemsProcessed(state.iterations() * n);
}
void anls_default(const Matrix& x, FactorState& s) { anls_iterate(x, s); }
BENCHMARK(BM_Sequential<bcd_iterate>)->Name("BM_BcdIterate")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Sequential<hals_iterate>)->Name("BM_HalsIterate")->Arg(10000)->Arg(100000);
BENCHMARK(BM_Sequential<anls_default>)->Name("BM_AnlsIterate")->Arg(10000)->Arg(100000);

template <class Worker>
void BM_Distributed(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const std::size_t p = state.range(1);
  const Matrix x = synth_data(kM, n, 6);
  const Factors f = init_factors(x, kK, 7, InitMethod::kScaledRandom);
  const auto ranges = partition_columns(n, p);
  for (auto _ : state) {
    run_in_process(p, [&](CommWorld& w) {
      Worker worker(make_column_block(x, f.c, w.rank(), ranges[w.rank()]));
      Matrix b = f.b;
      worker.resync(b);
      for (int t = 0; t < 5; ++t) worker.iterate(w, b);
    });
  }
  state.SetItemsProcessed(state.iterations() * 5 * n);
}
BENCHMARK(BM_Distributed<DidWorker>)
    ->Name("BM_DidFiveIterations")
    ->Args({100000, 1})
    ->Args({100000, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distributed<DbcdWorker>)
    ->Name("BM_DbcdFiveIterations")
    ->Args({100000, 1})
    ->Args({100000, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

void BM_Allreduce(benchmark::State& state) {
  const std::size_t p = state.range(0);
  const std::size_t rounds = 200;
  for (auto _ : state) {
    run_in_process(p, [&](CommWorld& w) {
      Matrix wm(kM, kK, 1.0), v(kK, kK, 1.0);
      for (std::size_t r = 0; r < rounds; ++r) w.allreduce_sum({&wm, &v});
    });
  }
  state.SetItemsProcessed(state.iterations() * rounds);
}
BENCHMARK(BM_Allreduce)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace dnmf

BENCHMARK_MAIN();
