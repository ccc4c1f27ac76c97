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

// Worker-side iterations for column-partitioned NMF. Each rank owns one
// ColumnBlock (X_i, C_i) and a full replica of B. All ranks must call the
// same iterate the same number of times; B stays bit-identical across ranks
// because every B update is computed from allreduced (identical) data.
//
//   DBCD   C-phase locally, then one allreduce of (y, z) per column of B:
//          K collectives per iteration.
//   DID    C-phase locally, one allreduce of the message (W, V), then the
//          whole B sweep locally through the delta-b recurrence:
//          1 collective per iteration.
//   DADMM  Dual, auxiliary and C_i updates locally, one allreduce of
//          (C_i C_i^T, (U_i + Y_i) C_i^T), then B by NNLS: 1 collective.

#ifndef DNMF_DISTRIBUTED_HPP_
#define DNMF_DISTRIBUTED_HPP_

#include <cstddef>
#include <memory>

#include "dnmf/comm.hpp"
#include "dnmf/matrix.hpp"
#include "dnmf/nnls.hpp"

namespace dnmf {

// Per-block message reduced by DID. w(:, i) = sum_j e_j c_ij; v is lower
// triangular with v(i, k) = sum_j c_ij c_kj for i >= k.
struct DidMessage {
  Matrix w;  // M x K
  Matrix v;  // K x K
};

struct DidBUpdate {
  Matrix delta;            // M x K, column i = b_i^{new} - b_i^{old}
  std::size_t skipped = 0;  // columns with v_ii below the degenerate threshold
};

// ---- DBCD -----------------------------------------------------------------

// B-phase: for i = 1..K, gather (y, z) locally, allreduce, b_i := [y/z]_+,
// restore e_j. Returns skipped columns.
std::size_t dbcd_b_phase(CommWorld& world, Matrix& b, const Matrix& c, Matrix& e);

// One DBCD iteration on this rank's block; `e` is the block's residual and
// is current on return. Returns skipped coordinates.
std::size_t dbcd_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b, Matrix& e);

// ---- DID ------------------------------------------------------------------

// e_j := x_j - B c_j, then the coordinate sweep over c_j. Same code path as
// the DBCD C-phase. Returns skipped coordinates.
std::size_t did_c_phase(ColumnBlock& block, const Matrix& b, Matrix& e);

DidMessage did_build_message(const ColumnBlock& block, const Matrix& e);

// For i = 1..K in order:
//   b_i' := [b_i + w_i / v_ii - sum_{k<i} (v_ik / v_ii) delta_k]_+
//   delta_i := b_i' - b_i
// with w, v the reduced message. Columns with v_ii < kDegenerateNormSq are
// left unchanged with delta_i = 0.
DidBUpdate did_update_b(Matrix& b, const Matrix& w, const Matrix& v);

// e_j -= sum_i delta_i c_ij for every local column.
void did_apply_delta(const Matrix& delta, const Matrix& c, Matrix& e);

// One DID iteration. `e` is current with respect to the new B on return.
std::size_t did_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b, Matrix& e);

// ---- DADMM ----------------------------------------------------------------

struct DadmmWorkerState {
  Matrix u;  // M x N_i scaled dual
  Matrix y;  // M x N_i auxiliary
  double rho = 1.0;
};

// U_i = 0, Y_i = X_i. Throws ConfigError if rho <= 0.
DadmmWorkerState make_dadmm_state(const ColumnBlock& block, double rho);

// U_i += Y_i - B C_i; Y_i := (X_i - rho U_i + rho B C_i) / (1 + rho);
// C_i := NNLS(B^T B, B^T (U_i + Y_i)); (W, H) := allreduce(C_i C_i^T,
// (U_i + Y_i) C_i^T); B := NNLS(W, H). `e` is X_i - B C_i on return.
void dadmm_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b,
                          DadmmWorkerState& st, Matrix& e, const NnlsOptions& opts = {});

// ---- Worker objects used by the run loop -----------------------------------

class DistributedWorker {
 public:
  explicit DistributedWorker(ColumnBlock block);
  virtual ~DistributedWorker() = default;

  virtual void iterate(CommWorld& world, Matrix& b) = 0;

  const ColumnBlock& block() const { return block_; }
  const Matrix& residual() const { return e_; }
  // ||X_i - B C_i||_F^2 from the maintained residual.
  double local_residual_sq() const;
  std::size_t degenerate_events() const { return degenerate_events_; }
  // Recomputes the residual against `b` (used once before the first iterate).
  void resync(const Matrix& b);

 protected:
  ColumnBlock block_;
  Matrix e_;
  std::size_t degenerate_events_ = 0;
};

class DbcdWorker : public DistributedWorker {
 public:
  using DistributedWorker::DistributedWorker;
  void iterate(CommWorld& world, Matrix& b) override;
};

class DidWorker : public DistributedWorker {
 public:
  using DistributedWorker::DistributedWorker;
  void iterate(CommWorld& world, Matrix& b) override;
};

class DadmmWorker : public DistributedWorker {
 public:
  DadmmWorker(ColumnBlock block, double rho, NnlsOptions opts = {});
  void iterate(CommWorld& world, Matrix& b) override;
  const DadmmWorkerState& state() const { return st_; }

 private:
  DadmmWorkerState st_;
  NnlsOptions opts_;
};

}  // namespace dnmf

#endif  // DNMF_DISTRIBUTED_HPP_
