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

#include "dnmf/distributed.hpp"

#include <string>

#include "dnmf/kernels.hpp"

namespace dnmf {

std::size_t dbcd_b_phase(CommWorld& world, Matrix& b, const Matrix& c, Matrix& e) {
  std::size_t skipped = 0;
  Matrix y(b.rows(), 1);
  Matrix z(1, 1);
  for (std::size_t i = 0; i < b.cols(); ++i) {
    bcd_b_column_gather(b, c, e, i, y.col(0), z(0, 0));
    world.allreduce_sum({&y, &z});
    if (!bcd_b_column_finish(b, c, e, i, y.col(0), z(0, 0))) ++skipped;
  }
  return skipped;
}

std::size_t dbcd_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b, Matrix& e) {
  std::size_t skipped = bcd_c_phase(block.x_block, b, block.c_block, e);
  skipped += dbcd_b_phase(world, b, block.c_block, e);
  return skipped;
}

std::size_t did_c_phase(ColumnBlock& block, const Matrix& b, Matrix& e) {
  return bcd_c_phase(block.x_block, b, block.c_block, e);
}

DidMessage did_build_message(const ColumnBlock& block, const Matrix& e) {
  const Matrix& c = block.c_block;
  const std::size_t k = c.rows();
  DidMessage msg{Matrix(e.rows(), k), Matrix(k, k)};
  for (std::size_t j = 0; j < c.cols(); ++j) {
    const auto e_j = e.col(j);
    const auto c_j = c.col(j);
    for (std::size_t i = 0; i < k; ++i) {
      axpy(c_j[i], e_j, msg.w.col(i));
      for (std::size_t l = 0; l <= i; ++l) msg.v(i, l) += c_j[i] * c_j[l];
    }
  }
  return msg;
}

DidBUpdate did_update_b(Matrix& b, const Matrix& w, const Matrix& v) {
  const std::size_t m = b.rows();
  const std::size_t k = b.cols();
  if (w.rows() != m || w.cols() != k || v.rows() != k || v.cols() != k) {
    throw DimensionError("did_update_b: message shapes do not match B");
  }
  DidBUpdate out{Matrix(m, k), 0};
  for (std::size_t i = 0; i < k; ++i) {
    const double vii = v(i, i);
    if (vii < kDegenerateNormSq) {
      ++out.skipped;
      continue;
    }
    auto b_i = b.col(i);
    auto d_i = out.delta.col(i);
    for (std::size_t r = 0; r < m; ++r) {
      double val = b_i[r] + w(r, i) / vii;
      for (std::size_t l = 0; l < i; ++l) val -= (v(i, l) / vii) * out.delta(r, l);
      const double nb = val > 0.0 ? val : 0.0;
      d_i[r] = nb - b_i[r];
      b_i[r] = nb;
    }
  }
  return out;
}

void did_apply_delta(const Matrix& delta, const Matrix& c, Matrix& e) {
  for (std::size_t j = 0; j < c.cols(); ++j) {
    auto e_j = e.col(j);
    for (std::size_t i = 0; i < c.rows(); ++i) axpy(-c(i, j), delta.col(i), e_j);
  }
}

std::size_t did_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b, Matrix& e) {
  std::size_t skipped = did_c_phase(block, b, e);
  DidMessage msg = did_build_message(block, e);
  world.allreduce_sum({&msg.w, &msg.v});
  const DidBUpdate upd = did_update_b(b, msg.w, msg.v);
  did_apply_delta(upd.delta, block.c_block, e);
  return skipped + upd.skipped;
}

DadmmWorkerState make_dadmm_state(const ColumnBlock& block, double rho) {
  if (!(rho > 0.0)) throw ConfigError("DADMM penalty rho must be positive");
  return DadmmWorkerState{Matrix(block.x_block.rows(), block.x_block.cols()), block.x_block, rho};
}

void dadmm_worker_iterate(CommWorld& world, ColumnBlock& block, Matrix& b,
                          DadmmWorkerState& st, Matrix& e, const NnlsOptions& opts) {
  const Matrix& x = block.x_block;
  const double rho = st.rho;
  if (!(rho > 0.0)) throw ConfigError("DADMM penalty rho must be positive");

  Matrix bc = matmul(b, block.c_block);
  st.u += st.y;
  st.u -= bc;
  // Y_i := (X_i - rho U_i + rho B C_i) / (1 + rho)
  const double inv = 1.0 / (1.0 + rho);
  for (std::size_t t = 0; t < st.y.size(); ++t) {
    st.y.data()[t] = (x.data()[t] - rho * st.u.data()[t] + rho * bc.data()[t]) * inv;
  }

  const Matrix target = st.u + st.y;
  block.c_block = nnls_rows(GramSystem{matmul_tn(b, b), matmul_tn(target, b)}, opts).transposed();

  Matrix gram = matmul_nt(block.c_block, block.c_block);
  Matrix rhs = matmul_nt(target, block.c_block);
  world.allreduce_sum({&gram, &rhs});
  b = nnls_rows(GramSystem{std::move(gram), std::move(rhs)}, opts);

  if (e.rows() != x.rows() || e.cols() != x.cols()) e = Matrix(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) column_residual(x.col(j), b, block.c_block.col(j), e.col(j));
}

DistributedWorker::DistributedWorker(ColumnBlock block)
    : block_(std::move(block)), e_(block_.x_block.rows(), block_.x_block.cols()) {
  if (block_.c_block.cols() != block_.x_block.cols()) {
    throw DimensionError("worker block: X_i has " + std::to_string(block_.x_block.cols()) +
                         " columns but C_i has " + std::to_string(block_.c_block.cols()));
  }
}

double DistributedWorker::local_residual_sq() const { return frob_norm_sq(e_); }

void DistributedWorker::resync(const Matrix& b) {
  for (std::size_t j = 0; j < e_.cols(); ++j)
    column_residual(block_.x_block.col(j), b, block_.c_block.col(j), e_.col(j));
}

void DbcdWorker::iterate(CommWorld& world, Matrix& b) {
  degenerate_events_ += dbcd_worker_iterate(world, block_, b, e_);
}

void DidWorker::iterate(CommWorld& world, Matrix& b) {
  degenerate_events_ += did_worker_iterate(world, block_, b, e_);
}

DadmmWorker::DadmmWorker(ColumnBlock block, double rho, NnlsOptions opts)
    : DistributedWorker(std::move(block)), st_(make_dadmm_state(block_, rho)), opts_(opts) {}

void DadmmWorker::iterate(CommWorld& world, Matrix& b) {
  dadmm_worker_iterate(world, block_, b, st_, e_, opts_);
}

}  // namespace dnmf
