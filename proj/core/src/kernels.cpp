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

#include "dnmf/kernels.hpp"

#include <string>

#include "dnmf/error.hpp"

namespace dnmf {

namespace {

void check_shapes(const Matrix& x, const Matrix& b, const Matrix& c) {
  if (b.rows() != x.rows() || c.cols() != x.cols() || b.cols() != c.rows()) {
    throw DimensionError("factor shapes B " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ", C " + std::to_string(c.rows()) + "x" +
                         std::to_string(c.cols()) + " do not fit X " +
                         std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

std::vector<double> column_sq_norms(const Matrix& b) {
  std::vector<double> out(b.cols());
  for (std::size_t i = 0; i < b.cols(); ++i) out[i] = squared_norm(b.col(i));
  return out;
}

}  // namespace

FactorState make_factor_state(const Matrix& x, Matrix b, Matrix c) {
  check_shapes(x, b, c);
  FactorState s{std::move(b), std::move(c), Matrix(x.rows(), x.cols()), 0};
  resync_residual(x, s);
  return s;
}

void resync_residual(const Matrix& x, FactorState& s) {
  check_shapes(x, s.b, s.c);
  if (s.e.rows() != x.rows() || s.e.cols() != x.cols()) s.e = Matrix(x.rows(), x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) column_residual(x.col(j), s.b, s.c.col(j), s.e.col(j));
}

double objective(const FactorState& s) { return 0.5 * frob_norm_sq(s.e); }

double objective(const Matrix& x, const Matrix& b, const Matrix& c) {
  check_shapes(x, b, c);
  std::vector<double> e(x.rows());
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    column_residual(x.col(j), b, c.col(j), e);
    total += squared_norm(e);
  }
  return 0.5 * total;
}

void column_residual(std::span<const double> x, const Matrix& b, std::span<const double> c,
                     std::span<double> e) {
  // Accumulates B c_j in the same order as matmul, so X = BC gives E = 0.
  std::fill(e.begin(), e.end(), 0.0);
  for (std::size_t k = 0; k < b.cols(); ++k) axpy(c[k], b.col(k), e);
  for (std::size_t r = 0; r < e.size(); ++r) e[r] = x[r] - e[r];
}

bool bcd_update_c_element(std::span<const double> b_i, double b_i_sq, double& c_ij,
                          std::span<double> e_j) {
  if (b_i_sq < kDegenerateNormSq) return false;
  axpy(c_ij, b_i, e_j);
  const double v = dot(b_i, e_j) / b_i_sq;
  c_ij = v > 0.0 ? v : 0.0;
  axpy(-c_ij, b_i, e_j);
  return true;
}

std::size_t bcd_update_c_column(std::span<const double> x_j, const Matrix& b,
                                std::span<const double> b_sq, std::span<double> c_j,
                                std::span<double> e_j) {
  column_residual(x_j, b, c_j, e_j);
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < b.cols(); ++i)
    if (!bcd_update_c_element(b.col(i), b_sq[i], c_j[i], e_j)) ++skipped;
  return skipped;
}

std::size_t bcd_c_phase(const Matrix& x, const Matrix& b, Matrix& c, Matrix& e) {
  const auto b_sq = column_sq_norms(b);
  std::size_t skipped = 0;
  for (std::size_t j = 0; j < x.cols(); ++j)
    skipped += bcd_update_c_column(x.col(j), b, b_sq, c.col(j), e.col(j));
  return skipped;
}

void bcd_b_column_gather(const Matrix& b, const Matrix& c, Matrix& e, std::size_t i,
                         std::span<double> y, double& z) {
  std::fill(y.begin(), y.end(), 0.0);
  z = 0.0;
  const auto b_i = b.col(i);
  for (std::size_t j = 0; j < c.cols(); ++j) {
    const double cij = c(i, j);
    auto e_j = e.col(j);
    axpy(cij, b_i, e_j);
    axpy(cij, e_j, y);
    z += cij * cij;
  }
}

bool bcd_b_column_finish(Matrix& b, const Matrix& c, Matrix& e, std::size_t i,
                         std::span<const double> y, double z) {
  const bool update = z >= kDegenerateNormSq;
  auto b_i = b.col(i);
  if (update) {
    for (std::size_t m = 0; m < b_i.size(); ++m) {
      const double v = y[m] / z;
      b_i[m] = v > 0.0 ? v : 0.0;
    }
  }
  for (std::size_t j = 0; j < c.cols(); ++j) axpy(-c(i, j), b_i, e.col(j));
  return update;
}

bool bcd_update_b_column(FactorState& s, std::size_t i) {
  std::vector<double> y(s.b.rows());
  double z = 0.0;
  bcd_b_column_gather(s.b, s.c, s.e, i, y, z);
  const bool updated = bcd_b_column_finish(s.b, s.c, s.e, i, y, z);
  if (!updated) ++s.degenerate_events;
  return updated;
}

void bcd_iterate(const Matrix& x, FactorState& s) {
  check_shapes(x, s.b, s.c);
  s.degenerate_events += bcd_c_phase(x, s.b, s.c, s.e);
  for (std::size_t i = 0; i < s.b.cols(); ++i) bcd_update_b_column(s, i);
}

void hals_iterate(const Matrix& x, FactorState& s) {
  resync_residual(x, s);
  const std::size_t m = s.b.rows();
  const std::size_t n = s.c.cols();
  std::vector<double> ec(m);
  std::vector<double> delta(m);
  for (std::size_t k = 0; k < s.b.cols(); ++k) {
    auto b_k = s.b.col(k);

    double cc = 0.0;
    for (std::size_t j = 0; j < n; ++j) cc += s.c(k, j) * s.c(k, j);
    if (cc >= kDegenerateNormSq) {
      std::fill(ec.begin(), ec.end(), 0.0);
      for (std::size_t j = 0; j < n; ++j) axpy(s.c(k, j), s.e.col(j), ec);
      for (std::size_t r = 0; r < m; ++r) {
        const double v = b_k[r] + ec[r] / cc;
        const double nb = v > 0.0 ? v : 0.0;
        delta[r] = nb - b_k[r];
        b_k[r] = nb;
      }
      for (std::size_t j = 0; j < n; ++j) axpy(-s.c(k, j), delta, s.e.col(j));
    } else {
      ++s.degenerate_events;
    }

    const double bb = squared_norm(b_k);
    if (bb >= kDegenerateNormSq) {
      for (std::size_t j = 0; j < n; ++j) {
        auto e_j = s.e.col(j);
        const double old = s.c(k, j);
        const double v = old + dot(b_k, e_j) / bb;
        const double nc = v > 0.0 ? v : 0.0;
        s.c(k, j) = nc;
        axpy(old - nc, b_k, e_j);
      }
    } else {
      ++s.degenerate_events;
    }
  }
}

void anls_iterate(const Matrix& x, FactorState& s, const NnlsOptions& opts) {
  check_shapes(x, s.b, s.c);
  const Matrix ct = nnls_rows(GramSystem{matmul_tn(s.b, s.b), matmul_tn(x, s.b)}, opts);
  s.c = ct.transposed();
  s.b = nnls_rows(GramSystem{matmul_nt(s.c, s.c), matmul_nt(x, s.c)}, opts);
  resync_residual(x, s);
}

AdmmAuxState make_admm_aux(const FactorState& s, double rho) {
  if (!(rho > 0.0)) throw ConfigError("ADMM penalty rho must be positive");
  return AdmmAuxState{s.b, s.c, Matrix(s.b.rows(), s.b.cols()),
                      Matrix(s.c.rows(), s.c.cols()), rho};
}

void admm_step_w(const Matrix& x, const FactorState& s, AdmmAuxState& a) {
  // W := (X H^T + Phi + rho B)(H H^T + rho I)^{-1}
  Matrix gram = matmul_nt(a.h, a.h);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += a.rho;
  Matrix rhs = matmul_nt(x, a.h);
  rhs += a.phi;
  rhs += s.b * a.rho;
  a.w = Cholesky(gram).solve(rhs.transposed()).transposed();
}

void admm_step_h(const Matrix& x, const FactorState& s, AdmmAuxState& a) {
  // H := (W^T W + rho I)^{-1} (W^T X + Psi + rho C)
  Matrix gram = matmul_tn(a.w, a.w);
  for (std::size_t i = 0; i < gram.rows(); ++i) gram(i, i) += a.rho;
  Matrix rhs = matmul_tn(a.w, x);
  rhs += a.psi;
  rhs += s.c * a.rho;
  a.h = Cholesky(gram).solve(std::move(rhs));
}

void admm_step_b(FactorState& s, const AdmmAuxState& a) {
  s.b = project_nonneg(a.w - a.phi * (1.0 / a.rho));
}

void admm_step_c(FactorState& s, const AdmmAuxState& a) {
  s.c = project_nonneg(a.h - a.psi * (1.0 / a.rho));
}

void admm_step_phi(const FactorState& s, AdmmAuxState& a) { a.phi += (s.b - a.w) * a.rho; }

void admm_step_psi(const FactorState& s, AdmmAuxState& a) { a.psi += (s.c - a.h) * a.rho; }

void admm_iterate(const Matrix& x, FactorState& s, AdmmAuxState& a) {
  check_shapes(x, s.b, s.c);
  if (!(a.rho > 0.0)) throw ConfigError("ADMM penalty rho must be positive");
  admm_step_w(x, s, a);
  admm_step_h(x, s, a);
  admm_step_b(s, a);
  admm_step_c(s, a);
  admm_step_phi(s, a);
  admm_step_psi(s, a);
  resync_residual(x, s);
}

}  // namespace dnmf
