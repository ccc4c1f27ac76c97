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

// Single-node NMF solvers for min 0.5 ||X - BC||_F^2, B, C >= 0.
//
// The block coordinate descent primitives here (column residual, C-column
// sweep, B-column gather/finish) are the exact code paths the distributed
// workers run on their column blocks, which is what makes a one-rank DBCD
// run bit-identical to bcd_iterate.

#ifndef DNMF_KERNELS_HPP_
#define DNMF_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "dnmf/matrix.hpp"
#include "dnmf/nnls.hpp"

namespace dnmf {

// Squared norms below this are treated as zero: the coordinate update that
// would divide by them is skipped and counted as a degenerate event.
inline constexpr double kDegenerateNormSq = 1e-12;

struct FactorState {
  Matrix b;  // M x K
  Matrix c;  // K x N
  Matrix e;  // M x N, X - BC
  std::size_t degenerate_events = 0;
};

// Builds a state with E = X - BC. Throws DimensionError on shape mismatch.
FactorState make_factor_state(const Matrix& x, Matrix b, Matrix c);
// Recomputes E = X - BC column by column.
void resync_residual(const Matrix& x, FactorState& s);
// 0.5 ||E||_F^2 from the maintained residual.
double objective(const FactorState& s);
// 0.5 ||X - BC||_F^2 recomputed from scratch.
double objective(const Matrix& x, const Matrix& b, const Matrix& c);

// e = x - B c, accumulating over k in ascending order.
void column_residual(std::span<const double> x, const Matrix& b, std::span<const double> c,
                     std::span<double> e);

// One coordinate step on c_ij with the residual e_j kept current:
//   e_j += b_i c_ij;  c_ij := [b_i^T e_j / b_i^T b_i]_+;  e_j -= b_i c_ij.
// Returns false (and leaves everything untouched) when b_i_sq is degenerate.
bool bcd_update_c_element(std::span<const double> b_i, double b_i_sq, double& c_ij,
                          std::span<double> e_j);

// Recomputes e_j = x_j - B c_j, then updates c_1j..c_Kj in order. `b_sq`
// holds ||b_i||^2. Returns the number of skipped coordinates.
std::size_t bcd_update_c_column(std::span<const double> x_j, const Matrix& b,
                                std::span<const double> b_sq, std::span<double> c_j,
                                std::span<double> e_j);

// C-phase over every column of a block. Returns skipped coordinates.
std::size_t bcd_c_phase(const Matrix& x, const Matrix& b, Matrix& c, Matrix& e);

// First half of a B-column update over a set of columns: e_j += b_i c_ij,
// then y = sum_j e_j c_ij and z = sum_j c_ij^2 (ascending j). `y` must have
// M entries.
void bcd_b_column_gather(const Matrix& b, const Matrix& c, Matrix& e, std::size_t i,
                         std::span<double> y, double& z);
// Second half: b_i := [y / z]_+ unless z is degenerate, then e_j -= b_i c_ij.
// Every caller holding the same (y, z) takes the same branch. Returns false if
// the column was skipped.
bool bcd_b_column_finish(Matrix& b, const Matrix& c, Matrix& e, std::size_t i,
                         std::span<const double> y, double z);

// b_i := [b_i + E c_i^T / c_i c_i^T]_+ in the gather/finish form, with E
// maintained. Returns false if skipped.
bool bcd_update_b_column(FactorState& s, std::size_t i);

// Full C sweep (columns ascending, coordinates ascending) then B sweep
// (columns ascending).
void bcd_iterate(const Matrix& x, FactorState& s);

// For k = 1..K: b_k := [b_k + E c_k^T / ||c_k||^2]_+ then
// c_k := [c_k + b_k^T E / ||b_k||^2]_+, with E kept current.
void hals_iterate(const Matrix& x, FactorState& s);

// C := argmin_{C>=0} ||X - BC||, then B := argmin_{B>=0} ||X - BC||, each by
// nnls_rows in Gram form.
void anls_iterate(const Matrix& x, FactorState& s, const NnlsOptions& opts = {});

// Auxiliaries and multipliers of the splitting B = W, C = H.
struct AdmmAuxState {
  Matrix w;    // M x K
  Matrix h;    // K x N
  Matrix phi;  // M x K
  Matrix psi;  // K x N
  double rho = 1.0;
};

// W = B, H = C, zero multipliers. Throws ConfigError if rho <= 0.
AdmmAuxState make_admm_aux(const FactorState& s, double rho);

// Individual steps, in the order admm_iterate applies them.
void admm_step_w(const Matrix& x, const FactorState& s, AdmmAuxState& a);
void admm_step_h(const Matrix& x, const FactorState& s, AdmmAuxState& a);
void admm_step_b(FactorState& s, const AdmmAuxState& a);
void admm_step_c(FactorState& s, const AdmmAuxState& a);
void admm_step_phi(const FactorState& s, AdmmAuxState& a);
void admm_step_psi(const FactorState& s, AdmmAuxState& a);

// All six steps, then E is recomputed from the new B and C.
void admm_iterate(const Matrix& x, FactorState& s, AdmmAuxState& a);

}  // namespace dnmf

#endif  // DNMF_KERNELS_HPP_
