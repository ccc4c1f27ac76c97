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

#ifndef DNMF_NNLS_HPP_
#define DNMF_NNLS_HPP_

#include <cstddef>
#include <span>

#include "dnmf/error.hpp"
#include "dnmf/matrix.hpp"

namespace dnmf {

// Row-wise nonnegative least squares in Gram form. Row m of the solution
// minimizes 0.5 * b G b^T - b r_m^T subject to b >= 0, where r_m is row m of
// `rhs`. For a factor update B := argmin ||X - B C||, G = C C^T and
// rhs = X C^T.
struct GramSystem {
  Matrix gram;  // K x K, symmetric PSD
  Matrix rhs;   // M x K
};

struct NnlsOptions {
  double kkt_tol = 1e-8;
  // Block principal pivoting gives up after iter_cap_per_dim * K exchanges
  // or stall_cycles_per_dim * K exchanges that do not shrink the infeasible
  // set, then hands the row to projected gradient.
  std::size_t iter_cap_per_dim = 100;
  std::size_t stall_cycles_per_dim = 3;
  std::size_t gradient_iter_cap = 200000;
};

// Thrown when a row cannot be brought within the KKT tolerance. Carries the
// full solution matrix with the best iterate found for every row.
class NnlsError : public Error {
 public:
  NnlsError(const std::string& what, Matrix best, std::size_t row)
      : Error(what), best_(std::move(best)), row_(row) {}
  const Matrix& best_iterate() const { return best_; }
  std::size_t failed_row() const { return row_; }

 private:
  Matrix best_;
  std::size_t row_;
};

// Solves every row of `sys` by block principal pivoting. Coordinates whose
// Gram diagonal is zero are dropped from the solve and returned as 0.
Matrix nnls_rows(const GramSystem& sys, const NnlsOptions& opts = {});

// Exact reference: enumerates all 2^K passive sets per row and keeps the
// feasible face minimizer with the lowest objective. Refuses K > 12.
Matrix nnls_oracle(const GramSystem& sys);

inline constexpr std::size_t kNnlsOracleMaxDim = 12;

// 0.5 * b G b^T - b r^T for one row.
double nnls_row_objective(const Matrix& gram, std::span<const double> b,
                          std::span<const double> r);
// Sum of row objectives.
double nnls_objective(const GramSystem& sys, const Matrix& solution);

struct KktResidual {
  double negativity = 0.0;       // max(-b_k)
  double dual_infeasible = 0.0;  // max(-g_k), g = b G - r
  double complementarity = 0.0;  // max |b . g| over rows
  double worst() const;
};

KktResidual nnls_kkt_residual(const GramSystem& sys, const Matrix& solution);

// Throws DimensionError on shape errors and Error when G is not symmetric.
void validate_gram_system(const GramSystem& sys);

}  // namespace dnmf

#endif  // DNMF_NNLS_HPP_
