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

#ifndef DNMF_MATRIX_HPP_
#define DNMF_MATRIX_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace dnmf {

// Dense real matrix stored column-major. Column j occupies
// data()[j * rows(), (j + 1) * rows()).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  // Row-major nested list, e.g. Matrix::from_rows({{1, 2}, {3, 4}}).
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Copy of columns [start, start + count).
  Matrix col_range(std::size_t start, std::size_t count) const;
  void set_col_range(std::size_t start, const Matrix& block);

  Matrix transposed() const;
  bool all_finite() const;
  void fill(double v);

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);

// Sum of squared entries.
double frob_norm_sq(const Matrix& a);
double frob_norm(const Matrix& a);

// Dense product. Every output entry accumulates over the inner index in
// ascending order, so results are reproducible bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose; same accumulation order.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * b^T, accumulating over the shared column index in ascending order.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Entrywise max(0, a). Negative zero maps to +0.
Matrix project_nonneg(Matrix a);
void project_nonneg_inplace(std::span<double> v);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Largest |a_ij - b_ij|.
double max_abs_diff(const Matrix& a, const Matrix& b);
// ||a - b||_F / max(||b||_F, tiny).
double rel_frob_diff(const Matrix& a, const Matrix& b);

struct ColumnRange {
  std::size_t start = 0;
  std::size_t len = 0;
  friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

// Splits [0, n) into p contiguous ranges whose sizes differ by at most one;
// the first n % p ranges get the extra column. Throws if p == 0, n == 0 or
// p > n.
std::vector<ColumnRange> partition_columns(std::size_t n, std::size_t p);

// A worker's slice of X and C.
struct ColumnBlock {
  std::size_t owner_rank = 0;
  std::size_t global_start = 0;
  Matrix x_block;  // M x N_i
  Matrix c_block;  // K x N_i

  std::size_t local_cols() const { return x_block.cols(); }
};

ColumnBlock make_column_block(const Matrix& x, const Matrix& c, std::size_t rank,
                              const ColumnRange& range);

// Symmetric positive definite solves via Cholesky. Throws Error if the matrix
// is not numerically SPD.
class Cholesky {
 public:
  Cholesky() = default;
  explicit Cholesky(const Matrix& spd);

  // Returns false instead of throwing when a pivot is non-positive.
  static bool try_factor(const Matrix& spd, Cholesky& out);

  std::size_t dim() const { return lower_.rows(); }
  // Solves A x = b in place.
  void solve_inplace(std::span<double> b) const;
  // Solves A X = B column by column.
  Matrix solve(Matrix b) const;

 private:
  bool factor(const Matrix& spd);
  Matrix lower_;
};

}  // namespace dnmf

#endif  // DNMF_MATRIX_HPP_
