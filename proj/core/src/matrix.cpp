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

#include "dnmf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dnmf/error.hpp"

namespace dnmf {

namespace {

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.begin()->size();
  Matrix out(m, n);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != n) throw DimensionError("Matrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::col_range(std::size_t start, std::size_t count) const {
  if (start + count > cols_) {
    throw DimensionError("col_range: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") exceeds " +
                         std::to_string(cols_) + " columns");
  }
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(start * rows_);
  return Matrix(rows_, count,
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * rows_)));
}

void Matrix::set_col_range(std::size_t start, const Matrix& block) {
  if (block.rows() != rows_ || start + block.cols() > cols_) {
    throw DimensionError("set_col_range: block " + shape_str(block) +
                         " does not fit at column " + std::to_string(start) + " of " +
                         shape_str(*this));
  }
  std::copy(block.data_.begin(), block.data_.end(),
            data_.begin() + static_cast<std::ptrdiff_t>(start * rows_));
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

double frob_norm_sq(const Matrix& a) { return squared_norm(a.values()); }

double frob_norm(const Matrix& a) { return std::sqrt(frob_norm_sq(a)); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ (" + shape_str(a) + " * " +
                         shape_str(b) + ")");
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto oj = out.col(j);
    for (std::size_t p = 0; p < a.cols(); ++p) axpy(b(p, j), a.col(p), oj);
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: row counts differ (" + shape_str(a) + "^T * " +
                         shape_str(b) + ")");
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) out(i, j) = dot(a.col(i), b.col(j));
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: column counts differ (" + shape_str(a) + " * " +
                         shape_str(b) + "^T)");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t p = 0; p < a.cols(); ++p) {
    const auto ap = a.col(p);
    for (std::size_t j = 0; j < b.rows(); ++j) axpy(b(j, p), ap, out.col(j));
  }
  return out;
}

Matrix project_nonneg(Matrix a) {
  project_nonneg_inplace(a.values());
  return a;
}

void project_nonneg_inplace(std::span<double> v) {
  // `x > 0 ? x : 0.0` sends -0.0 and NaN-free negatives to +0.0.
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

double rel_frob_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "rel_frob_diff");
  double num = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a.data()[k] - b.data()[k];
    num += d * d;
  }
  const double den = std::max(frob_norm(b), std::numeric_limits<double>::min());
  return std::sqrt(num) / den;
}

std::vector<ColumnRange> partition_columns(std::size_t n, std::size_t p) {
  if (p == 0) throw ConfigError("partition_columns: world size must be >= 1");
  if (n == 0) throw ConfigError("partition_columns: no columns to partition");
  if (p > n) {
    throw ConfigError("partition_columns: " + std::to_string(p) + " workers for " +
                      std::to_string(n) + " columns leaves a worker without columns");
  }
  std::vector<ColumnRange> out;
  out.reserve(p);
  const std::size_t base = n / p;
  const std::size_t extra = n % p;
  std::size_t start = 0;
  for (std::size_t r = 0; r < p; ++r) {
    const std::size_t len = base + (r < extra ? 1 : 0);
    out.push_back({start, len});
    start += len;
  }
  return out;
}

ColumnBlock make_column_block(const Matrix& x, const Matrix& c, std::size_t rank,
                              const ColumnRange& range) {
  if (x.cols() != c.cols()) {
    throw DimensionError("make_column_block: X has " + std::to_string(x.cols()) +
                         " columns but C has " + std::to_string(c.cols()));
  }
  return ColumnBlock{rank, range.start, x.col_range(range.start, range.len),
                     c.col_range(range.start, range.len)};
}

Cholesky::Cholesky(const Matrix& spd) {
  if (!factor(spd)) throw Error("Cholesky: matrix is not positive definite");
}

bool Cholesky::try_factor(const Matrix& spd, Cholesky& out) { return out.factor(spd); }

bool Cholesky::factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("Cholesky: matrix is not square");
  const std::size_t n = a.rows();
  lower_ = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= lower_(j, k) * lower_(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = s / ljj;
    }
  }
  return true;
}

void Cholesky::solve_inplace(std::span<double> b) const {
  const std::size_t n = dim();
  if (b.size() != n) throw DimensionError("Cholesky::solve: rhs length mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * b[k];
    b[i] = s / lower_(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * b[k];
    b[ii] = s / lower_(ii, ii);
  }
}

Matrix Cholesky::solve(Matrix b) const {
  for (std::size_t j = 0; j < b.cols(); ++j) solve_inplace(b.col(j));
  return b;
}

}  // namespace dnmf
