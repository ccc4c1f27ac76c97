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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "dnmf/error.hpp"
#include "support/oracles.hpp"

namespace dnmf {
namespace {

using testing::Gen;

TEST(MatrixTest, ColumnMajorLayout) {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  ASSERT_EQ(a.rows(), 2u);
  ASSERT_EQ(a.cols(), 3u);
  const double expect[] = {1, 4, 2, 5, 3, 6};
  for (int t = 0; t < 6; ++t) EXPECT_EQ(a.data()[t], expect[t]);
  EXPECT_EQ(a.col(1)[0], 2.0);
  EXPECT_EQ(a.col(1)[1], 5.0);
}

TEST(MatrixTest, RejectsWrongDataLength) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST(MatrixTest, FrobNormSqExamples) {
  EXPECT_EQ(frob_norm_sq(Matrix(2, 2)), 0.0);
  EXPECT_EQ(frob_norm_sq(Matrix::from_rows({{1, 2}, {3, 4}})), 30.0);
  EXPECT_EQ(frob_norm_sq(Matrix::identity(3)), 3.0);
}

TEST(MatrixTest, FrobNormSqTransposeInvariant) {
  Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = gen.matrix(gen.index(1, 9), gen.index(1, 9), -3.0, 3.0);
    const double lhs = frob_norm_sq(a);
    const double rhs = frob_norm_sq(a.transposed());
    EXPECT_LE(testing::rel_diff(lhs, rhs), 1e-14) << "trial " << trial;
  }
}

TEST(MatrixTest, MatmulExamples) {
  const Matrix i2 = Matrix::identity(2);
  const Matrix v = Matrix::from_rows({{2}, {3}});
  EXPECT_EQ(matmul(i2, v), v);
  EXPECT_EQ(matmul(Matrix::from_rows({{1, 1}}), Matrix::from_rows({{2}, {4}})),
            Matrix::from_rows({{6}}));
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), DimensionError);
}

TEST(MatrixTest, MatmulIdentityProperty) {
  Gen gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = gen.matrix(gen.index(1, 8), gen.index(1, 8), -5.0, 5.0);
    EXPECT_EQ(matmul(a, Matrix::identity(a.cols())), a);
    EXPECT_EQ(matmul(Matrix::identity(a.rows()), a), a);
  }
}

TEST(MatrixTest, ProductsMatchNaiveOracle) {
  Gen gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = gen.index(1, 7), k = gen.index(1, 7), n = gen.index(1, 7);
    const Matrix a = gen.matrix(m, k, -1.0, 1.0);
    const Matrix b = gen.matrix(k, n, -1.0, 1.0);
    const Matrix ref = testing::naive_matmul(a, b);
    EXPECT_LE(max_abs_diff(matmul(a, b), ref), 1e-14);
    EXPECT_LE(max_abs_diff(matmul_tn(a.transposed(), b), ref), 1e-14);
    EXPECT_LE(max_abs_diff(matmul_nt(a, b.transposed()), ref), 1e-14);
  }
}

TEST(MatrixTest, MatmulIsBitDeterministic) {
  Gen gen(14);
  const Matrix a = gen.matrix(17, 9, -1.0, 1.0);
  const Matrix b = gen.matrix(9, 23, -1.0, 1.0);
  const Matrix first = matmul(a, b);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix again = matmul(a, b);
    EXPECT_EQ(std::memcmp(first.data(), again.data(), first.size() * sizeof(double)), 0);
  }
}

TEST(MatrixTest, ProjectNonnegExamples) {
  EXPECT_EQ(project_nonneg(Matrix::from_rows({{-1, 2}})), Matrix::from_rows({{0, 2}}));
  const Matrix pos = Matrix::from_rows({{0, 1.5}, {3, 7}});
  EXPECT_EQ(project_nonneg(pos), pos);
  const Matrix neg_zero = project_nonneg(Matrix::from_rows({{-0.0}}));
  EXPECT_EQ(neg_zero(0, 0), 0.0);
  EXPECT_FALSE(std::signbit(neg_zero(0, 0)));
}

TEST(MatrixTest, ProjectNonnegProperty) {
  Gen gen(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = gen.matrix(gen.index(1, 6), gen.index(1, 6), -1.0, 1.0);
    const Matrix p = project_nonneg(a);
    for (std::size_t t = 0; t < a.size(); ++t) {
      EXPECT_EQ(p.values()[t], std::max(0.0, a.values()[t]));
      EXPECT_FALSE(std::signbit(p.values()[t]));
    }
  }
}

TEST(MatrixTest, PartitionExamples) {
  using R = ColumnRange;
  EXPECT_EQ(partition_columns(10, 2), (std::vector<R>{{0, 5}, {5, 5}}));
  EXPECT_EQ(partition_columns(10, 3), (std::vector<R>{{0, 4}, {4, 3}, {7, 3}}));
  EXPECT_EQ(partition_columns(3, 3), (std::vector<R>{{0, 1}, {1, 1}, {2, 1}}));
  EXPECT_THROW(partition_columns(2, 3), ConfigError);
  EXPECT_THROW(partition_columns(5, 0), ConfigError);
}

TEST(MatrixTest, PartitionCoversExactlyOnce) {
  Gen gen(16);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = gen.index(1, 200);
    const std::size_t p = gen.index(1, n);
    const auto parts = partition_columns(n, p);
    ASSERT_EQ(parts.size(), p);
    std::vector<int> hits(n, 0);
    std::size_t next = 0, lo = n, hi = 0;
    for (std::size_t r = 0; r < p; ++r) {
      EXPECT_EQ(parts[r].start, next);
      next += parts[r].len;
      lo = std::min(lo, parts[r].len);
      hi = std::max(hi, parts[r].len);
      for (std::size_t j = parts[r].start; j < parts[r].start + parts[r].len; ++j) ++hits[j];
      // Larger blocks come first.
      if (r > 0) EXPECT_GE(parts[r - 1].len, parts[r].len);
    }
    EXPECT_EQ(next, n);
    EXPECT_LE(hi - lo, 1u);
    for (int h : hits) EXPECT_EQ(h, 1);
  }
}

TEST(MatrixTest, ColumnBlocksReassemble) {
  Gen gen(17);
  const Matrix x = gen.matrix(4, 11);
  const Matrix c = gen.matrix(2, 11);
  const auto parts = partition_columns(11, 3);
  Matrix x_back(4, 11), c_back(2, 11);
  for (std::size_t r = 0; r < 3; ++r) {
    const ColumnBlock blk = make_column_block(x, c, r, parts[r]);
    EXPECT_EQ(blk.owner_rank, r);
    EXPECT_EQ(blk.global_start, parts[r].start);
    EXPECT_EQ(blk.local_cols(), parts[r].len);
    x_back.set_col_range(blk.global_start, blk.x_block);
    c_back.set_col_range(blk.global_start, blk.c_block);
  }
  EXPECT_EQ(x_back, x);
  EXPECT_EQ(c_back, c);
}

TEST(MatrixTest, CholeskySolvesSpdSystems) {
  Gen gen(18);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = gen.index(1, 6);
    const Matrix g = gen.psd(k, k + 3, 0.1);
    const Matrix rhs = gen.matrix(k, 2, -1.0, 1.0);
    const Matrix sol = Cholesky(g).solve(rhs);
    EXPECT_LE(max_abs_diff(testing::naive_matmul(g, sol), rhs), 1e-10);
  }
}

TEST(MatrixTest, CholeskyRejectsIndefinite) {
  EXPECT_THROW(Cholesky(Matrix::from_rows({{1, 2}, {2, 1}})), Error);
  Cholesky out;
  EXPECT_FALSE(Cholesky::try_factor(Matrix::from_rows({{0, 0}, {0, 1}}), out));
}

TEST(MatrixTest, AllFiniteDetectsNan) {
  Matrix a(2, 2, 1.0);
  EXPECT_TRUE(a.all_finite());
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(a.all_finite());
}

}  // namespace
}  // namespace dnmf
