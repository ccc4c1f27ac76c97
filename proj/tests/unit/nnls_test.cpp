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

#include "dnmf/nnls.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "dnmf/error.hpp"
#include "support/oracles.hpp"

namespace dnmf {
namespace {

using testing::Gen;

// Test-side KKT check: b >= 0, g = b G - r >= 0, |b . g| small, per row.
double kkt_worst(const GramSystem& sys, const Matrix& sol) {
  const std::size_t k = sys.gram.rows();
  double worst = 0.0;
  for (std::size_t row = 0; row < sol.rows(); ++row) {
    double comp = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double g = -sys.rhs(row, i);
      for (std::size_t l = 0; l < k; ++l) g += sol(row, l) * sys.gram(l, i);
      worst = std::max({worst, -sol(row, i), -g});
      comp += sol(row, i) * g;
    }
    worst = std::max(worst, std::abs(comp));
  }
  return worst;
}

double row_obj(const GramSystem& sys, const Matrix& sol) {
  double total = 0.0;
  const std::size_t k = sys.gram.rows();
  for (std::size_t row = 0; row < sol.rows(); ++row)
    for (std::size_t i = 0; i < k; ++i) {
      total -= sol(row, i) * sys.rhs(row, i);
      for (std::size_t l = 0; l < k; ++l) total += 0.5 * sol(row, i) * sys.gram(i, l) * sol(row, l);
    }
  return total;
}

TEST(NnlsTest, IdentityGramWithMixedSigns) {
  const GramSystem sys{Matrix::identity(2), Matrix::from_rows({{1, -1}})};
  EXPECT_EQ(nnls_rows(sys), Matrix::from_rows({{1, 0}}));
  EXPECT_EQ(nnls_oracle(sys), Matrix::from_rows({{1, 0}}));
}

TEST(NnlsTest, IdentityGramNonnegativeRhsIsUnchanged) {
  Gen gen(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = gen.index(1, 6);
    const Matrix r = gen.matrix(gen.index(1, 5), k);
    const GramSystem sys{Matrix::identity(k), r};
    EXPECT_LE(max_abs_diff(nnls_rows(sys), r), 1e-15);
    EXPECT_LE(max_abs_diff(nnls_oracle(sys), r), 1e-15);
  }
}

TEST(NnlsTest, CoupledTwoByTwo) {
  // [b1 b2] [[2,1],[1,2]] = [1,1]  =>  b1 = b2 = 1/3, both positive.
  const GramSystem sys{Matrix::from_rows({{2, 1}, {1, 2}}), Matrix::from_rows({{1, 1}})};
  const Matrix sol = nnls_rows(sys);
  EXPECT_NEAR(sol(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(sol(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(NnlsTest, ScalarCaseIsProjection) {
  Gen gen(32);
  for (int trial = 0; trial < 50; ++trial) {
    const double g = gen.uniform(0.1, 5.0);
    const double r = gen.uniform(-3.0, 3.0);
    const GramSystem sys{Matrix(1, 1, g), Matrix(1, 1, r)};
    const double expect = std::max(0.0, r / g);
    EXPECT_NEAR(nnls_rows(sys)(0, 0), expect, 1e-15);
    EXPECT_NEAR(nnls_oracle(sys)(0, 0), expect, 1e-15);
  }
}

TEST(NnlsTest, OracleIsNeverBeatenOnK3) {
  Gen gen(33);
  for (int trial = 0; trial < 100; ++trial) {
    const GramSystem sys{gen.psd(3, 5), gen.matrix(4, 3, -1.0, 1.0)};
    const double ours = row_obj(sys, nnls_rows(sys));
    const double oracle = row_obj(sys, nnls_oracle(sys));
    EXPECT_LE(ours, oracle + 1e-8) << "trial " << trial;
  }
}

TEST(NnlsTest, MatchesOracleOnRandomPsdSystems) {
  Gen gen(34);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = gen.index(1, 6);
    // Mix of full-rank and rank-deficient least-squares systems.
    const std::size_t cols = trial % 4 == 0 ? gen.index(1, k) : k + gen.index(0, 4);
    const auto [g, r] = gen.ls_system(k, cols, gen.index(1, 6));
    const GramSystem sys{g, r};
    const Matrix ours = nnls_rows(sys);
    const Matrix oracle = nnls_oracle(sys);
    const double a = row_obj(sys, ours);
    const double b = row_obj(sys, oracle);
    EXPECT_LE(std::abs(a - b), 1e-8 * std::max(1.0, std::abs(b))) << "trial " << trial;
    EXPECT_LE(kkt_worst(sys, ours), 1e-8) << "trial " << trial;
    const KktResidual lib = nnls_kkt_residual(sys, ours);
    EXPECT_NEAR(lib.worst(), kkt_worst(sys, ours), 1e-14);
  }
}

TEST(NnlsTest, OutputIsNonnegative) {
  Gen gen(35);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = gen.index(1, 8);
    const GramSystem sys{gen.psd(k, k + 2, 1e-3), gen.matrix(3, k, -2.0, 1.0)};
    const Matrix sol = nnls_rows(sys);
    for (double v : sol.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(NnlsTest, PositiveScalingOfRhsScalesSolution) {
  Gen gen(36);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = gen.index(1, 6);
    const Matrix g = gen.psd(k, k + 3, 0.01);
    const Matrix r = gen.matrix(3, k, -1.0, 1.0);
    const double s = gen.uniform(0.01, 100.0);
    const Matrix base = nnls_rows({g, r});
    const Matrix scaled = nnls_rows({g, r * s});
    EXPECT_LE(max_abs_diff(scaled, base * s), 1e-9 * std::max(1.0, s)) << "trial " << trial;
  }
}

TEST(NnlsTest, ZeroDiagonalCoordinateIsDroppedToZero) {
  // Coordinate 1 has no energy: G row/col 1 is zero.
  Matrix g = Matrix::from_rows({{2, 0, 1}, {0, 0, 0}, {1, 0, 2}});
  const GramSystem sys{g, Matrix::from_rows({{1, 5, 1}, {-1, -5, 2}})};
  const Matrix sol = nnls_rows(sys);
  EXPECT_EQ(sol(0, 1), 0.0);
  EXPECT_EQ(sol(1, 1), 0.0);
  // The remaining 2x2 subsystem is the coupled example above for row 0.
  EXPECT_NEAR(sol(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(sol(0, 2), 1.0 / 3.0, 1e-15);
  // Row 1: [b0 b2] [[2,1],[1,2]] vs r = [-1, 2]: b0 = 0, b2 = 1.
  EXPECT_NEAR(sol(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(sol(1, 2), 1.0, 1e-15);
}

TEST(NnlsTest, AllZeroGramGivesZero) {
  const GramSystem sys{Matrix(3, 3), Matrix(2, 3, 1.0)};
  EXPECT_EQ(nnls_rows(sys), Matrix(2, 3));
}

TEST(NnlsTest, CapExhaustionCarriesBestIterate) {
  NnlsOptions opts;
  opts.iter_cap_per_dim = 0;
  opts.gradient_iter_cap = 0;
  const GramSystem sys{Matrix::from_rows({{2, 1}, {1, 2}}), Matrix::from_rows({{0, 0}, {1, 1}})};
  try {
    nnls_rows(sys, opts);
    FAIL() << "expected NnlsError";
  } catch (const NnlsError& e) {
    EXPECT_EQ(e.failed_row(), 1u);
    ASSERT_EQ(e.best_iterate().rows(), 2u);
    for (double v : e.best_iterate().values()) EXPECT_GE(v, 0.0);
  }
}

TEST(NnlsTest, GradientFallbackReachesKkt) {
  // Pivoting disabled; projected gradient alone must still solve the row.
  NnlsOptions opts;
  opts.iter_cap_per_dim = 0;
  Gen gen(37);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = gen.index(1, 4);
    const GramSystem sys{gen.psd(k, k + 3, 0.5), gen.matrix(2, k, -1.0, 1.0)};
    const Matrix sol = nnls_rows(sys, opts);
    EXPECT_LE(kkt_worst(sys, sol), 1e-8);
    EXPECT_LE(std::abs(row_obj(sys, sol) - row_obj(sys, nnls_oracle(sys))), 1e-8);
  }
}

TEST(NnlsTest, RejectsBadSystems) {
  EXPECT_THROW(nnls_rows({Matrix(2, 3), Matrix(1, 3)}), DimensionError);
  EXPECT_THROW(nnls_rows({Matrix::identity(2), Matrix(1, 3)}), DimensionError);
  EXPECT_THROW(nnls_rows({Matrix::from_rows({{1, 1}, {0, 1}}), Matrix(1, 2)}), Error);
  EXPECT_THROW(nnls_oracle({Matrix::identity(13), Matrix(1, 13)}), Error);
}

}  // namespace
}  // namespace dnmf
