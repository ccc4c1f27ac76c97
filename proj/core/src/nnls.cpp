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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace dnmf {

namespace {

// Largest eigenvalue of a small symmetric matrix by cyclic Jacobi rotations.
double max_eigenvalue(Matrix a) {
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double m = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, a(i, i));
  return m;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Worst KKT violation of one row, in absolute terms.
double row_kkt(const Matrix& g, std::span<const double> b, std::span<const double> r) {
  const std::size_t k = b.size();
  double worst = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double grad = -r[i];
    for (std::size_t l = 0; l < k; ++l) grad += b[l] * g(l, i);
    worst = std::max({worst, -b[i], -grad});
    comp += b[i] * grad;
  }
  return std::max(worst, std::abs(comp));
}

// Solver for the rows of one Gram system restricted to its non-degenerate
// coordinates.
class RowSolver {
 public:
  RowSolver(const Matrix& gram, const NnlsOptions& opts) : opts_(opts) {
    for (std::size_t i = 0; i < gram.rows(); ++i)
      if (gram(i, i) > 0.0) keep_.push_back(i);
    n_ = keep_.size();
    g_ = Matrix(n_, n_);
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < n_; ++i) g_(i, j) = gram(keep_[i], keep_[j]);
    scale_ = 1.0;
    for (std::size_t i = 0; i < n_; ++i) scale_ = std::max(scale_, g_(i, i));
  }

  const std::vector<std::size_t>& kept() const { return keep_; }
  std::size_t dim() const { return n_; }

  // Solves one reduced row in place. Returns false if the row could not be
  // brought inside the KKT tolerance; `x` then holds the best iterate.
  bool solve(std::span<const double> r, std::span<double> x) {
    if (n_ == 0) return true;
    const double tol = opts_.kkt_tol * std::max(1.0, std::max(scale_, max_abs(r)));
    if (pivot(r, x) && row_kkt(g_, x, r) <= tol) return true;
    const bool ok = project_gradient(r, x, tol);
    polish(r, x);
    return ok || row_kkt(g_, x, r) <= tol;
  }

 private:
  bool solve_passive(const std::vector<char>& passive, std::span<const double> r,
                     std::span<double> x, std::vector<double>& y) {
    std::vector<std::size_t> f;
    for (std::size_t i = 0; i < n_; ++i)
      if (passive[i]) f.push_back(i);
    std::vector<double> xf(f.size());
    if (!f.empty()) {
      Matrix gff(f.size(), f.size());
      for (std::size_t j = 0; j < f.size(); ++j)
        for (std::size_t i = 0; i < f.size(); ++i) gff(i, j) = g_(f[i], f[j]);
      for (std::size_t i = 0; i < f.size(); ++i) xf[i] = r[f[i]];
      if (!Cholesky::try_factor(gff, chol_)) return false;
      chol_.solve_inplace(xf);
    }
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) x[f[i]] = xf[i];
    for (std::size_t i = 0; i < n_; ++i) {
      if (passive[i]) {
        y[i] = 0.0;
        continue;
      }
      double s = -r[i];
      for (std::size_t l = 0; l < f.size(); ++l) s += g_(i, f[l]) * xf[l];
      y[i] = s;
    }
    return true;
  }

  // Block principal pivoting with full exchanges and the backup
  // single-exchange rule.
  bool pivot(std::span<const double> r, std::span<double> x) {
    std::vector<char> passive(n_, 0);
    std::vector<double> y(n_);
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) y[i] = -r[i];
    const double eps_y = 1e-14 * (1.0 + max_abs(r));

    std::size_t ninf = n_ + 1;
    int backup = 3;
    std::size_t stall = 0;
    const std::size_t cap = opts_.iter_cap_per_dim * n_;
    const std::size_t stall_cap = opts_.stall_cycles_per_dim * n_;
    std::vector<std::size_t> infeasible;
    for (std::size_t iter = 0; iter <= cap; ++iter) {
      const double eps_x = 1e-14 * (1.0 + max_abs(x));
      infeasible.clear();
      for (std::size_t i = 0; i < n_; ++i) {
        if ((passive[i] && x[i] < -eps_x) || (!passive[i] && y[i] < -eps_y)) {
          infeasible.push_back(i);
        }
      }
      if (infeasible.empty()) {
        for (double& v : x) v = v > 0.0 ? v : 0.0;
        return true;
      }
      if (iter == cap) break;
      if (infeasible.size() < ninf) {
        ninf = infeasible.size();
        backup = 3;
        stall = 0;
        for (std::size_t i : infeasible) passive[i] = !passive[i];
      } else {
        if (++stall > stall_cap) break;
        if (backup >= 1) {
          --backup;
          for (std::size_t i : infeasible) passive[i] = !passive[i];
        } else {
          const std::size_t i = infeasible.back();
          passive[i] = !passive[i];
        }
      }
      if (!solve_passive(passive, r, x, y)) break;
    }
    for (double& v : x) v = v > 0.0 ? v : 0.0;
    return false;
  }

  // Re-solves on the support of `x` and keeps the result if it is feasible
  // and has a smaller KKT residual.
  void polish(std::span<const double> r, std::span<double> x) {
    std::vector<char> passive(n_);
    for (std::size_t i = 0; i < n_; ++i) passive[i] = x[i] > 0.0;
    std::vector<double> cand(n_), y(n_);
    if (!solve_passive(passive, r, cand, y)) return;
    for (double v : cand)
      if (v < 0.0) return;
    if (row_kkt(g_, cand, r) < row_kkt(g_, x, r)) std::copy(cand.begin(), cand.end(), x.begin());
  }

  // Projected gradient with fixed step 1 / lambda_max(G), started from the
  // current (clamped) iterate.
  bool project_gradient(std::span<const double> r, std::span<double> x, double tol) {
    if (lambda_max_ < 0.0) lambda_max_ = max_eigenvalue(g_);
    const double step = lambda_max_ > 0.0 ? 1.0 / lambda_max_ : 0.0;
    for (double& v : x) v = v > 0.0 ? v : 0.0;
    std::vector<double> best(x.begin(), x.end());
    double best_obj = nnls_row_objective(g_, x, r);
    std::vector<double> grad(n_);
    for (std::size_t it = 0; it < opts_.gradient_iter_cap; ++it) {
      for (std::size_t i = 0; i < n_; ++i) {
        double s = -r[i];
        for (std::size_t l = 0; l < n_; ++l) s += g_(i, l) * x[l];
        grad[i] = s;
      }
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = x[i] - step * grad[i];
        x[i] = v > 0.0 ? v : 0.0;
      }
      if (it % 16 == 15) {
        const double obj = nnls_row_objective(g_, x, r);
        if (obj < best_obj) {
          best_obj = obj;
          std::copy(x.begin(), x.end(), best.begin());
        }
        if (row_kkt(g_, x, r) <= tol) return true;
      }
    }
    if (nnls_row_objective(g_, x, r) > best_obj) std::copy(best.begin(), best.end(), x.begin());
    return row_kkt(g_, x, r) <= tol;
  }

  const NnlsOptions& opts_;
  std::vector<std::size_t> keep_;
  std::size_t n_ = 0;
  Matrix g_;
  double scale_ = 1.0;
  double lambda_max_ = -1.0;
  Cholesky chol_;
};

}  // namespace

double KktResidual::worst() const {
  return std::max({negativity, dual_infeasible, complementarity});
}

void validate_gram_system(const GramSystem& sys) {
  const Matrix& g = sys.gram;
  if (g.rows() != g.cols()) {
    throw DimensionError("nnls: Gram matrix is " + std::to_string(g.rows()) + "x" +
                         std::to_string(g.cols()) + ", expected square");
  }
  if (sys.rhs.cols() != g.rows()) {
    throw DimensionError("nnls: right-hand side has " + std::to_string(sys.rhs.cols()) +
                         " columns, Gram is " + std::to_string(g.rows()) + "x" +
                         std::to_string(g.rows()));
  }
  if (!g.all_finite() || !sys.rhs.all_finite()) throw Error("nnls: non-finite input");
  double scale = 1.0;
  for (double v : g.values()) scale = std::max(scale, std::abs(v));
  for (std::size_t j = 0; j < g.cols(); ++j)
    for (std::size_t i = j + 1; i < g.rows(); ++i)
      if (std::abs(g(i, j) - g(j, i)) > 1e-12 * scale) {
        throw Error("nnls: Gram matrix is not symmetric at (" + std::to_string(i) + ", " +
                    std::to_string(j) + ")");
      }
}

Matrix nnls_rows(const GramSystem& sys, const NnlsOptions& opts) {
  validate_gram_system(sys);
  const std::size_t m = sys.rhs.rows();
  const std::size_t k = sys.gram.rows();
  Matrix out(m, k);
  RowSolver solver(sys.gram, opts);
  const auto& kept = solver.kept();
  std::vector<double> r(solver.dim());
  std::vector<double> x(solver.dim());
  std::vector<std::size_t> failed;
  for (std::size_t row = 0; row < m; ++row) {
    for (std::size_t i = 0; i < kept.size(); ++i) r[i] = sys.rhs(row, kept[i]);
    if (!solver.solve(r, x)) failed.push_back(row);
    for (std::size_t i = 0; i < kept.size(); ++i) out(row, kept[i]) = x[i];
  }
  if (!failed.empty()) {
    throw NnlsError("nnls: " + std::to_string(failed.size()) +
                        " row(s) did not reach the KKT tolerance, first is row " +
                        std::to_string(failed.front()),
                    std::move(out), failed.front());
  }
  return out;
}

Matrix nnls_oracle(const GramSystem& sys) {
  validate_gram_system(sys);
  const std::size_t k = sys.gram.rows();
  if (k > kNnlsOracleMaxDim) {
    throw Error("nnls_oracle: K = " + std::to_string(k) + " exceeds enumeration limit " +
                std::to_string(kNnlsOracleMaxDim));
  }
  const std::size_t m = sys.rhs.rows();
  Matrix out(m, k);
  std::vector<double> r(k), x(k), best(k);
  for (std::size_t row = 0; row < m; ++row) {
    for (std::size_t i = 0; i < k; ++i) r[i] = sys.rhs(row, i);
    std::fill(best.begin(), best.end(), 0.0);
    double best_obj = 0.0;  // x = 0 is always feasible
    for (std::size_t mask = 1; mask < (std::size_t{1} << k); ++mask) {
      std::vector<std::size_t> f;
      for (std::size_t i = 0; i < k; ++i)
        if (mask & (std::size_t{1} << i)) f.push_back(i);
      Matrix gff(f.size(), f.size());
      for (std::size_t j = 0; j < f.size(); ++j)
        for (std::size_t i = 0; i < f.size(); ++i) gff(i, j) = sys.gram(f[i], f[j]);
      Cholesky chol;
      if (!Cholesky::try_factor(gff, chol)) continue;
      std::vector<double> xf(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) xf[i] = r[f[i]];
      chol.solve_inplace(xf);
      if (std::any_of(xf.begin(), xf.end(), [](double v) { return v < 0.0; })) continue;
      std::fill(x.begin(), x.end(), 0.0);
      for (std::size_t i = 0; i < f.size(); ++i) x[f[i]] = xf[i];
      const double obj = nnls_row_objective(sys.gram, x, r);
      if (obj < best_obj) {
        best_obj = obj;
        best = x;
      }
    }
    for (std::size_t i = 0; i < k; ++i) out(row, i) = best[i];
  }
  return out;
}

double nnls_row_objective(const Matrix& gram, std::span<const double> b,
                          std::span<const double> r) {
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    double gi = 0.0;
    for (std::size_t l = 0; l < b.size(); ++l) gi += gram(i, l) * b[l];
    quad += b[i] * gi;
    lin += b[i] * r[i];
  }
  return 0.5 * quad - lin;
}

double nnls_objective(const GramSystem& sys, const Matrix& solution) {
  const std::size_t k = sys.gram.rows();
  std::vector<double> b(k), r(k);
  double total = 0.0;
  for (std::size_t row = 0; row < solution.rows(); ++row) {
    for (std::size_t i = 0; i < k; ++i) {
      b[i] = solution(row, i);
      r[i] = sys.rhs(row, i);
    }
    total += nnls_row_objective(sys.gram, b, r);
  }
  return total;
}

KktResidual nnls_kkt_residual(const GramSystem& sys, const Matrix& solution) {
  const std::size_t k = sys.gram.rows();
  KktResidual res;
  for (std::size_t row = 0; row < solution.rows(); ++row) {
    double comp = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double g = -sys.rhs(row, i);
      for (std::size_t l = 0; l < k; ++l) g += solution(row, l) * sys.gram(l, i);
      res.negativity = std::max(res.negativity, -solution(row, i));
      res.dual_infeasible = std::max(res.dual_infeasible, -g);
      comp += solution(row, i) * g;
    }
    res.complementarity = std::max(res.complementarity, std::abs(comp));
  }
  return res;
}

}  // namespace dnmf
