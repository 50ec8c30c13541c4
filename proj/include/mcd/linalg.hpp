#pragma once

/// @file linalg.hpp
/// CSR matrices, Bi-CGSTAB and the zero-mean (bordered) pressure solve.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mcd {

/// Compressed sparse rows with sorted, duplicate-free columns.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Builds from per-row (column, value) lists; duplicates are summed.
  static SparseMatrix from_rows(int n, std::vector<std::vector<std::pair<int, double>>> rows) {
    if (n < 1) throw std::invalid_argument("sparse matrix dimension must be >= 1");
    if (static_cast<int>(rows.size()) != n) throw std::invalid_argument("row count mismatch");
    SparseMatrix a;
    a.n_ = n;
    a.offsets_.assign(1, 0);
    for (auto& row : rows) {
      std::sort(row.begin(), row.end(),
                [](const auto& l, const auto& r) { return l.first < r.first; });
      for (std::size_t k = 0; k < row.size(); ++k) {
        const auto [col, val] = row[k];
        if (col < 0 || col >= n) throw std::invalid_argument("column index out of range");
        if (!a.cols_.empty() && static_cast<int>(a.cols_.size()) > a.offsets_.back() &&
            a.cols_.back() == col) {
          a.vals_.back() += val;
        } else {
          a.cols_.push_back(col);
          a.vals_.push_back(val);
        }
      }
      a.offsets_.push_back(static_cast<int>(a.cols_.size()));
    }
    return a;
  }

  static SparseMatrix identity(int n) {
    std::vector<std::vector<std::pair<int, double>>> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = {{i, 1.0}};
    return from_rows(n, std::move(rows));
  }

  int rows() const { return n_; }
  int nonzeros() const { return static_cast<int>(vals_.size()); }
  std::span<const int> offsets() const { return offsets_; }
  std::span<const int> columns() const { return cols_; }
  std::span<const double> values() const { return vals_; }

  double diagonal(int i) const {
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (cols_[k] == i) return vals_[k];
    }
    return 0.0;
  }

  double row_sum(int i) const {
    double s = 0.0;
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) s += vals_[k];
    return s;
  }

  double at(int i, int j) const {
    for (int k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (cols_[k] == j) return vals_[k];
    }
    return 0.0;
  }

 private:
  int n_ = 0;
  std::vector<int> offsets_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

inline void spmv(const SparseMatrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != a.rows() || static_cast<int>(y.size()) != a.rows()) {
    throw std::invalid_argument("spmv dimension mismatch");
  }
  const auto off = a.offsets();
  const auto col = a.columns();
  const auto val = a.values();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (int k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
}

inline std::vector<double> spmv(const SparseMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.rows());
  spmv(a, x, y);
  return y;
}

enum class Criterion { relative, absolute };

struct SolveOptions {
  Criterion criterion = Criterion::relative;
  double tolerance = 1e-7;
  int max_iterations = 10000;
  bool jacobi = false;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // absolute L2 norms, entry 0 is the initial residual
  double rhs_norm = 0.0;
  bool converged = false;
  Criterion criterion = Criterion::relative;
  double tolerance = 0.0;
  int restarts = 0;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
  double final_relative() const {
    return rhs_norm > 0.0 ? final_residual() / rhs_norm : final_residual();
  }
};

class SolverBreakdown : public std::runtime_error {
 public:
  explicit SolverBreakdown(const std::string& what, SolveReport r)
      : std::runtime_error(what), report(std::move(r)) {}
  SolveReport report;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace detail

/// Bi-CGSTAB (van der Vorst) on a matrix-free operator `apply(x, y)`
/// computing y = A x. `diag` enables Jacobi preconditioning when non-empty.
/// A breakdown restarts once from the current iterate; a second one throws.
template <class Apply>
SolveReport bicgstab(Apply&& apply, int n, std::span<const double> b, std::span<double> x,
                     const SolveOptions& opt, std::span<const double> diag = {}) {
  if (opt.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  SolveReport rep;
  rep.criterion = opt.criterion;
  rep.tolerance = opt.tolerance;
  rep.rhs_norm = detail::norm2(b);
  const double target =
      opt.criterion == Criterion::relative ? opt.tolerance * rep.rhs_norm : opt.tolerance;

  std::vector<double> r(n), rhat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    if (diag.empty()) {
      std::copy(in.begin(), in.end(), out.begin());
    } else {
      for (int i = 0; i < n; ++i) out[i] = in[i] / diag[i];
    }
  };
  auto residual = [&] {
    apply(std::span<const double>(x.data(), n), std::span<double>(r));
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
  };

  residual();
  double rnorm = detail::norm2(r);
  rep.residual_history.push_back(rnorm);
  if (rnorm <= target) {
    rep.converged = true;
    return rep;
  }

  double rho = 1.0, alpha = 1.0, omega = 1.0;
  bool fresh = true;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    if (fresh) {
      rhat = r;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      fresh = false;
    }
    const double rho_new = detail::dot(rhat, r);
    bool broke = rho_new == 0.0 || !std::isfinite(rho_new);
    if (!broke) {
      const double beta = (rho_new / rho) * (alpha / omega);
      for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      precondition(p, ph);
      apply(std::span<const double>(ph), std::span<double>(v));
      const double rv = detail::dot(rhat, v);
      broke = rv == 0.0 || !std::isfinite(rv);
      if (!broke) {
        alpha = rho_new / rv;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        const double snorm = detail::norm2(s);
        if (snorm <= target) {
          for (int i = 0; i < n; ++i) x[i] += alpha * ph[i];
          rep.iterations = it;
          rep.residual_history.push_back(snorm);
          rep.converged = true;
          return rep;
        }
        precondition(s, sh);
        apply(std::span<const double>(sh), std::span<double>(t));
        const double tt = detail::dot(t, t);
        omega = tt > 0.0 ? detail::dot(t, s) / tt : 0.0;
        for (int i = 0; i < n; ++i) x[i] += alpha * ph[i] + omega * sh[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rho = rho_new;
        rnorm = detail::norm2(r);
        rep.residual_history.push_back(rnorm);
        rep.iterations = it;
        if (rnorm <= target) {
          rep.converged = true;
          return rep;
        }
        broke = omega == 0.0 || !std::isfinite(omega);
      }
    }
    if (broke) {
      if (rep.restarts > 0) throw SolverBreakdown("Bi-CGSTAB breakdown after restart", rep);
      ++rep.restarts;
      residual();
      fresh = true;
    }
  }
  return rep;
}

inline SolveReport bicgstab(const SparseMatrix& a, std::span<const double> b, std::span<double> x,
                            const SolveOptions& opt) {
  std::vector<double> diag;
  if (opt.jacobi) {
    diag.resize(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
      const double d = a.diagonal(i);
      diag[i] = d != 0.0 ? d : 1.0;
    }
  }
  auto apply = [&a](std::span<const double> in, std::span<double> out) { spmv(a, in, out); };
  return bicgstab(apply, a.rows(), b, x, opt, diag);
}

struct ZeroMeanSolution {
  std::vector<double> p;
  double lambda = 0.0;
  SolveReport report;
};

/// Solves [[A, 1], [1^T, 0]] [p; lambda] = [b; 0]. `p0` is the initial guess.
inline ZeroMeanSolution solve_zero_mean(const SparseMatrix& a, std::span<const double> b,
                                        std::span<const double> p0, const SolveOptions& opt) {
  const int n = a.rows();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("rhs dimension mismatch");
  std::vector<double> rhs(b.begin(), b.end());
  rhs.push_back(0.0);
  std::vector<double> x(n + 1, 0.0);
  if (!p0.empty()) std::copy(p0.begin(), p0.end(), x.begin());
  auto apply = [&a, n](std::span<const double> in, std::span<double> out) {
    spmv(a, in.first(n), out.first(n));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] += in[n];
      sum += in[i];
    }
    out[n] = sum;
  };
  std::vector<double> diag;
  if (opt.jacobi) {
    diag.resize(n + 1, 1.0);
    for (int i = 0; i < n; ++i) {
      const double d = a.diagonal(i);
      diag[i] = d != 0.0 ? d : 1.0;
    }
  }
  ZeroMeanSolution sol;
  sol.report = bicgstab(apply, n + 1, rhs, x, opt, diag);
  sol.lambda = x[n];
  x.pop_back();
  // Remove the round-off mean left by the iteration.
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  for (double& v : x) v -= mean;
  sol.p = std::move(x);
  return sol;
}

}  // namespace mcd
