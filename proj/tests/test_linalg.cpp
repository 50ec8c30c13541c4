#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

#include "mcd/benchmarks.hpp"

using namespace mcd;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows(), a.rows());
  const auto off = a.offsets();
  const auto col = a.columns();
  const auto val = a.values();
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = off[i]; k < off[i + 1]; ++k) m(i, col[k]) += val[k];
  }
  return m;
}

SparseMatrix random_dominant(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : {i - 3, i - 1, i + 1, i + 5}) {
      if (j < 0 || j >= n) continue;
      const double v = u(rng);
      rows[i].push_back({j, v});
      off += std::abs(v);
    }
    rows[i].push_back({i, off + 1.0 + std::abs(u(rng))});
  }
  return SparseMatrix::from_rows(n, rows);
}

}  // namespace

TEST(SparseMatrix, DuplicateEntriesAreSummed) {
  const auto a = SparseMatrix::from_rows(2, {{{0, 1.0}, {1, 2.0}, {0, 3.0}}, {{1, 5.0}}});
  EXPECT_DOUBLE_EQ(a.at(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(a.at(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(a.at(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(a.row_sum(0), 6.0);
  EXPECT_EQ(a.nonzeros(), 3);
}

TEST(SparseMatrix, RejectsBadIndices) {
  EXPECT_THROW(SparseMatrix::from_rows(2, {{{2, 1.0}}, {}}), std::invalid_argument);
  EXPECT_THROW(SparseMatrix::from_rows(2, {{}}), std::invalid_argument);
}

TEST(Spmv, MatchesDenseProduct) {
  const auto a = random_dominant(40, 3);
  std::vector<double> x(40);
  for (int i = 0; i < 40; ++i) x[i] = std::sin(i);
  const auto y = spmv(a, x);
  const Eigen::VectorXd ref = dense(a) * Eigen::Map<Eigen::VectorXd>(x.data(), 40);
  for (int i = 0; i < 40; ++i) EXPECT_NEAR(y[i], ref[i], 1e-13);
}

TEST(Bicgstab, IdentitySolvesInOneIteration) {
  const auto a = SparseMatrix::identity(5);
  std::vector<double> b{1, 2, 3, 4, 5}, x(5, 0.0);
  const auto r = bicgstab(a, b, x, {});
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.iterations, 1);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(x[i], b[i], 1e-12);
}

TEST(Bicgstab, ZeroRightHandSideReturnsZero) {
  const auto a = random_dominant(10, 1);
  std::vector<double> b(10, 0.0), x(10, 0.0);
  const auto r = bicgstab(a, b, x, {});
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  for (double v : x) EXPECT_EQ(v, 0.0);
}

TEST(Bicgstab, MatchesDenseLuOnNonsymmetricSystem) {
  const auto a = random_dominant(200, 7);
  std::vector<double> b(200), x(200, 0.0);
  for (int i = 0; i < 200; ++i) b[i] = std::cos(0.1 * i);
  SolveOptions opt;
  opt.tolerance = 1e-12;
  const auto r = bicgstab(a, b, x, opt);
  ASSERT_TRUE(r.converged);
  const Eigen::VectorXd ref = dense(a).partialPivLu().solve(Eigen::Map<Eigen::VectorXd>(b.data(), 200));
  for (int i = 0; i < 200; ++i) EXPECT_NEAR(x[i], ref[i], 1e-9);
}

TEST(Bicgstab, CriterionSemantics) {
  const auto a = random_dominant(100, 2);
  std::vector<double> b(100, 1000.0);
  std::vector<double> x1(100, 0.0), x2(100, 0.0);
  SolveOptions rel;
  rel.tolerance = 1e-6;
  SolveOptions abs = rel;
  abs.criterion = Criterion::absolute;
  const auto r1 = bicgstab(a, b, x1, rel);
  const auto r2 = bicgstab(a, b, x2, abs);
  EXPECT_LE(r1.final_residual(), 1e-6 * r1.rhs_norm);
  EXPECT_LE(r2.final_residual(), 1e-6);
  EXPECT_GE(r2.iterations, r1.iterations);
  EXPECT_EQ(r1.residual_history.size(), static_cast<std::size_t>(r1.iterations) + 1);
}

TEST(Bicgstab, JacobiHandlesBadRowScaling) {
  std::vector<std::vector<std::pair<int, double>>> rows(60);
  for (int i = 0; i < 60; ++i) {
    const double s = std::pow(10.0, (i % 6));
    rows[i] = {{i, 4.0 * s}};
    if (i > 0) rows[i].push_back({i - 1, -s});
    if (i + 1 < 60) rows[i].push_back({i + 1, -s});
  }
  const auto a = SparseMatrix::from_rows(60, rows);
  std::vector<double> b(60, 1.0), x(60, 0.0);
  SolveOptions opt;
  opt.jacobi = true;
  opt.tolerance = 1e-10;
  const auto r = bicgstab(a, b, x, opt);
  ASSERT_TRUE(r.converged);
  const auto ax = spmv(a, x);
  for (int i = 0; i < 60; ++i) EXPECT_NEAR(ax[i], 1.0, 1e-8);
}

TEST(Bicgstab, ReportsNonConvergenceAtIterationCap) {
  const auto a = random_dominant(300, 4);
  std::vector<double> b(300, 1.0), x(300, 0.0);
  SolveOptions opt;
  opt.tolerance = 1e-14;
  opt.max_iterations = 2;
  const auto r = bicgstab(a, b, x, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 2);
}

TEST(Bicgstab, SecondBreakdownThrows) {
  const auto a = SparseMatrix::from_rows(3, {{{0, 0.0}}, {{1, 0.0}}, {{2, 0.0}}});
  std::vector<double> b{1, 1, 1}, x(3, 0.0);
  EXPECT_THROW(bicgstab(a, b, x, {}), SolverBreakdown);
}

TEST(Bicgstab, RejectsNonPositiveIterationCap) {
  const auto a = SparseMatrix::identity(2);
  std::vector<double> b{1, 1}, x(2, 0.0);
  SolveOptions opt;
  opt.max_iterations = 0;
  EXPECT_THROW(bicgstab(a, b, x, opt), std::invalid_argument);
}

TEST(ZeroMean, SolvesSingularPeriodicLaplacian) {
  // 1D periodic Laplacian: singular with the constant null space.
  const int n = 32;
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  for (int i = 0; i < n; ++i) rows[i] = {{(i + n - 1) % n, 1.0}, {i, -2.0}, {(i + 1) % n, 1.0}};
  const auto a = SparseMatrix::from_rows(n, rows);
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) b[i] = std::sin(2 * std::numbers::pi * i / n) + 0.01;  // slightly incompatible
  SolveOptions opt;
  opt.tolerance = 1e-12;
  opt.criterion = Criterion::absolute;
  const auto sol = solve_zero_mean(a, b, {}, opt);
  ASSERT_TRUE(sol.report.converged);
  double mean = 0.0, pmax = 0.0;
  for (double v : sol.p) {
    mean += v / n;
    pmax = std::max(pmax, std::abs(v));
  }
  EXPECT_LE(std::abs(mean), 1e-10 * pmax);
  // The multiplier absorbs the incompatible part of b.
  EXPECT_NEAR(sol.lambda, 0.01, 1e-10);
  const auto ap = spmv(a, sol.p);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(ap[i] + sol.lambda, b[i], 1e-10);
}
