#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qnmag/linsolve.hpp"
#include "support.hpp"

using namespace qnmag;

namespace {

SparseSpdMatrix from_dense(const std::vector<std::vector<double>>& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> cols;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (m[i][j] != 0.0 || i == j) {
        cols.push_back(j);
        values.push_back(m[i][j]);
      }
    }
    row_ptr.push_back(cols.size());
  }
  return SparseSpdMatrix(n, row_ptr, cols, values);
}

// Dense Cholesky solve used as the reference.
std::vector<double> cholesky_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) a[j][j] -= a[j][k] * a[j][k];
    a[j][j] = std::sqrt(a[j][j]);
    for (std::size_t i = j + 1; i < n; ++i) {
      for (std::size_t k = 0; k < j; ++k) a[i][j] -= a[i][k] * a[j][k];
      a[i][j] /= a[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i][k] * b[k];
    b[i] /= a[i][i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k][i] * b[k];
    b[i] /= a[i][i];
  }
  return b;
}

// Sparse random SPD matrix: graph Laplacian plus a diagonal shift, badly scaled rows.
std::vector<std::vector<double>> random_spd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.1, 1.0);
  std::uniform_real_distribution<double> scale(-1.0, 1.0);
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j : {i + 1, (i * 7 + 3) % n}) {
      if (j == i) continue;
      const double v = w(rng);
      m[i][j] -= v;
      m[j][i] -= v;
      m[i][i] += v;
      m[j][j] += v;
    }
  }
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] += 1e-3;
    s[i] = std::pow(10.0, scale(rng));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m[i][j] *= s[i] * s[j];
  return m;
}

}  // namespace

TEST(SparseSpdMatrix, AccessorsAndProduct) {
  const SparseSpdMatrix a = from_dense({{4.0, 1.0, 0.0}, {1.0, 3.0, -1.0}, {0.0, -1.0, 2.0}});
  EXPECT_EQ(a.size(), 3u);
  EXPECT_EQ(a.nnz(), 7u);
  EXPECT_EQ(a.at(0, 2), 0.0);
  EXPECT_EQ(a.at(1, 2), -1.0);
  EXPECT_EQ(a.diagonal(), (std::vector<double>{4.0, 3.0, 2.0}));
  EXPECT_EQ(matvec(a, std::vector<double>{1.0, 2.0, 3.0}), (std::vector<double>{6.0, 4.0, 4.0}));
}

TEST(SparseSpdMatrix, RejectsMalformedArrays) {
  EXPECT_THROW(SparseSpdMatrix(2, {0, 1}, {0}, {1.0}), LinearAlgebraError);
  EXPECT_THROW(SparseSpdMatrix(2, {0, 1, 2}, {0, 2}, {1.0, 1.0}), LinearAlgebraError);
  EXPECT_THROW(SparseSpdMatrix(2, {0, 2, 3}, {1, 0, 1}, {1.0, 1.0, 1.0}), LinearAlgebraError);
  EXPECT_THROW(SparseSpdMatrix(2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), LinearAlgebraError);
  const SparseSpdMatrix a = from_dense({{1.0}});
  std::vector<double> y(2);
  EXPECT_THROW(a.multiply(std::vector<double>{1.0, 2.0}, y), LinearAlgebraError);
}

TEST(SolveCg, TwoByTwo) {
  const SparseSpdMatrix a = from_dense({{4.0, 1.0}, {1.0, 3.0}});
  for (auto pc : {Preconditioner::None, Preconditioner::Jacobi}) {
    CgConfig cfg;
    cfg.preconditioner = pc;
    const CgResult r = solve_cg(a, std::vector<double>{1.0, 2.0}, cfg);
    ASSERT_TRUE(r.report.converged);
    EXPECT_NEAR(r.x[0], 1.0 / 11.0, 1e-14);
    EXPECT_NEAR(r.x[1], 7.0 / 11.0, 1e-14);
    EXPECT_LE(r.report.iterations, 2u);
  }
}

TEST(SolveCg, MatchesCholeskyOnRandomSpd) {
  std::mt19937_64 rng(21);
  for (std::size_t n : {5u, 40u, 200u}) {
    const auto dense = random_spd(n, rng);
    const auto b = qnmag::testing::random_vector(n, 1.0, rng);
    const auto expect = cholesky_solve(dense, b);
    CgConfig cfg;
    cfg.rtol = 1e-12;
    const CgResult r = solve_cg(from_dense(dense), b, cfg);
    ASSERT_TRUE(r.report.converged) << n;
    EXPECT_LE(r.report.relative_residual, 1e-12);
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(r.x[i] - expect[i]));
      ref = std::max(ref, std::abs(expect[i]));
    }
    EXPECT_LE(err, 1e-6 * ref) << n;
  }
}

TEST(SolveCg, ReportedResidualIsExplicit) {
  std::mt19937_64 rng(22);
  const auto dense = random_spd(60, rng);
  const SparseSpdMatrix a = from_dense(dense);
  const auto b = qnmag::testing::random_vector(60, 1.0, rng);
  CgConfig cfg;
  cfg.rtol = 1e-6;
  const CgResult r = solve_cg(a, b, cfg);
  auto ax = matvec(a, r.x);
  for (std::size_t i = 0; i < b.size(); ++i) ax[i] -= b[i];
  EXPECT_NEAR(r.report.relative_residual, norm2(ax) / norm2(b), 1e-14);
  EXPECT_LE(r.report.relative_residual, 1e-6);
}

TEST(SolveCg, WarmStart) {
  std::mt19937_64 rng(23);
  const auto dense = random_spd(80, rng);
  const SparseSpdMatrix a = from_dense(dense);
  const auto b = qnmag::testing::random_vector(80, 1.0, rng);
  CgConfig cfg;
  const CgResult cold = solve_cg(a, b, cfg);
  const CgResult exact = solve_cg(a, b, cfg, cold.x);
  EXPECT_EQ(exact.report.iterations, 0u);
  EXPECT_TRUE(exact.report.converged);

  // A guess worse than zero is ignored.
  std::vector<double> bad(80, 1e6);
  const CgResult ignored = solve_cg(a, b, cfg, bad);
  EXPECT_EQ(ignored.x, cold.x);
  EXPECT_EQ(ignored.report.iterations, cold.report.iterations);

  EXPECT_THROW(solve_cg(a, b, cfg, std::vector<double>(3)), LinearAlgebraError);
}

TEST(SolveCg, IterationCap) {
  std::mt19937_64 rng(24);
  const auto dense = random_spd(100, rng);
  CgConfig cfg;
  cfg.maxit = 3;
  cfg.rtol = 1e-14;
  const CgResult r = solve_cg(from_dense(dense), qnmag::testing::random_vector(100, 1.0, rng), cfg);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 3u);
}

TEST(SolveCg, ZeroRhsAndErrors) {
  const SparseSpdMatrix a = from_dense({{2.0, 0.0}, {0.0, 5.0}});
  const CgResult r = solve_cg(a, std::vector<double>{0.0, 0.0}, {});
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.x, (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(solve_cg(a, std::vector<double>{1.0}, {}), LinearAlgebraError);
  CgConfig bad;
  bad.rtol = 0.0;
  EXPECT_THROW(solve_cg(a, std::vector<double>{1.0, 1.0}, bad), LinearAlgebraError);
  const SparseSpdMatrix indefinite = from_dense({{1.0, 2.0}, {2.0, 1.0}});
  CgConfig plain;
  plain.preconditioner = Preconditioner::None;
  EXPECT_THROW(solve_cg(indefinite, std::vector<double>{1.0, -1.0}, plain), LinearAlgebraError);
  EXPECT_THROW(solve_cg(from_dense({{-1.0}}), std::vector<double>{1.0}, {}), LinearAlgebraError);
}
