#include "qnmag/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qnmag {

SparseSpdMatrix::SparseSpdMatrix(std::size_t n, std::vector<std::size_t> row_ptr,
                                 std::vector<std::size_t> cols, std::vector<double> values)
    : n_(n), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), values_(std::move(values)) {
  if (row_ptr_.size() != n_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != cols_.size() ||
      cols_.size() != values_.size()) {
    throw LinearAlgebraError("inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_ptr_[i] > row_ptr_[i + 1]) throw LinearAlgebraError("row pointers not monotone");
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (cols_[k] >= n_) throw LinearAlgebraError("column index out of range");
      if (k > row_ptr_[i] && cols_[k] <= cols_[k - 1]) {
        throw LinearAlgebraError("column indices of row " + std::to_string(i) + " not sorted");
      }
    }
  }
}

double SparseSpdMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

std::vector<double> SparseSpdMatrix::diagonal() const {
  std::vector<double> d(n_);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

void SparseSpdMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw LinearAlgebraError("matvec size mismatch");
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[cols_[k]];
    y[i] = s;
  }
}

std::vector<double> matvec(const SparseSpdMatrix& a, std::span<const double> x) {
  std::vector<double> y(a.size());
  a.multiply(x, y);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LinearAlgebraError("dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void CgConfig::validate() const {
  if (!(rtol > 0.0 && rtol < 1.0)) throw LinearAlgebraError("CG rtol must lie in (0, 1)");
}

CgResult solve_cg(const SparseSpdMatrix& a, std::span<const double> rhs, const CgConfig& config,
                  std::span<const double> x0) {
  config.validate();
  const std::size_t n = a.size();
  if (rhs.size() != n) throw LinearAlgebraError("right-hand side size mismatch");
  if (!x0.empty() && x0.size() != n) throw LinearAlgebraError("initial guess size mismatch");

  CgResult result;
  result.x.assign(n, 0.0);
  const double rhs_norm = norm2(rhs);
  if (rhs_norm == 0.0) {
    result.report.converged = true;
    return result;
  }
  const std::size_t maxit = config.maxit > 0 ? config.maxit : std::max<std::size_t>(1, 10 * n);

  std::vector<double> inv_diag(n, 1.0);
  if (config.preconditioner == Preconditioner::Jacobi) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) throw LinearAlgebraError("non-positive diagonal entry; matrix is not SPD");
      inv_diag[i] = 1.0 / d[i];
    }
  }

  std::vector<double>& x = result.x;
  std::vector<double> r(rhs.begin(), rhs.end());
  std::vector<double> z(n), p(n), q(n);
  if (!x0.empty()) {
    // Keep the guess only if it beats x = 0.
    a.multiply(x0, q);
    for (std::size_t i = 0; i < n; ++i) z[i] = rhs[i] - q[i];
    if (norm2(z) < rhs_norm) {
      x.assign(x0.begin(), x0.end());
      r = z;
    }
  }
  const double target = config.rtol * rhs_norm;
  std::size_t it = 0;

  // Outer loop restarts from the explicit residual if the recurrence drifted.
  while (true) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double r_norm = norm2(r);
    while (r_norm > target && it < maxit) {
      a.multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw LinearAlgebraError("matrix is not positive definite (p^T A p <= 0)");
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++it;
      r_norm = norm2(r);
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }

    a.multiply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    const double true_norm = norm2(r);
    result.report.iterations = it;
    result.report.relative_residual = true_norm / rhs_norm;
    if (true_norm <= target) {
      result.report.converged = true;
      return result;
    }
    if (it >= maxit) return result;
  }
}

}  // namespace qnmag
