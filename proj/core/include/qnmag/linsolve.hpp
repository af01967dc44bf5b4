#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace qnmag {

class LinearAlgebraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-compressed symmetric matrix with sorted column indices. Both
/// triangles are stored.
class SparseSpdMatrix {
 public:
  SparseSpdMatrix() = default;
  SparseSpdMatrix(std::size_t n, std::vector<std::size_t> row_ptr, std::vector<std::size_t> cols,
                  std::vector<double> values);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return cols_.size(); }
  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }

  /// Entry (i, j), zero when outside the pattern.
  double at(std::size_t i, std::size_t j) const;
  std::vector<double> diagonal() const;
  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const;

  friend bool operator==(const SparseSpdMatrix&, const SparseSpdMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

std::vector<double> matvec(const SparseSpdMatrix& a, std::span<const double> x);

enum class Preconditioner { None, Jacobi };

struct CgConfig {
  double rtol = 1e-10;
  std::size_t maxit = 0;  ///< 0 selects 10 * N
  Preconditioner preconditioner = Preconditioner::Jacobi;

  void validate() const;
};

struct CgReport {
  std::size_t iterations = 0;
  double relative_residual = 0.0;  ///< ||A x - rhs|| / ||rhs||, recomputed explicitly
  bool converged = false;
};

struct CgResult {
  std::vector<double> x;
  CgReport report;
};

/// Preconditioned conjugate gradients. Starts from `x0` when given and its
/// residual is below ||rhs||, else from zero. The tolerance stays relative to ||rhs||.
CgResult solve_cg(const SparseSpdMatrix& a, std::span<const double> rhs, const CgConfig& config,
                  std::span<const double> x0 = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace qnmag
