#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "lordba/error.hpp"

namespace lordba {

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T without materialising the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b without materialising the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, std::span<const double> x);

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scaled(const DenseMatrix& a, double s);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
void add_inplace(DenseMatrix& a, const DenseMatrix& b, double s = 1.0);

/// diag(left) * a * diag(right); an empty span means the identity on that side.
DenseMatrix diag_scale(std::span<const double> left, const DenseMatrix& a,
                       std::span<const double> right);
DenseMatrix diag_matrix(std::span<const double> d);

double frobenius_norm(const DenseMatrix& a);
double frobenius_norm_sq(const DenseMatrix& a);
double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

bool all_finite(const DenseMatrix& a) noexcept;
bool all_finite(std::span<const double> a) noexcept;

/// Largest singular value by power iteration on a^T a.
double operator_norm(const DenseMatrix& a, std::size_t max_iter = 500, double tol = 1e-12);

// --- decompositions and solves -------------------------------------------

struct ThinSVD {
  DenseMatrix U;   // rows x k, orthonormal columns
  Vector S;        // k values, descending, non-negative
  DenseMatrix Vt;  // k x cols, orthonormal rows
};

struct SvdOptions {
  std::size_t max_sweeps = 80;
  double tolerance = -1.0;  // < 0: machine epsilon times the long dimension
};

/// Rank-k truncated SVD by one-sided Jacobi on the smaller Gram side.
/// Throws Errc::non_convergence when the sweep cap is hit.
ThinSVD thin_svd(const DenseMatrix& m, std::size_t k, const SvdOptions& options = {});

/// Extends the orthonormal columns of q to k orthonormal columns.
DenseMatrix complete_columns(const DenseMatrix& q, std::size_t k);

/// Dense U * diag(S) * Vt.
DenseMatrix svd_compose(const ThinSVD& svd);

/// Cholesky solve of g x = rhs for symmetric positive definite g.
Vector solve_spd(const DenseMatrix& g, std::span<const double> rhs);

/// In-place Cholesky factor holder for repeated solves with one matrix.
class Cholesky {
 public:
  explicit Cholesky(const DenseMatrix& g);
  Vector solve(std::span<const double> rhs) const;
  std::size_t dim() const noexcept { return lower_.rows(); }

 private:
  DenseMatrix lower_;
};

struct SymmetricEigen {
  Vector values;        // ascending
  DenseMatrix vectors;  // columns are eigenvectors
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const DenseMatrix& g, std::size_t max_sweeps = 100);

/// Relative eigenvalue cutoff used by pinv_solve.
inline constexpr double kPinvRelativeCutoff = 1e-12;

/// Minimum-norm least-squares solution g^+ rhs for symmetric PSD g.
Vector pinv_solve(const DenseMatrix& g, std::span<const double> rhs);

}  // namespace lordba
