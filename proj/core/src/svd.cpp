#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lordba/tensor.hpp"

namespace lordba {
namespace {

// Column-major scratch: column c occupies [c*len, (c+1)*len).
struct ColumnBlock {
  std::size_t len = 0;
  std::size_t count = 0;
  std::vector<double> data;

  double* col(std::size_t c) { return data.data() + c * len; }
  const double* col(std::size_t c) const { return data.data() + c * len; }
};

double col_dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void rotate(double* x, double* y, std::size_t n, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi - s * yi;
    y[i] = s * xi + c * yi;
  }
}

// Fills basis columns [filled, total) with unit vectors orthogonal to every
// earlier column, drawing candidates from the standard basis.
void complete_orthonormal(ColumnBlock& basis, std::size_t filled, std::size_t total) {
  std::size_t candidate = 0;
  for (std::size_t c = filled; c < total; ++c) {
    for (; candidate < basis.len; ++candidate) {
      double* v = basis.col(c);
      std::fill(v, v + basis.len, 0.0);
      v[candidate] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          const double proj = col_dot(basis.col(p), v, basis.len);
          for (std::size_t i = 0; i < basis.len; ++i) v[i] -= proj * basis.col(p)[i];
        }
      }
      const double n = std::sqrt(col_dot(v, v, basis.len));
      if (n > 0.5) {
        for (std::size_t i = 0; i < basis.len; ++i) v[i] /= n;
        ++candidate;
        break;
      }
    }
  }
}

}  // namespace

ThinSVD thin_svd(const DenseMatrix& m, std::size_t k, const SvdOptions& options) {
  const std::size_t min_dim = std::min(m.rows(), m.cols());
  if (k < 1 || k > min_dim) {
    throw Error(Errc::invalid_argument, "thin_svd: k=" + std::to_string(k) +
                                            " outside [1, " + std::to_string(min_dim) + "]");
  }
  if (!all_finite(m)) throw Error(Errc::non_finite, "thin_svd: input has NaN/Inf");

  // Work on W (p x q, p >= q) whose columns get orthogonalised.
  const bool transposed = m.rows() < m.cols();
  const std::size_t p = transposed ? m.cols() : m.rows();
  const std::size_t q = transposed ? m.rows() : m.cols();

  ColumnBlock w{p, q, std::vector<double>(p * q)};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      // column index in W is j (not transposed) or i (transposed)
      if (transposed) {
        w.col(i)[j] = m(i, j);
      } else {
        w.col(j)[i] = m(i, j);
      }
    }
  }
  ColumnBlock v{q, q, std::vector<double>(q * q, 0.0)};
  for (std::size_t c = 0; c < q; ++c) v.col(c)[c] = 1.0;

  std::vector<double> sq(q);
  for (std::size_t c = 0; c < q; ++c) sq[c] = col_dot(w.col(c), w.col(c), p);
  const double total = std::accumulate(sq.begin(), sq.end(), 0.0);
  const double negligible = total * 1e-300;
  const double tol = options.tolerance >= 0.0
                         ? options.tolerance
                         : std::numeric_limits<double>::epsilon() * static_cast<double>(p);

  bool converged = false;
  for (std::size_t sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t i = 0; i + 1 < q; ++i) {
      for (std::size_t j = i + 1; j < q; ++j) {
        const double a = sq[i];
        const double b = sq[j];
        const double c = col_dot(w.col(i), w.col(j), p);
        if (std::abs(c) <= tol * std::sqrt(a * b) || std::abs(c) <= negligible) {
          continue;
        }
        converged = false;
        const double zeta = (b - a) / (2.0 * c);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        rotate(w.col(i), w.col(j), p, cs, sn);
        rotate(v.col(i), v.col(j), q, cs, sn);
        sq[i] = col_dot(w.col(i), w.col(i), p);
        sq[j] = col_dot(w.col(j), w.col(j), p);
      }
    }
  }
  if (!converged) {
    throw Error(Errc::non_convergence,
                "thin_svd: Jacobi did not converge in " + std::to_string(options.max_sweeps) +
                    " sweeps");
  }

  std::vector<std::size_t> order(q);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sq[x] > sq[y]; });

  // Left vectors of W for the top-k columns; zero singular values get an
  // orthonormal completion.
  ColumnBlock left{p, k, std::vector<double>(p * k, 0.0)};
  ColumnBlock right{q, k, std::vector<double>(q * k, 0.0)};
  Vector s(k, 0.0);
  const double max_sigma = std::sqrt(sq[order[0]]);
  const double zero_cut = max_sigma * 1e-14 * static_cast<double>(p);
  std::size_t nonzero = 0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t src = order[r];
    std::copy(v.col(src), v.col(src) + q, right.col(r));
    const double sigma = std::sqrt(sq[src]);
    if (sigma > zero_cut && nonzero == r) {
      s[r] = sigma;
      for (std::size_t i = 0; i < p; ++i) left.col(r)[i] = w.col(src)[i] / sigma;
      ++nonzero;
    }
  }
  if (nonzero < k) complete_orthonormal(left, nonzero, k);

  ThinSVD out;
  out.S = std::move(s);
  // m = W (not transposed): U = left, V = right.  m = W^T: U = right, V = left.
  const ColumnBlock& u_cols = transposed ? right : left;
  const ColumnBlock& v_cols = transposed ? left : right;
  out.U = DenseMatrix(m.rows(), k);
  out.Vt = DenseMatrix(k, m.cols());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t i = 0; i < m.rows(); ++i) out.U(i, r) = u_cols.col(r)[i];
    for (std::size_t j = 0; j < m.cols(); ++j) out.Vt(r, j) = v_cols.col(r)[j];
  }
  return out;
}

DenseMatrix complete_columns(const DenseMatrix& q, std::size_t k) {
  if (k < q.cols() || k > q.rows()) throw Error(Errc::invalid_argument, "complete_columns: k");
  ColumnBlock basis{q.rows(), k, std::vector<double>(q.rows() * k, 0.0)};
  for (std::size_t c = 0; c < q.cols(); ++c)
    for (std::size_t i = 0; i < q.rows(); ++i) basis.col(c)[i] = q(i, c);
  complete_orthonormal(basis, q.cols(), k);
  DenseMatrix out(q.rows(), k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i = 0; i < q.rows(); ++i) out(i, c) = basis.col(c)[i];
  return out;
}

DenseMatrix svd_compose(const ThinSVD& svd) {
  return matmul(diag_scale({}, svd.U, svd.S), svd.Vt);
}

// --- SPD and PSD solves -----------------------------------------------------

Cholesky::Cholesky(const DenseMatrix& g) : lower_(g.rows(), g.cols()) {
  if (g.rows() != g.cols()) throw Error(Errc::shape_mismatch, "cholesky: matrix not square");
  const std::size_t n = g.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = g(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lower_(j, k) * lower_(j, k);
    if (!(diag > 0.0)) {
      throw Error(Errc::not_positive_definite,
                  "cholesky: non-positive pivot at column " + std::to_string(j));
    }
    const double ljj = std::sqrt(diag);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = g(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = s / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> rhs) const {
  const std::size_t n = lower_.rows();
  if (rhs.size() != n) throw Error(Errc::shape_mismatch, "cholesky solve: rhs length");
  Vector x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * x[k];
    x[i] = s / lower_(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= lower_(k, ii) * x[k];
    x[ii] = s / lower_(ii, ii);
  }
  return x;
}

Vector solve_spd(const DenseMatrix& g, std::span<const double> rhs) {
  if (g.rows() != rhs.size()) throw Error(Errc::shape_mismatch, "solve_spd: rhs length");
  const Cholesky chol(g);
  Vector x = chol.solve(rhs);
  // one step of iterative refinement
  const Vector gx = matvec(g, x);
  Vector residual(rhs.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) residual[i] = rhs[i] - gx[i];
  const Vector correction = chol.solve(residual);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += correction[i];
  if (!all_finite(x)) throw Error(Errc::non_finite, "solve_spd: non-finite solution");
  return x;
}

SymmetricEigen symmetric_eigen(const DenseMatrix& g, std::size_t max_sweeps) {
  if (g.rows() != g.cols()) throw Error(Errc::shape_mismatch, "symmetric_eigen: not square");
  const std::size_t n = g.rows();
  DenseMatrix a = g;
  DenseMatrix vecs = DenseMatrix::identity(n);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-32 * diag || off == 0.0) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t =
            std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
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
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vecs(k, p);
          const double vkq = vecs(k, q);
          vecs(k, p) = c * vkp - s * vkq;
          vecs(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
  SymmetricEigen out{Vector(n), DenseMatrix(n, n)};
  for (std::size_t r = 0; r < n; ++r) {
    out.values[r] = a(order[r], order[r]);
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, r) = vecs(k, order[r]);
  }
  return out;
}

Vector pinv_solve(const DenseMatrix& g, std::span<const double> rhs) {
  if (g.rows() != g.cols() || g.rows() != rhs.size()) {
    throw Error(Errc::shape_mismatch, "pinv_solve: shape");
  }
  const std::size_t n = g.rows();
  Vector x(n, 0.0);
  if (n == 0) return x;
  const SymmetricEigen eig = symmetric_eigen(g);
  const double lambda_max = *std::max_element(eig.values.begin(), eig.values.end());
  if (!(lambda_max > 0.0)) return x;
  const double cutoff = kPinvRelativeCutoff * lambda_max;
  for (std::size_t r = 0; r < n; ++r) {
    const double lambda = eig.values[r];
    if (lambda <= cutoff) continue;
    double proj = 0.0;
    for (std::size_t k = 0; k < n; ++k) proj += eig.vectors(k, r) * rhs[k];
    proj /= lambda;
    for (std::size_t k = 0; k < n; ++k) x[k] += proj * eig.vectors(k, r);
  }
  return x;
}

}  // namespace lordba
