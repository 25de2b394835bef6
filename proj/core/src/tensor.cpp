#include "lordba/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lordba/parallel.hpp"

namespace lordba {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::non_convergence: return "non_convergence";
    case Errc::not_positive_definite: return "not_positive_definite";
    case Errc::non_finite: return "non_finite";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::divergence: return "divergence";
    case Errc::io_open_failed: return "io_open_failed";
    case Errc::io_bad_magic: return "io_bad_magic";
    case Errc::io_bad_version: return "io_bad_version";
    case Errc::io_truncated: return "io_truncated";
    case Errc::io_crc_mismatch: return "io_crc_mismatch";
    case Errc::io_shape: return "io_shape";
    case Errc::io_unrepresentable: return "io_unrepresentable";
  }
  return "unknown";
}

namespace {

std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(Errc::shape_mismatch,
                std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
  }
}

void require_finite_result(const DenseMatrix& m, const char* op) {
  if (!all_finite(m)) throw Error(Errc::non_finite, std::string(op) + " produced NaN/Inf");
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw Error(Errc::shape_mismatch, "buffer length " + std::to_string(data_.size()) +
                                          " does not match " + std::to_string(rows) + "x" +
                                          std::to_string(cols));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(Errc::shape_mismatch, "ragged row list");
    data.insert(data.end(), row.begin(), row.end());
  }
  return DenseMatrix(r, c, std::move(data));
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(Errc::shape_mismatch, "matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  parallel_for(a.rows(), [&](std::size_t i) {
    auto out_row = out.row(i);
    const auto a_row = a.row(i);
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = a_row[k];
      if (aik == 0.0) continue;
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < out_row.size(); ++j) out_row[j] += aik * b_row[j];
    }
  });
  require_finite_result(out, "matmul");
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(Errc::shape_mismatch, "matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  }
  DenseMatrix out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t i) {
    const auto a_row = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a_row, b.row(j));
  });
  require_finite_result(out, "matmul_nt");
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw Error(Errc::shape_mismatch, "matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto a_row = a.row(k);
    const auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b_row.size(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  require_finite_result(out, "matmul_tn");
  return out;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw Error(Errc::shape_mismatch, "matvec: " + shape_str(a));
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), x);
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  add_inplace(out, b);
  return out;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out = a;
  add_inplace(out, b, -1.0);
  return out;
}

void add_inplace(DenseMatrix& a, const DenseMatrix& b, double s) {
  require_same_shape(a, b, "add");
  auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += s * bd[i];
}

DenseMatrix scaled(const DenseMatrix& a, double s) {
  DenseMatrix out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "hadamard");
  DenseMatrix out = a;
  auto od = out.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  return out;
}

DenseMatrix diag_scale(std::span<const double> left, const DenseMatrix& a,
                       std::span<const double> right) {
  if ((!left.empty() && left.size() != a.rows()) || (!right.empty() && right.size() != a.cols())) {
    throw Error(Errc::shape_mismatch, "diag_scale: " + shape_str(a));
  }
  DenseMatrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = out.row(i);
    const double l = left.empty() ? 1.0 : left[i];
    for (std::size_t j = 0; j < row.size(); ++j) row[j] *= l * (right.empty() ? 1.0 : right[j]);
  }
  return out;
}

DenseMatrix diag_matrix(std::span<const double> d) {
  DenseMatrix out(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = d[i];
  return out;
}

double frobenius_norm_sq(const DenseMatrix& a) {
  const auto d = a.data();
  return std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
}

double frobenius_norm(const DenseMatrix& a) { return std::sqrt(frobenius_norm_sq(a)); }

double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "frobenius_dot");
  return dot(a.data(), b.data());
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) worst = std::max(worst, std::abs(ad[i] - bd[i]));
  return worst;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

bool all_finite(std::span<const double> a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const DenseMatrix& a) noexcept { return all_finite(a.data()); }

double operator_norm(const DenseMatrix& a, std::size_t max_iter, double tol) {
  if (a.empty()) return 0.0;
  // deterministic, non-degenerate start vector
  Vector v(a.cols());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.01 * static_cast<double>(j % 7);
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  double sigma = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Vector av = matvec(a, v);
    Vector w(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
      const auto row = a.row(i);
      for (std::size_t j = 0; j < w.size(); ++j) w[j] += row[j] * av[i];
    }
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    const double next = std::sqrt(nw);
    for (std::size_t j = 0; j < w.size(); ++j) v[j] = w[j] / nw;
    if (std::abs(next - sigma) <= tol * next) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  // Rayleigh quotient with the final unit vector
  return norm2(matvec(a, v));
}

}  // namespace lordba
