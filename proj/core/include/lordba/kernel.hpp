#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <vector>

#include "lordba/adapter.hpp"

namespace lordba {

/// Inference layout of an adapter. B1 is held column-major (row k of
/// b1_columns is column k of B1) so both products reduce over contiguous words.
struct PackedAdapter {
  SignMatrix b1_columns;  // R x N
  SignMatrix b2;          // R x M
  std::vector<ScaleEnvelope> envelopes;
  std::size_t r0_ref = 1;

  static PackedAdapter pack(const LoRDBAAdapter& adapter);
  LoRDBAAdapter unpack() const;

  std::size_t in_features() const noexcept { return b1_columns.cols(); }
  std::size_t carrier_rank() const noexcept { return b1_columns.rows(); }
  std::size_t out_features() const noexcept { return b2.cols(); }
};

/// X (T x p) times a +-1 matrix B (p x q) held row-major, without multiplies
/// on the sign edge: z = 2 P - S with P the sum over positive entries.
DenseMatrix sign_matmul(const DenseMatrix& x, const SignMatrix& b);

/// X (T x p) times B where the argument holds B^T (q x p), i.e. B packed by
/// columns. Each output reads one contiguous word run.
DenseMatrix sign_matmul_columns(const DenseMatrix& x, const SignMatrix& b_columns);

/// sum_i (((X D_alpha_i) B1) D_beta_i) B2 D_gamma_i. All envelopes are
/// stacked so each carrier is traversed once.
DenseMatrix adapter_forward(const DenseMatrix& x, const PackedAdapter& packed);

/// 16 r0 (N+M) / (r0 (N+M) + 16 l (N + r0 + M)).
double bandwidth_ratio(double n, double m, double r0, double ell);

struct KernelShape {
  std::size_t T = 1;
  std::size_t N = 1;
  std::size_t R = 1;
  std::size_t M = 1;
  std::size_t ell = 1;
};

struct KernelReport {
  KernelShape shape;
  std::uint64_t bytes_adapter = 0;     // full LBA1 container
  std::uint64_t bytes_fp16_equiv = 0;  // 2 R (N + M)
  double ratio = 0.0;                  // fp16 / adapter
  double t_packed_ns = 0.0;            // median over trials
  double t_dense_ns = 0.0;
  double max_abs_dev = 0.0;            // packed vs X * reconstruct(adapter)
};

std::vector<KernelShape> default_bench_shapes();

/// Times the packed path against the dense-carrier path on a random adapter
/// per shape. trials must be at least 3.
std::vector<KernelReport> bench(const std::vector<KernelShape>& shapes, std::size_t trials,
                                std::uint64_t seed = 0);

void write_csv(std::ostream& out, const std::vector<KernelReport>& reports);

}  // namespace lordba
