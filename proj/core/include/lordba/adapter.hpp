#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lordba/sign_matrix.hpp"
#include "lordba/tensor.hpp"

namespace lordba {

/// Dense LoRA factors with delta W = A * B^T, A: N x r0, B: M x r0.
struct LoRAFactors {
  DenseMatrix A;
  DenseMatrix B;

  std::size_t in_features() const noexcept { return A.rows(); }
  std::size_t out_features() const noexcept { return B.rows(); }
  std::size_t rank() const noexcept { return A.cols(); }

  void validate() const;
  DenseMatrix product() const { return matmul_nt(A, B); }
};

/// One (alpha, beta, gamma) scale triple.
struct ScaleEnvelope {
  Vector alpha;  // N
  Vector beta;   // R
  Vector gamma;  // M

  static ScaleEnvelope zeros(std::size_t n, std::size_t r, std::size_t m);
  static ScaleEnvelope ones(std::size_t n, std::size_t r, std::size_t m);

  friend bool operator==(const ScaleEnvelope&, const ScaleEnvelope&) = default;
};

/// Low-rank double-binary adapter:
///   delta W = sum_i diag(alpha_i) * B1 * diag(beta_i) * B2 * diag(gamma_i)
/// with B1 in {+-1}^{N x R}, B2 in {+-1}^{R x M}.
struct LoRDBAAdapter {
  SignMatrix B1;
  SignMatrix B2;
  std::vector<ScaleEnvelope> envelopes;
  std::size_t r0_ref = 1;

  std::size_t in_features() const noexcept { return B1.rows(); }
  std::size_t carrier_rank() const noexcept { return B1.cols(); }
  std::size_t out_features() const noexcept { return B2.cols(); }
  std::size_t envelope_rank() const noexcept { return envelopes.size(); }

  /// Throws Errc::shape_mismatch / invalid_argument / non_finite on violation.
  void validate() const;

  friend bool operator==(const LoRDBAAdapter&, const LoRDBAAdapter&) = default;
};

/// Dense delta W of one envelope.
DenseMatrix reconstruct_envelope(const SignMatrix& b1, const SignMatrix& b2,
                                 const ScaleEnvelope& env);
/// Same with dense carriers (used for the continuous ADMM relaxation).
DenseMatrix reconstruct_envelope(const DenseMatrix& c1, const DenseMatrix& c2,
                                 const ScaleEnvelope& env);
DenseMatrix reconstruct(const LoRDBAAdapter& adapter);

/// R(N+M) + 16 l (N+R+M).
std::uint64_t storage_bits(std::size_t n, std::size_t m, std::size_t r, std::size_t ell);
std::uint64_t storage_bits(const LoRDBAAdapter& adapter);

struct BitsPerWeight {
  double carriers_only;  // R / r0
  double total;          // storage_bits / (r0 (N + M))
};
BitsPerWeight bpw(const LoRDBAAdapter& adapter);

/// Appends an all-zero envelope; delta W is unchanged.
LoRDBAAdapter zero_pad(const LoRDBAAdapter& adapter);

/// Column-balancing gauge: each non-zero column pair is rescaled so that
/// ||A_k|| = ||B_k||. Zero-contribution pairs are left as they are.
LoRAFactors gauge_fix(const LoRAFactors& factors);

struct DiagnosticsReport {
  double mu_A = 0.0;
  double mu_B = 0.0;
  double zeta_A = 0.0;
  double zeta_B = 0.0;
  double zeta = 0.0;   // max(zeta_A, zeta_B)
  double ratio = 0.0;  // zeta / min(mu_A, mu_B)
  std::size_t excluded_pairs = 0;
};

/// Plug-in sign-noise diagnostics, computed in the column-balancing gauge.
/// Throws Errc::degenerate_input when no column pair carries signal.
DiagnosticsReport diagnose(const LoRAFactors& factors);

/// Single-envelope adapter (sigma_A, sigma_B^T, 1, mu_A mu_B 1, 1).
/// sigma_a: N x r, sigma_b: M x r.
LoRDBAAdapter canonical_adapter(const SignMatrix& sigma_a, const SignMatrix& sigma_b, double mu_a,
                                double mu_b);

/// Observed-sign adapter: carriers sign(A), sign(B)^T with canonical scales.
LoRDBAAdapter canonical_reconstruction(const LoRAFactors& factors, double mu_a, double mu_b);

}  // namespace lordba
