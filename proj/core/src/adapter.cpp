#include "lordba/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <utility>

namespace lordba {
namespace {

std::string dims(std::size_t a, std::size_t b) {
  return std::to_string(a) + "x" + std::to_string(b);
}

}  // namespace

void LoRAFactors::validate() const {
  if (A.cols() != B.cols() || A.cols() == 0) {
    throw Error(Errc::shape_mismatch, "LoRA factors: A is " + dims(A.rows(), A.cols()) +
                                          ", B is " + dims(B.rows(), B.cols()));
  }
  if (!all_finite(A) || !all_finite(B)) throw Error(Errc::non_finite, "LoRA factors");
}

ScaleEnvelope ScaleEnvelope::zeros(std::size_t n, std::size_t r, std::size_t m) {
  return {Vector(n, 0.0), Vector(r, 0.0), Vector(m, 0.0)};
}

ScaleEnvelope ScaleEnvelope::ones(std::size_t n, std::size_t r, std::size_t m) {
  return {Vector(n, 1.0), Vector(r, 1.0), Vector(m, 1.0)};
}

void LoRDBAAdapter::validate() const {
  const std::size_t n = in_features();
  const std::size_t r = carrier_rank();
  const std::size_t m = out_features();
  if (B2.rows() != r) {
    throw Error(Errc::shape_mismatch,
                "carriers " + dims(B1.rows(), B1.cols()) + " and " + dims(B2.rows(), B2.cols()));
  }
  if (envelopes.empty()) throw Error(Errc::invalid_argument, "adapter needs at least one envelope");
  if (r0_ref == 0) throw Error(Errc::invalid_argument, "reference rank must be >= 1");
  for (const ScaleEnvelope& env : envelopes) {
    if (env.alpha.size() != n || env.beta.size() != r || env.gamma.size() != m) {
      throw Error(Errc::shape_mismatch, "envelope lengths do not match N, R, M");
    }
    if (!all_finite(env.alpha) || !all_finite(env.beta) || !all_finite(env.gamma)) {
      throw Error(Errc::non_finite, "envelope has NaN/Inf");
    }
  }
  if (!B1.padding_clear() || !B2.padding_clear()) {
    throw Error(Errc::invalid_argument, "carrier padding bits set");
  }
}

DenseMatrix reconstruct_envelope(const DenseMatrix& c1, const DenseMatrix& c2,
                                 const ScaleEnvelope& env) {
  // (diag(alpha) C1 diag(beta)) (C2 diag(gamma))
  const DenseMatrix left = diag_scale(env.alpha, c1, env.beta);
  const DenseMatrix right = diag_scale({}, c2, env.gamma);
  return matmul(left, right);
}

DenseMatrix reconstruct_envelope(const SignMatrix& b1, const SignMatrix& b2,
                                 const ScaleEnvelope& env) {
  return reconstruct_envelope(b1.to_dense(), b2.to_dense(), env);
}

DenseMatrix reconstruct(const LoRDBAAdapter& adapter) {
  adapter.validate();
  const DenseMatrix c1 = adapter.B1.to_dense();
  const DenseMatrix c2 = adapter.B2.to_dense();
  DenseMatrix out(adapter.in_features(), adapter.out_features());
  for (const ScaleEnvelope& env : adapter.envelopes) add_inplace(out, reconstruct_envelope(c1, c2, env));
  return out;
}

std::uint64_t storage_bits(std::size_t n, std::size_t m, std::size_t r, std::size_t ell) {
  const std::uint64_t un = n, um = m, ur = r, ul = ell;
  return ur * (un + um) + 16 * ul * (un + ur + um);
}

std::uint64_t storage_bits(const LoRDBAAdapter& adapter) {
  return storage_bits(adapter.in_features(), adapter.out_features(), adapter.carrier_rank(),
                      adapter.envelope_rank());
}

BitsPerWeight bpw(const LoRDBAAdapter& adapter) {
  if (adapter.r0_ref == 0) throw Error(Errc::invalid_argument, "bpw: reference rank is zero");
  const double r0 = static_cast<double>(adapter.r0_ref);
  const double reference =
      r0 * static_cast<double>(adapter.in_features() + adapter.out_features());
  return {static_cast<double>(adapter.carrier_rank()) / r0,
          static_cast<double>(storage_bits(adapter)) / reference};
}

LoRDBAAdapter zero_pad(const LoRDBAAdapter& adapter) {
  LoRDBAAdapter out = adapter;
  out.envelopes.push_back(ScaleEnvelope::zeros(adapter.in_features(), adapter.carrier_rank(),
                                               adapter.out_features()));
  return out;
}

LoRAFactors gauge_fix(const LoRAFactors& factors) {
  factors.validate();
  LoRAFactors out = factors;
  for (std::size_t k = 0; k < factors.rank(); ++k) {
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < factors.A.rows(); ++i) na += factors.A(i, k) * factors.A(i, k);
    for (std::size_t j = 0; j < factors.B.rows(); ++j) nb += factors.B(j, k) * factors.B(j, k);
    if (na == 0.0 || nb == 0.0) continue;
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na == nb) continue;
    const double d = std::sqrt(nb / na);
    for (std::size_t i = 0; i < out.A.rows(); ++i) out.A(i, k) *= d;
    for (std::size_t j = 0; j < out.B.rows(); ++j) out.B(j, k) /= d;
  }
  return out;
}

DiagnosticsReport diagnose(const LoRAFactors& factors) {
  const LoRAFactors fixed = gauge_fix(factors);
  DiagnosticsReport report;

  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < fixed.rank(); ++k) {
    bool a_nonzero = false;
    bool b_nonzero = false;
    for (std::size_t i = 0; i < fixed.A.rows() && !a_nonzero; ++i) a_nonzero = fixed.A(i, k) != 0.0;
    for (std::size_t j = 0; j < fixed.B.rows() && !b_nonzero; ++j) b_nonzero = fixed.B(j, k) != 0.0;
    if (a_nonzero && b_nonzero) {
      active.push_back(k);
    } else {
      ++report.excluded_pairs;
    }
  }
  if (active.empty()) {
    throw Error(Errc::degenerate_input, "diagnose: every column pair has zero contribution");
  }

  // population mean and std of |entries| over the active columns
  auto moments = [&](const DenseMatrix& f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (const std::size_t k : active) sum += std::abs(f(i, k));
    const double count = static_cast<double>(f.rows() * active.size());
    const double mean = sum / count;
    double var = 0.0;
    for (std::size_t i = 0; i < f.rows(); ++i) {
      for (const std::size_t k : active) {
        const double dev = std::abs(f(i, k)) - mean;
        var += dev * dev;
      }
    }
    return std::pair{mean, std::sqrt(var / count)};
  };
  std::tie(report.mu_A, report.zeta_A) = moments(fixed.A);
  std::tie(report.mu_B, report.zeta_B) = moments(fixed.B);
  report.zeta = std::max(report.zeta_A, report.zeta_B);
  report.ratio = report.zeta / std::min(report.mu_A, report.mu_B);
  return report;
}

LoRDBAAdapter canonical_adapter(const SignMatrix& sigma_a, const SignMatrix& sigma_b, double mu_a,
                                double mu_b) {
  if (sigma_a.cols() != sigma_b.cols()) {
    throw Error(Errc::shape_mismatch, "canonical_adapter: sign arrays have different ranks");
  }
  const std::size_t n = sigma_a.rows();
  const std::size_t r = sigma_a.cols();
  const std::size_t m = sigma_b.rows();
  LoRDBAAdapter out;
  out.B1 = sigma_a;
  out.B2 = sigma_b.transposed();
  out.envelopes.push_back({Vector(n, 1.0), Vector(r, mu_a * mu_b), Vector(m, 1.0)});
  out.r0_ref = r;
  return out;
}

LoRDBAAdapter canonical_reconstruction(const LoRAFactors& factors, double mu_a, double mu_b) {
  factors.validate();
  return canonical_adapter(SignMatrix::from_dense(factors.A), SignMatrix::from_dense(factors.B),
                           mu_a, mu_b);
}

}  // namespace lordba
