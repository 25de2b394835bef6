#include "lordba/kernel.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <random>
#include <string>

#include "lordba/io.hpp"
#include "lordba/parallel.hpp"

namespace lordba {
namespace {

double row_sum(std::span<const double> row) {
  double s = 0.0;
  for (const double v : row) s += v;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

LoRDBAAdapter random_adapter(const KernelShape& s, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  LoRDBAAdapter a;
  a.B1 = SignMatrix(s.N, s.R);
  a.B2 = SignMatrix(s.R, s.M);
  for (std::size_t i = 0; i < s.N; ++i)
    for (std::size_t k = 0; k < s.R; ++k) a.B1.set(i, k, coin(rng));
  for (std::size_t k = 0; k < s.R; ++k)
    for (std::size_t j = 0; j < s.M; ++j) a.B2.set(k, j, coin(rng));
  for (std::size_t e = 0; e < s.ell; ++e) {
    ScaleEnvelope env = ScaleEnvelope::ones(s.N, s.R, s.M);
    for (double& v : env.alpha) v = scale(rng);
    for (double& v : env.beta) v = scale(rng) / static_cast<double>(s.R);
    for (double& v : env.gamma) v = scale(rng);
    a.envelopes.push_back(std::move(env));
  }
  a.r0_ref = s.R;
  return a;
}

DenseMatrix dense_branch(const DenseMatrix& x, const DenseMatrix& b1, const DenseMatrix& b2,
                         const std::vector<ScaleEnvelope>& envelopes) {
  DenseMatrix out(x.rows(), b2.cols());
  for (const ScaleEnvelope& env : envelopes) {
    const DenseMatrix h = diag_scale({}, matmul(diag_scale({}, x, env.alpha), b1), env.beta);
    add_inplace(out, diag_scale({}, matmul(h, b2), env.gamma));
  }
  return out;
}

template <typename F>
double time_ns(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  const auto stop = std::chrono::steady_clock::now();
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count());
}

}  // namespace

PackedAdapter PackedAdapter::pack(const LoRDBAAdapter& adapter) {
  adapter.validate();
  return {adapter.B1.transposed(), adapter.B2, adapter.envelopes, adapter.r0_ref};
}

LoRDBAAdapter PackedAdapter::unpack() const {
  LoRDBAAdapter out;
  out.B1 = b1_columns.transposed();
  out.B2 = b2;
  out.envelopes = envelopes;
  out.r0_ref = r0_ref;
  return out;
}

DenseMatrix sign_matmul(const DenseMatrix& x, const SignMatrix& b) {
  if (x.cols() != b.rows()) {
    throw Error(Errc::shape_mismatch, "sign_matmul: X has " + std::to_string(x.cols()) +
                                          " columns, B has " + std::to_string(b.rows()) + " rows");
  }
  const std::size_t q = b.cols();
  DenseMatrix out(x.rows(), q);
  parallel_for(x.rows(), [&](std::size_t t) {
    const auto xt = x.row(t);
    auto z = out.row(t);  // holds P until the final pass
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double xi = xt[i];
      const auto words = b.row_words(i);
      for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits != 0) {
          z[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))] += xi;
          bits &= bits - 1;
        }
      }
    }
    const double s = row_sum(xt);
    for (double& v : z) v = 2.0 * v - s;
  });
  return out;
}

DenseMatrix sign_matmul_columns(const DenseMatrix& x, const SignMatrix& b_columns) {
  if (x.cols() != b_columns.cols()) {
    throw Error(Errc::shape_mismatch, "sign_matmul_columns: X has " + std::to_string(x.cols()) +
                                          " columns, packed B has " +
                                          std::to_string(b_columns.cols()) + " rows");
  }
  DenseMatrix out(x.rows(), b_columns.rows());
  parallel_for(x.rows(), [&](std::size_t t) {
    const auto xt = x.row(t);
    const double s = row_sum(xt);
    for (std::size_t k = 0; k < b_columns.rows(); ++k) {
      const auto words = b_columns.row_words(k);
      double p = 0.0;
      for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits != 0) {
          p += xt[w * 64 + static_cast<std::size_t>(std::countr_zero(bits))];
          bits &= bits - 1;
        }
      }
      out(t, k) = 2.0 * p - s;
    }
  });
  return out;
}

DenseMatrix adapter_forward(const DenseMatrix& x, const PackedAdapter& packed) {
  const std::size_t n = packed.in_features();
  const std::size_t m = packed.out_features();
  const std::size_t t_rows = x.rows();
  if (x.cols() != n) {
    throw Error(Errc::shape_mismatch, "adapter_forward: X has " + std::to_string(x.cols()) +
                                          " columns, adapter expects " + std::to_string(n));
  }
  const std::size_t ell = packed.envelopes.size();

  DenseMatrix stacked(ell * t_rows, n);
  for (std::size_t e = 0; e < ell; ++e) {
    const Vector& alpha = packed.envelopes[e].alpha;
    for (std::size_t t = 0; t < t_rows; ++t) {
      const auto src = x.row(t);
      auto dst = stacked.row(e * t_rows + t);
      for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] * alpha[i];
    }
  }
  DenseMatrix hidden = sign_matmul_columns(stacked, packed.b1_columns);
  for (std::size_t e = 0; e < ell; ++e) {
    const Vector& beta = packed.envelopes[e].beta;
    for (std::size_t t = 0; t < t_rows; ++t) {
      auto h = hidden.row(e * t_rows + t);
      for (std::size_t k = 0; k < h.size(); ++k) h[k] *= beta[k];
    }
  }
  const DenseMatrix z = sign_matmul(hidden, packed.b2);

  DenseMatrix out(t_rows, m);
  parallel_for(t_rows, [&](std::size_t t) {
    auto o = out.row(t);
    for (std::size_t e = 0; e < ell; ++e) {
      const Vector& gamma = packed.envelopes[e].gamma;
      const auto zr = z.row(e * t_rows + t);
      for (std::size_t j = 0; j < m; ++j) o[j] += zr[j] * gamma[j];
    }
  });
  return out;
}

double bandwidth_ratio(double n, double m, double r0, double ell) {
  if (!(n >= 1.0 && m >= 1.0 && r0 >= 1.0 && ell >= 1.0)) {
    throw Error(Errc::invalid_argument, "bandwidth_ratio: arguments must be >= 1");
  }
  return 16.0 * r0 * (n + m) / (r0 * (n + m) + 16.0 * ell * (n + r0 + m));
}

std::vector<KernelShape> default_bench_shapes() {
  return {{8, 256, 16, 256, 1}, {8, 1024, 16, 1024, 1}, {8, 1024, 64, 1024, 1},
          {8, 1024, 16, 1024, 2}};
}

std::vector<KernelReport> bench(const std::vector<KernelShape>& shapes, std::size_t trials,
                                std::uint64_t seed) {
  if (trials < 3) throw Error(Errc::invalid_argument, "bench: need at least 3 trials");
  std::vector<KernelReport> reports;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const KernelShape& shape = shapes[s];
    std::mt19937_64 rng(seed + s);
    const LoRDBAAdapter adapter = random_adapter(shape, rng);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DenseMatrix x(shape.T, shape.N);
    for (double& v : x.data()) v = gauss(rng);

    const PackedAdapter packed = PackedAdapter::pack(adapter);
    const DenseMatrix b1 = adapter.B1.to_dense();
    const DenseMatrix b2 = adapter.B2.to_dense();

    KernelReport report;
    report.shape = shape;
    report.bytes_adapter = adapter_file_bytes(shape.N, shape.M, shape.R, shape.ell);
    report.bytes_fp16_equiv = 2ULL * shape.R * (shape.N + shape.M);
    report.ratio = static_cast<double>(report.bytes_fp16_equiv) /
                   static_cast<double>(report.bytes_adapter);

    std::vector<double> packed_ns;
    std::vector<double> dense_ns;
    DenseMatrix y_packed;
    DenseMatrix y_dense;
    for (std::size_t t = 0; t < trials; ++t) {
      packed_ns.push_back(time_ns([&] { y_packed = adapter_forward(x, packed); }));
      dense_ns.push_back(time_ns([&] { y_dense = dense_branch(x, b1, b2, adapter.envelopes); }));
    }
    report.t_packed_ns = median(packed_ns);
    report.t_dense_ns = median(dense_ns);
    report.max_abs_dev = max_abs_diff(y_packed, matmul(x, reconstruct(adapter)));
    reports.push_back(report);
  }
  return reports;
}

void write_csv(std::ostream& out, const std::vector<KernelReport>& reports) {
  out << "T,N,R,M,l,bytes_adapter,bytes_fp16_equiv,ratio,t_packed_ns,t_dense_ns,max_abs_dev\n";
  for (const KernelReport& r : reports) {
    out << r.shape.T << ',' << r.shape.N << ',' << r.shape.R << ',' << r.shape.M << ','
        << r.shape.ell << ',' << r.bytes_adapter << ',' << r.bytes_fp16_equiv << ',' << r.ratio
        << ',' << r.t_packed_ns << ',' << r.t_dense_ns << ',' << r.max_abs_dev << '\n';
  }
}

}  // namespace lordba
