#include <benchmark/benchmark.h>

#include <random>

#include "lordba/admm.hpp"
#include "lordba/kernel.hpp"

namespace {

using lordba::DenseMatrix;
using lordba::SignMatrix;

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = g(rng);
  return m;
}

SignMatrix random_signs(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::bernoulli_distribution coin;
  SignMatrix s(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) s.set(i, j, coin(rng));
  return s;
}

lordba::LoRDBAAdapter random_adapter(std::size_t n, std::size_t r, std::size_t m, std::size_t ell,
                                     std::mt19937_64& rng) {
  lordba::LoRDBAAdapter a;
  a.B1 = random_signs(n, r, rng);
  a.B2 = random_signs(r, m, rng);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (std::size_t e = 0; e < ell; ++e) {
    auto env = lordba::ScaleEnvelope::zeros(n, r, m);
    for (double& v : env.alpha) v = u(rng);
    for (double& v : env.beta) v = u(rng);
    for (double& v : env.gamma) v = u(rng);
    a.envelopes.push_back(env);
  }
  a.r0_ref = r;
  return a;
}

// args: T, N, R
void BM_SignMatmul(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto r = static_cast<std::size_t>(state.range(2));
  const DenseMatrix x = random_matrix(t, n, rng);
  const SignMatrix cols = random_signs(r, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lordba::sign_matmul_columns(x, cols));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t * n * r));
}
BENCHMARK(BM_SignMatmul)->Args({8, 1024, 16})->Args({8, 4096, 16})->Args({64, 1024, 64});

void BM_DenseMatmul(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto r = static_cast<std::size_t>(state.range(2));
  const DenseMatrix x = random_matrix(t, n, rng);
  const DenseMatrix b = random_signs(n, r, rng).to_dense();
  for (auto _ : state) benchmark::DoNotOptimize(lordba::matmul(x, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * t * n * r));
}
BENCHMARK(BM_DenseMatmul)->Args({8, 1024, 16})->Args({8, 4096, 16})->Args({64, 1024, 64});

// args: T, N (= M), R, l
void BM_AdapterForward(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto t = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto r = static_cast<std::size_t>(state.range(2));
  const auto ell = static_cast<std::size_t>(state.range(3));
  const auto packed = lordba::PackedAdapter::pack(random_adapter(n, r, n, ell, rng));
  const DenseMatrix x = random_matrix(t, n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(lordba::adapter_forward(x, packed));
}
BENCHMARK(BM_AdapterForward)->Args({1, 1024, 16, 1})->Args({8, 1024, 16, 1})->Args({8, 1024, 16, 2});

void BM_ScaleSweep(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto r = static_cast<std::size_t>(state.range(1));
  const DenseMatrix target = random_matrix(n, n, rng);
  const DenseMatrix c1 = random_signs(n, r, rng).to_dense();
  const DenseMatrix c2 = random_signs(r, n, rng).to_dense();
  auto envelopes = std::vector{lordba::ScaleEnvelope::ones(n, r, n)};
  for (auto _ : state) {
    lordba::scale_sweep(envelopes, c1, c2, target);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ScaleSweep)->Args({128, 8})->Args({256, 16});

}  // namespace
BENCHMARK_MAIN();
