// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 when
// every criterion was evaluated; pass --strict to fail on any FAIL line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lordba/admm.hpp"
#include "lordba/io.hpp"
#include "lordba/kernel.hpp"
#include "lordba/qat.hpp"
#include "lordba/theory.hpp"
#include "oracles.hpp"

using namespace lordba;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

DenseMatrix sign_noise_target(std::size_t n, std::size_t m, std::size_t r, double ratio,
                              std::uint64_t seed) {
  SignNoiseModel model;
  model.N = n;
  model.M = m;
  model.r = r;
  model.noise_scale = SignNoiseModel::gaussian_scale_for_zeta(ratio);
  model.seed = seed;
  return sample_factors(model, 0).factors.product();
}

// ---------------------------------------------------------------- 1
Outcome brute_force_optimality() {
  Timer timer;
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix t = oracle::random_matrix(3, 3, rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle::to_eigen(t),
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    double best = std::numeric_limits<double>::infinity();
    for (int mask = 0; mask < 64; ++mask) {
      DenseMatrix c1(3, 1);
      DenseMatrix c2(1, 3);
      for (int i = 0; i < 3; ++i) {
        c1(i, 0) = (mask >> i & 1) ? 1.0 : -1.0;
        c2(0, i) = (mask >> (3 + i) & 1) ? 1.0 : -1.0;
      }
      // closed-form optimum for fixed signs: the leading singular pair, with
      // the sign pattern absorbed into alpha and gamma
      ScaleEnvelope e = ScaleEnvelope::zeros(3, 1, 3);
      e.beta[0] = svd.singularValues()(0);
      for (int i = 0; i < 3; ++i) {
        e.alpha[i] = svd.matrixU()(i, 0) * c1(i, 0);
        e.gamma[i] = svd.matrixV()(i, 0) * c2(0, i);
      }
      best = std::min(best, oracle::half_sq_residual(t, oracle::reconstruct_entrywise(c1, c2, {e})));
    }
    ADMMConfig c;
    c.carrier_rank = 1;
    const ADMMResult r = run_admm(t, c);
    worst = std::max(worst, r.final_objective / best);
  }
  const double secs = timer.seconds();
  return {worst <= 1.05 && secs < 10.0,
          "worst objective / optimum = " + fmt("%.6f", worst) + " (limit 1.05), " +
              fmt("%.2f", secs) + " s (limit 10)"};
}

// ---------------------------------------------------------------- 2
LoRDBAAdapter planted_adapter(std::size_t n, std::size_t m, std::size_t r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  LoRDBAAdapter a;
  a.B1 = oracle::random_signs(n, r, rng);
  a.B2 = oracle::random_signs(r, m, rng);
  ScaleEnvelope e = ScaleEnvelope::zeros(n, r, m);
  for (double& v : e.alpha) v = u(rng);
  for (double& v : e.gamma) v = u(rng);
  // geometrically separated carrier weights keep the columns identifiable
  for (std::size_t k = 0; k < r; ++k) e.beta[k] = std::pow(0.5, static_cast<double>(k)) * u(rng);
  a.envelopes = {e};
  a.r0_ref = r;
  return a;
}

Outcome planted_recovery() {
  Timer timer;
  int ok = 0;
  int total = 0;
  double worst_err = 0.0;
  std::size_t worst_freeze = 0;
  std::string failures;
  for (std::size_t r : {2, 4, 8}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const DenseMatrix t = reconstruct(planted_adapter(64, 64, r, 2000 + seed));
      ADMMConfig c;
      c.carrier_rank = r;
      const ADMMResult res = run_admm(t, c);
      const bool frozen = res.state.freeze_sweep.has_value();
      const std::size_t fs = frozen ? *res.state.freeze_sweep : c.max_sweeps;
      const bool good = res.relative_error <= 1e-6 && frozen && fs <= 10;
      ok += good ? 1 : 0;
      ++total;
      worst_err = std::max(worst_err, res.relative_error);
      worst_freeze = std::max(worst_freeze, fs);
      if (!good && failures.size() < 120) {
        failures += " R" + std::to_string(r) + "/s" + std::to_string(seed);
      }
    }
  }
  const double secs = timer.seconds();
  std::string detail = std::to_string(ok) + "/" + std::to_string(total) +
                       " recovered (rel err <= 1e-6, freeze <= 10); worst rel err " +
                       fmt("%.3g", worst_err) + ", worst freeze " + std::to_string(worst_freeze) +
                       ", " + fmt("%.1f", secs) + " s (limit 30)";
  if (!failures.empty()) detail += "; misses:" + failures;
  return {ok == total && secs < 30.0, detail};
}

// ---------------------------------------------------------------- 3
Outcome noise_scaling() {
  Timer timer;
  SignNoiseModel m;
  m.N = 64;
  m.M = 64;
  m.r = 8;
  m.seed = 3003;
  std::vector<double> grid;
  for (int k = 0; k < 6; ++k) grid.push_back(0.02 * std::pow(10.0, k / 5.0));
  const MCReport r = noise_scaling_regression(m, grid, 200, 0.15);
  const double secs = timer.seconds();
  const double slope = r.slope.value_or(0.0);
  return {std::abs(slope - 1.0) <= 0.15 && secs < 120.0,
          "slope " + fmt("%.4f", slope) + " (target 1.0 +- 0.15) over zeta/mu in [0.02, 0.2], " +
              fmt("%.1f", secs) + " s (limit 120)"};
}

// ---------------------------------------------------------------- 4
Outcome rank_curve() {
  std::string detail;
  bool pass = true;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const DenseMatrix t = sign_noise_target(128, 128, 32, 0.2, 4004 + seed);
    std::vector<double> errs;
    for (std::size_t r : {4, 8, 16, 32}) {
      ADMMConfig c;
      c.carrier_rank = r;
      errs.push_back(run_admm(t, c).relative_error);
    }
    for (std::size_t k = 1; k < errs.size(); ++k) pass = pass && errs[k] < errs[k - 1];
    detail += (seed ? "; " : "") + std::string("target ") + std::to_string(seed) + ":";
    for (const double e : errs) detail += " " + fmt("%.4f", e);
  }
  return {pass, "rel err at R = 4, 8, 16, 32 -> " + detail};
}

// ---------------------------------------------------------------- 5
Outcome sign_consistency() {
  Timer timer;
  bool pass = true;
  std::string detail;
  for (const double ratio : {2.6, 3.0, 3.5, 4.0, 5.0}) {
    SignNoiseModel m;
    m.N = 16;
    m.M = 16;
    m.r = 4;
    m.noise_scale = SignNoiseModel::gaussian_scale_for_zeta(1.0 / ratio);
    m.seed = 5005 + static_cast<std::uint64_t>(ratio * 10);
    const MCReport r = check_sign_consistency(m, 10000);
    const double p = r.scalars.at("p_flip");
    const double rate = r.scalars.at("failure_rate");
    const double slack = 3.0 * std::sqrt(std::max(p * (1.0 - p), 0.0) / 10000.0);
    const bool ok = p < 0.5 && rate <= p + slack;
    pass = pass && ok;
    detail += fmt("mu/zeta=%.1f", ratio) + fmt(" rate %.4f", rate) + fmt(" <= p_flip %.4f; ", p);
  }
  SignNoiseModel quiet;
  quiet.N = 16;
  quiet.M = 16;
  quiet.r = 4;
  quiet.noise_scale = 0.1;  // mu / std = 10
  quiet.seed = 5099;
  const MCReport q = check_sign_consistency(quiet, 10000);
  const double flips = q.scalars.at("failures");
  pass = pass && flips == 0.0;
  const double secs = timer.seconds();
  pass = pass && secs < 60.0;
  detail += "mu/std=10: " + fmt("%.0f", flips) + " flips in 10^4 trials; " + fmt("%.1f", secs) +
            " s (limit 60)";
  return {pass, detail};
}

// ---------------------------------------------------------------- 6
Outcome signal_lower_bound() {
  const MCReport r = check_signal_lowerbound(16, 16, 4, 10000, 6006);
  const double freq = r.scalars.at("event_frequency");
  const double p = 1.0 - 8.0 / 256.0;
  const double se = std::sqrt(p * (1.0 - p) / 10000.0);
  const MCReport one = check_signal_lowerbound(16, 16, 1, 10000, 6007);
  const double freq1 = one.scalars.at("event_frequency");
  const bool pass = freq >= p - 3.0 * se && freq1 == 1.0;
  return {pass, "frequency " + fmt("%.4f", freq) + " >= " + fmt("%.4f", p - 3.0 * se) +
                    " at (16,16,4); r=1 frequency " + fmt("%.4f", freq1)};
}

// ---------------------------------------------------------------- 7
Outcome kernel_equivalence() {
  std::mt19937_64 rng(7007);
  std::uniform_int_distribution<std::size_t> dim(1, 150);
  std::uniform_int_distribution<std::size_t> rank(1, 20);
  std::uniform_int_distribution<std::size_t> envs(1, 3);
  std::normal_distribution<double> g;
  double worst = 0.0;
  bool packing = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t t = dim(rng) % 16 + 1;
    const std::size_t n = dim(rng);
    const std::size_t m = dim(rng);
    const std::size_t r = rank(rng);
    const std::size_t ell = envs(rng);
    const DenseMatrix x = oracle::random_matrix(t, n, rng);
    const SignMatrix b = oracle::random_signs(n, m, rng);
    worst = std::max(worst, oracle::max_abs(sign_matmul(x, b), oracle::triple_loop(x, b.to_dense())));

    LoRDBAAdapter a;
    a.B1 = oracle::random_signs(n, r, rng);
    a.B2 = oracle::random_signs(r, m, rng);
    for (std::size_t e = 0; e < ell; ++e) {
      ScaleEnvelope env = ScaleEnvelope::zeros(n, r, m);
      for (double& v : env.alpha) v = g(rng);
      for (double& v : env.beta) v = g(rng);
      for (double& v : env.gamma) v = g(rng);
      a.envelopes.push_back(env);
    }
    a.r0_ref = r;
    const PackedAdapter p = PackedAdapter::pack(a);
    const DenseMatrix ref = oracle::triple_loop(x, oracle::reconstruct_entrywise(a));
    worst = std::max(worst, oracle::max_abs(adapter_forward(x, p), ref));
    const LoRDBAAdapter back = p.unpack();
    packing = packing && back.B1 == a.B1 && back.B2 == a.B2 && back.envelopes == a.envelopes;
    const LoRDBAAdapter decoded = decode_adapter(encode_adapter(a));
    packing = packing && decoded.B1 == a.B1 && decoded.B2 == a.B2;
  }
  return {worst <= 1e-9 && packing, "max abs deviation " + fmt("%.3g", worst) +
                                        " over 1000 cases (limit 1e-9); packing round trip " +
                                        (packing ? "bit-identical" : "MISMATCH")};
}

// ---------------------------------------------------------------- 8
Outcome storage_arithmetic() {
  auto sig3 = [](double v) {
    const double mag = std::pow(10.0, 2 - std::floor(std::log10(std::abs(v))));
    return std::round(v * mag) / mag;
  };
  const double r16 = bandwidth_ratio(1e6, 1e6, 16, 1);
  const double r64 = bandwidth_ratio(1e6, 1e6, 64, 1);
  const double rinf = bandwidth_ratio(4096, 4096, 1e12, 1);
  bool pass = sig3(r16) == 8.0 && sig3(r64) == 12.8 && sig3(rinf) == 16.0;
  bool bits = true;
  for (std::size_t n : {8, 64, 100, 4096})
    for (std::size_t r : {1, 4, 16})
      for (std::size_t ell : {1, 2}) {
        const std::size_t m = n + 3;
        const std::uint64_t formula =
            static_cast<std::uint64_t>(r) * (n + m) + 16ULL * ell * (n + r + m);
        const std::size_t padded_carriers = 64 * r * ((n + 63) / 64) + 64 * r * ((m + 63) / 64);
        const std::size_t file_bits = 8 * adapter_file_bytes(n, m, r, ell);
        const std::size_t accounted = file_bits - 8 * (kAdapterHeaderBytes + kCrcBytes) -
                                      (padded_carriers - r * (n + m));
        bits = bits && adapter_payload_bits(n, m, r, ell) == formula && accounted == formula &&
               storage_bits(n, m, r, ell) == formula;
      }
  // one encoded file checked byte for byte
  LoRDBAAdapter a;
  a.B1 = SignMatrix(8, 4);
  a.B2 = SignMatrix(4, 8);
  a.envelopes = {ScaleEnvelope::ones(8, 4, 8)};
  a.r0_ref = 4;
  bits = bits && encode_adapter(a).size() * 8 == 384 + (2 * 4 * 64 - 64) + 8 * (28 + 4);
  pass = pass && bits;
  return {pass, "ratios " + fmt("%.4f", r16) + " / " + fmt("%.4f", r64) + " / " + fmt("%.4f", rinf) +
                    " (expect 8.00 / 12.8 / 16.0); payload bits " +
                    (bits ? "match" : "DO NOT match") + " the storage formula"};
}

// ---------------------------------------------------------------- 9
double loss_with(const QATParams& p, const ToyTask& task, bool relaxed, double kappa) {
  DenseMatrix s1 = p.H1;
  DenseMatrix s2 = p.H2;
  for (double& v : s1.data()) v = relaxed ? std::tanh(kappa * v) : (v >= 0.0 ? 1.0 : -1.0);
  for (double& v : s2.data()) v = relaxed ? std::tanh(kappa * v) : (v >= 0.0 ? 1.0 : -1.0);
  DenseMatrix w = task.W0;
  add_inplace(w, oracle::reconstruct_entrywise(s1, s2, p.envelopes));
  return oracle::half_sq_residual(task.Y, oracle::triple_loop(task.X, w)) /
         static_cast<double>(task.X.rows());
}

double block_gap(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    ref += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-12);
}

Outcome gradient_checks() {
  Timer timer;
  std::mt19937_64 rng(9009);
  std::uniform_real_distribution<double> pos(0.5, 1.5);
  double worst_scale = 0.0;
  double worst_carrier = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = 3 + inst % 5;
    const std::size_t m = 2 + inst % 4;
    const std::size_t r = 1 + inst % 3;
    const std::size_t ell = 1 + inst % 2;
    ToyTask task{oracle::random_matrix(10, n, rng), oracle::random_matrix(10, m, rng),
                 oracle::random_matrix(n, m, rng, 0.1)};
    QATParams p{oracle::random_matrix(n, r, rng, 0.3), oracle::random_matrix(r, m, rng, 0.3), {}};
    for (std::size_t e = 0; e < ell; ++e) {
      ScaleEnvelope env = ScaleEnvelope::zeros(n, r, m);
      for (double& v : env.alpha) v = pos(rng);
      for (double& v : env.beta) v = pos(rng);
      for (double& v : env.gamma) v = pos(rng);
      p.envelopes.push_back(env);
    }
    const QATParams gh = qat_backward(p, task, CarrierMap::hard, 100.0);
    for (std::size_t e = 0; e < ell; ++e) {
      for (auto member : {&ScaleEnvelope::alpha, &ScaleEnvelope::beta, &ScaleEnvelope::gamma}) {
        std::vector<double>& vals = p.envelopes[e].*member;
        std::vector<double> fd(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) {
          fd[i] = oracle::central_difference(vals[i], [&] { return loss_with(p, task, false, 0.0); },
                                             1e-5);
        }
        worst_scale = std::max(worst_scale, block_gap(gh.envelopes[e].*member, fd));
      }
    }
    const double kappa = 5.0;
    const QATParams gr = qat_backward(p, task, CarrierMap::relaxed, kappa);
    for (DenseMatrix* h : {&p.H1, &p.H2}) {
      const DenseMatrix& ga = h == &p.H1 ? gr.H1 : gr.H2;
      std::vector<double> fd(h->size());
      for (std::size_t v = 0; v < h->size(); ++v) {
        fd[v] = oracle::central_difference(h->data()[v],
                                           [&] { return loss_with(p, task, true, kappa); }, 1e-6);
      }
      worst_carrier = std::max(
          worst_carrier, block_gap(std::vector<double>(ga.data().begin(), ga.data().end()), fd));
    }
  }
  const double secs = timer.seconds();
  return {worst_scale <= 1e-6 && worst_carrier <= 1e-4 && secs < 60.0,
          "worst relative gap: scales " + fmt("%.3g", worst_scale) + " (limit 1e-6), carriers " +
              fmt("%.3g", worst_carrier) + " at kappa=5 (limit 1e-4), " + fmt("%.1f", secs) +
              " s (limit 60)"};
}

// ---------------------------------------------------------------- 10
// Chosen on pilot seeds 0-9, which are disjoint from the seeds below.
constexpr double kToyLearningRate = 3e-3;

Outcome qat_over_ptq() {
  Timer timer;
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PlantedToySpec spec;
    spec.seed = 10010 + seed;
    const PlantedToy toy = make_planted_toy(spec);
    ADMMConfig ac;
    ac.carrier_rank = spec.carrier_rank;
    ac.envelope_rank = spec.envelope_rank;
    const ADMMResult ptq = run_admm(toy.warmup_delta, ac);
    QATConfig qc;
    qc.mode = QATMode::full;
    qc.lr = kToyLearningRate;
    qc.seed = seed;
    const QATResult q = train(toy.task, ptq.adapter, qc);
    ratios.push_back(q.final_loss / q.initial_loss);
  }
  const double med = median(ratios);
  const double secs = timer.seconds();
  std::string all;
  for (const double r : ratios) all += " " + fmt("%.3g", r);
  return {med <= 0.2 && secs < 300.0, "median QAT/PTQ loss ratio " + fmt("%.4f", med) +
                                          " (limit 0.2); per seed:" + all + "; " +
                                          fmt("%.1f", secs) + " s (limit 300)"};
}

// ---------------------------------------------------------------- 11
Outcome admm_identities() {
  double worst_dual = 0.0;
  bool monotone = true;
  std::size_t frozen = 0;
  std::size_t worst_freeze = 0;
  bool margins = true;
  std::string etas;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseMatrix t = sign_noise_target(64, 64, 8, 0.1, 11011 + seed);
    ADMMConfig c;
    c.carrier_rank = 8;
    const ADMMResult r = run_admm(t, c);
    for (const double d : r.state.dual_identity_history) worst_dual = std::max(worst_dual, d);

    // per-axis monotonicity of the closed-form updates on the exported carriers
    const DenseMatrix c1 = r.adapter.B1.to_dense();
    const DenseMatrix c2 = r.adapter.B2.to_dense();
    std::vector<ScaleEnvelope> envs = r.state.envelopes;
    for (auto& e : envs)
      for (double& v : e.beta) v *= 0.9;
    double prev = fitting_objective(t, c1, c2, envs);
    for (int round = 0; round < 3; ++round)
      for (ScaleAxes ax : {ScaleAxes::alpha, ScaleAxes::beta, ScaleAxes::gamma}) {
        scale_sweep(envs, c1, c2, t, ax);
        const double now = fitting_objective(t, c1, c2, envs);
        monotone = monotone && now <= prev * (1.0 + 1e-12);
        prev = now;
      }

    if (r.state.freeze_sweep) {
      ++frozen;
      worst_freeze = std::max(worst_freeze, *r.state.freeze_sweep);
      const SignMarginReport m = sign_margin(r.state);
      margins = margins && m.positive;
      etas += " " + fmt("%.3g", m.eta);
    } else {
      worst_freeze = std::max(worst_freeze, c.max_sweeps + 1);
    }
  }
  const bool pass = worst_dual <= 1e-7 && monotone && frozen == 10 && worst_freeze <= 50 && margins;
  std::string detail = "dual identity max " + fmt("%.3g", worst_dual) + " (limit 1e-7); scale axes " +
                       (monotone ? "monotone" : "NOT monotone") + "; " + std::to_string(frozen) +
                       "/10 runs froze";
  if (frozen > 0) detail += ", latest freeze " + std::to_string(worst_freeze) + " (limit 50)";
  detail += "; post-freeze eta:" + (etas.empty() ? std::string(" none") : etas);
  return {pass, detail};
}

// ---------------------------------------------------------------- 12
Outcome envelope_monotonicity() {
  std::mt19937_64 rng(12012);
  bool identical = true;
  for (int trial = 0; trial < 20; ++trial) {
    LoRDBAAdapter a;
    a.B1 = oracle::random_signs(10, 3, rng);
    a.B2 = oracle::random_signs(3, 7, rng);
    ScaleEnvelope e = ScaleEnvelope::zeros(10, 3, 7);
    std::normal_distribution<double> g;
    for (double& v : e.alpha) v = g(rng);
    for (double& v : e.beta) v = g(rng);
    for (double& v : e.gamma) v = g(rng);
    a.envelopes = {e};
    identical = identical && reconstruct(zero_pad(a)) == reconstruct(a);
  }
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix t = oracle::random_matrix(32, 32, rng);
    ADMMConfig c1;
    c1.carrier_rank = 4;
    ADMMConfig c2 = c1;
    c2.envelope_rank = 2;
    const double e1 = run_admm(t, c1).relative_error;
    const double e2 = run_admm(t, c2).relative_error;
    ok += e2 <= e1 * (1.0 + 1e-12) ? 1 : 0;
    worst = std::max(worst, e2 - e1);
  }
  return {identical && ok == 20, std::string("zero-padded reconstruction ") +
                                     (identical ? "identical" : "DIFFERS") + "; l=2 <= l=1 on " +
                                     std::to_string(ok) + "/20 targets (largest excess " +
                                     fmt("%.3g", worst) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"brute-force ADMM optimality", brute_force_optimality},
      {"planted-adapter exact recovery", planted_recovery},
      {"noise-scaling slope", noise_scaling},
      {"error decreasing in carrier rank", rank_curve},
      {"sign-consistency bound", sign_consistency},
      {"signal lower bound", signal_lower_bound},
      {"kernel equivalence", kernel_equivalence},
      {"bandwidth and storage arithmetic", storage_arithmetic},
      {"gradient checks", gradient_checks},
      {"QAT improves over PTQ", qat_over_ptq},
      {"ADMM internal identities", admm_identities},
      {"envelope monotonicity", envelope_monotonicity},
  };
  int failed = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s [%02d] %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return strict && failed > 0 ? 1 : 0;
}
