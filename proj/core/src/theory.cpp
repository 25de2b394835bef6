#include "lordba/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lordba/parallel.hpp"

namespace lordba {
namespace {

constexpr double kSqrtEightThirds = 1.6329931618554521;  // sqrt(8/3)

double draw_noise(NoiseKind kind, double scale, std::mt19937_64& rng) {
  if (scale == 0.0) return 0.0;
  if (kind == NoiseKind::gaussian) return std::normal_distribution<double>(0.0, scale)(rng);
  return std::uniform_real_distribution<double>(-scale, scale)(rng);
}

double binomial_std(double p, std::size_t trials) {
  const double q = std::clamp(p, 0.0, 1.0);
  return std::sqrt(q * (1.0 - q) / static_cast<double>(trials));
}

void require_trials(std::size_t trials) {
  if (trials == 0) throw Error(Errc::invalid_argument, "Monte-Carlo check needs trials >= 1");
}

// ||A B^T - mu_A mu_B sigma_A sigma_B^T||_F / ||mu_A mu_B sigma_A sigma_B^T||_F
double canonical_relative_error(const SignNoiseModel& model, const FactorSample& s) {
  const DenseMatrix latent = scaled(matmul_nt(s.sigma_A.to_dense(), s.sigma_B.to_dense()),
                                    model.mu_A * model.mu_B);
  const double denom = frobenius_norm(latent);
  const double num = frobenius_norm(subtract(s.factors.product(), latent));
  return denom > 0.0 ? num / denom : 0.0;
}

std::vector<double> relative_errors(const SignNoiseModel& model, std::size_t trials) {
  std::vector<double> errors(trials);
  parallel_for(trials, [&](std::size_t t) {
    errors[t] = canonical_relative_error(model, sample_factors(model, t));
  });
  return errors;
}

}  // namespace

void SignNoiseModel::validate() const {
  if (N == 0 || M == 0 || r == 0) throw Error(Errc::invalid_argument, "model sizes must be >= 1");
  if (!(mu_A > 0.0) || !(mu_B > 0.0)) throw Error(Errc::invalid_argument, "mu_A, mu_B must be > 0");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw Error(Errc::invalid_argument, "noise scale must be finite and >= 0");
  }
  if (fixed_sigma_A && (fixed_sigma_A->rows() != N || fixed_sigma_A->cols() != r)) {
    throw Error(Errc::shape_mismatch, "fixed sigma_A must be N x r");
  }
  if (fixed_sigma_B && (fixed_sigma_B->rows() != M || fixed_sigma_B->cols() != r)) {
    throw Error(Errc::shape_mismatch, "fixed sigma_B must be M x r");
  }
}

double SignNoiseModel::zeta() const noexcept {
  return noise == NoiseKind::gaussian ? noise_scale * kSqrtEightThirds : noise_scale;
}

double SignNoiseModel::gaussian_scale_for_zeta(double zeta) noexcept {
  return zeta / kSqrtEightThirds;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

FactorSample sample_factors(const SignNoiseModel& model, std::mt19937_64& rng) {
  model.validate();
  std::bernoulli_distribution coin(0.5);
  auto signs = [&](const std::optional<SignMatrix>& fixed, std::size_t rows) {
    if (fixed) return *fixed;
    SignMatrix s(rows, model.r);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t k = 0; k < model.r; ++k) s.set(i, k, coin(rng));
    return s;
  };
  FactorSample out;
  out.sigma_A = signs(model.fixed_sigma_A, model.N);
  out.sigma_B = signs(model.fixed_sigma_B, model.M);
  auto build = [&](const SignMatrix& sigma, double mu) {
    DenseMatrix f(sigma.rows(), sigma.cols());
    for (std::size_t i = 0; i < f.rows(); ++i)
      for (std::size_t k = 0; k < f.cols(); ++k)
        f(i, k) = mu * sigma(i, k) + draw_noise(model.noise, model.noise_scale, rng);
    return f;
  };
  out.factors.A = build(out.sigma_A, model.mu_A);
  out.factors.B = build(out.sigma_B, model.mu_B);
  out.zeta = model.zeta();
  return out;
}

FactorSample sample_factors(const SignNoiseModel& model, std::uint64_t trial) {
  std::mt19937_64 rng = trial_rng(model.seed, trial);
  return sample_factors(model, rng);
}

LoRDBAAdapter latent_adapter(const SignNoiseModel& model, const FactorSample& sample) {
  return canonical_adapter(sample.sigma_A, sample.sigma_B, model.mu_A, model.mu_B);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(Errc::invalid_argument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(Errc::invalid_argument, "fit_line needs at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(Errc::degenerate_input, "fit_line: all abscissae equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

MCReport check_reconstruction_bound(const SignNoiseModel& model, std::size_t trials,
                                    double delta) {
  model.validate();
  require_trials(trials);
  const double nm = static_cast<double>(model.N * model.M);
  if (!(nm > 8.0)) throw Error(Errc::invalid_argument, "theorem regime needs N M > 8");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(Errc::invalid_argument, "delta must lie in (0, 1)");
  const double zeta = model.zeta();
  if (zeta > std::max(model.mu_A, model.mu_B)) {
    throw Error(Errc::invalid_argument, "theorem regime needs zeta <= max(mu_A, mu_B)");
  }

  MCReport report;
  report.quantity = "relative_reconstruction_error";
  report.trials = trials;
  report.empirical = relative_errors(model, trials);

  const double q = quantile(report.empirical, 1.0 - delta);
  const double ratio = zeta / std::min(model.mu_A, model.mu_B);
  const double log_term = std::sqrt(std::log(2.0 * nm / delta));
  const double c_prime = ratio > 0.0 ? q / (ratio * log_term) : 0.0;
  report.bound.assign(trials, c_prime * ratio * log_term);
  std::size_t above = 0;
  for (const double e : report.empirical) above += e > report.bound.front() ? 1 : 0;
  report.violation_rate = static_cast<double>(above) / static_cast<double>(trials);

  report.scalars["delta"] = delta;
  report.scalars["zeta"] = zeta;
  report.scalars["ratio"] = ratio;
  report.scalars["quantile"] = q;
  report.scalars["c_prime_fit"] = c_prime;
  report.scalars["side_condition_log6NM_over_r"] =
      std::log(6.0 * nm / delta) / static_cast<double>(model.r);
  report.notes.push_back("the bound column uses the fitted constant; universal constants are unknown");
  report.passed = std::all_of(report.empirical.begin(), report.empirical.end(),
                              [](double e) { return std::isfinite(e); });
  if (zeta == 0.0) {
    report.passed = report.passed && std::all_of(report.empirical.begin(), report.empirical.end(),
                                                 [](double e) { return e == 0.0; });
  }
  return report;
}

MCReport noise_scaling_regression(const SignNoiseModel& model, const std::vector<double>& ratios,
                                  std::size_t trials, double slope_tolerance) {
  model.validate();
  require_trials(trials);
  if (ratios.size() < 2) throw Error(Errc::invalid_argument, "need at least two grid ratios");
  MCReport report;
  report.quantity = "median_relative_error_vs_ratio";
  report.trials = trials;
  report.grid = ratios;
  std::vector<double> lx;
  std::vector<double> ly;
  const double mu_min = std::min(model.mu_A, model.mu_B);
  for (std::size_t g = 0; g < ratios.size(); ++g) {
    if (!(ratios[g] > 0.0)) throw Error(Errc::invalid_argument, "grid ratios must be > 0");
    SignNoiseModel point = model;
    const double zeta = ratios[g] * mu_min;
    point.noise_scale =
        model.noise == NoiseKind::gaussian ? SignNoiseModel::gaussian_scale_for_zeta(zeta) : zeta;
    point.seed = model.seed + 0x9E3779B97F4A7C15ULL * (g + 1);
    const double med = quantile(relative_errors(point, trials), 0.5);
    report.empirical.push_back(med);
    lx.push_back(std::log(zeta));
    ly.push_back(std::log(med));
  }
  const auto [slope, intercept] = fit_line(lx, ly);
  report.slope = slope;
  report.intercept = intercept;
  for (const double x : lx) report.bound.push_back(std::exp(intercept + slope * x));
  report.scalars["slope_target"] = 1.0;
  report.scalars["slope_tolerance"] = slope_tolerance;
  report.passed = std::abs(slope - 1.0) <= slope_tolerance;
  report.violation_rate = report.passed ? 0.0 : 1.0;
  return report;
}

double flip_bound(const SignNoiseModel& model) {
  const double zeta = model.zeta();
  if (zeta == 0.0) return 0.0;
  const double z2 = zeta * zeta;
  return 2.0 * static_cast<double>(model.N * model.r) * std::exp(-model.mu_A * model.mu_A / z2) +
         2.0 * static_cast<double>(model.M * model.r) * std::exp(-model.mu_B * model.mu_B / z2);
}

MCReport check_sign_consistency(const SignNoiseModel& model, std::size_t trials) {
  model.validate();
  require_trials(trials);
  std::vector<double> failed(trials, 0.0);
  parallel_for(trials, [&](std::size_t t) {
    const FactorSample s = sample_factors(model, t);
    const bool consistent = SignMatrix::from_dense(s.factors.A) == s.sigma_A &&
                            SignMatrix::from_dense(s.factors.B) == s.sigma_B;
    failed[t] = consistent ? 0.0 : 1.0;
  });

  MCReport report;
  report.quantity = "sign_flip_event";
  report.trials = trials;
  report.empirical = failed;
  const double failures = std::accumulate(failed.begin(), failed.end(), 0.0);
  const double rate = failures / static_cast<double>(trials);
  const double p_flip = flip_bound(model);
  report.bound.assign(1, p_flip);
  report.violation_rate = rate;
  report.scalars["failures"] = failures;
  report.scalars["failure_rate"] = rate;
  report.scalars["p_flip"] = p_flip;
  report.scalars["consistency_lower_bound"] = std::max(0.0, 1.0 - p_flip);
  if (p_flip >= 1.0) {
    report.notes.push_back("bound vacuous");
    report.passed = true;
  } else {
    const double slack = 3.0 * binomial_std(p_flip, trials);
    report.scalars["allowed_rate"] = p_flip + slack;
    report.passed = rate <= p_flip + slack;
  }
  return report;
}

MCReport check_signal_lowerbound(std::size_t n, std::size_t m, std::size_t r, std::size_t trials,
                                 std::uint64_t seed) {
  if (n == 0 || m == 0 || r == 0) throw Error(Errc::invalid_argument, "sizes must be >= 1");
  require_trials(trials);
  SignNoiseModel model;
  model.N = n;
  model.M = m;
  model.r = r;
  model.seed = seed;
  std::vector<double> z(trials);
  parallel_for(trials, [&](std::size_t t) {
    const FactorSample s = sample_factors(model, t);
    const DenseMatrix w = matmul_nt(s.sigma_A.to_dense(), s.sigma_B.to_dense());
    z[t] = frobenius_norm_sq(w);
  });

  const double nm = static_cast<double>(n * m);
  const double dr = static_cast<double>(r);
  const double threshold = 0.5 * nm * dr;
  MCReport report;
  report.quantity = "signal_energy";
  report.trials = trials;
  report.empirical = z;
  report.bound.assign(1, threshold);
  std::size_t hits = 0;
  for (const double v : z) hits += v >= threshold ? 1 : 0;
  const double freq = static_cast<double>(hits) / static_cast<double>(trials);
  const double lower = 1.0 - 8.0 / nm;
  const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(trials);
  const double variance = 2.0 * dr * (dr - 1.0) * nm;
  const double mean_stderr = std::sqrt(variance / static_cast<double>(trials));

  report.violation_rate = 1.0 - freq;
  report.scalars["event_frequency"] = freq;
  report.scalars["frequency_lower_bound"] = lower;
  report.scalars["mean_Z"] = mean;
  report.scalars["expected_Z"] = dr * nm;
  report.scalars["var_Z"] = variance;
  const bool freq_ok = freq >= lower - 3.0 * binomial_std(lower, trials);
  const bool mean_ok = std::abs(mean - dr * nm) <= 4.0 * mean_stderr;
  report.passed = freq_ok && mean_ok;
  return report;
}

MCReport check_entry_tail(const SignNoiseModel& model, std::size_t trials,
                          const std::vector<double>& t_grid) {
  model.validate();
  require_trials(trials);
  // Only row 0 of each factor enters E_00, so sample just those entries.
  std::vector<double> entry(trials);
  parallel_for(trials, [&](std::size_t t) {
    std::mt19937_64 rng = trial_rng(model.seed, t);
    std::bernoulli_distribution coin(0.5);
    double e = 0.0;
    for (std::size_t k = 0; k < model.r; ++k) {
      const double sa = model.fixed_sigma_A ? (*model.fixed_sigma_A)(0, k) : (coin(rng) ? 1.0 : -1.0);
      const double sb = model.fixed_sigma_B ? (*model.fixed_sigma_B)(0, k) : (coin(rng) ? 1.0 : -1.0);
      const double xa = draw_noise(model.noise, model.noise_scale, rng);
      const double xb = draw_noise(model.noise, model.noise_scale, rng);
      e += model.mu_A * sa * xb + xa * model.mu_B * sb + xa * xb;
    }
    entry[t] = e;
  });

  const double zeta = model.zeta();
  const double z2 = zeta * zeta;
  const double v = static_cast<double>(model.r) * z2 *
                   (model.mu_A * model.mu_A + model.mu_B * model.mu_B + z2);
  MCReport report;
  report.quantity = "entry_tail";
  report.trials = trials;
  report.grid = t_grid;
  bool monotone = true;
  for (const double t : t_grid) {
    std::size_t above = 0;
    for (const double e : entry) above += std::abs(e) > t ? 1 : 0;
    const double tail = static_cast<double>(above) / static_cast<double>(trials);
    if (!report.empirical.empty() && t >= report.grid[report.empirical.size() - 1]) {
      monotone = monotone && tail <= report.empirical.back();
    }
    report.empirical.push_back(tail);
    // shape with the unknown constant c1 set to 1
    report.bound.push_back(
        v > 0.0 ? std::min(1.0, 6.0 * std::exp(-std::min(t * t / v, t / z2))) : (t >= 0.0 ? 0.0 : 1.0));
  }
  double second = 0.0;
  double fourth = 0.0;
  for (const double e : entry) {
    second += e * e;
    fourth += e * e * e * e;
  }
  const double dt = static_cast<double>(trials);
  second /= dt;
  const double sd = std::sqrt(std::max(0.0, fourth / dt - second * second) / dt);
  report.scalars["second_moment"] = second;
  report.scalars["V"] = v;
  report.scalars["second_moment_stderr"] = sd;
  report.scalars["moment_ratio"] = v > 0.0 ? second / v : 0.0;
  report.notes.push_back("bound column is the tail shape with c1 = 1");
  std::size_t over = 0;
  for (std::size_t i = 0; i < report.empirical.size(); ++i) over += report.empirical[i] > report.bound[i] ? 1 : 0;
  report.violation_rate =
      report.empirical.empty() ? 0.0 : static_cast<double>(over) / static_cast<double>(report.empirical.size());
  report.passed = monotone && second <= v + 3.0 * sd;
  report.scalars["tail_monotone"] = monotone ? 1.0 : 0.0;
  return report;
}

}  // namespace lordba
