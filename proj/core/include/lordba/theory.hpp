#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lordba/adapter.hpp"

namespace lordba {

enum class NoiseKind { gaussian, uniform };

/// Factor model A = mu_A sigma_A + xi_A, B = mu_B sigma_B + xi_B with
/// Rademacher (or fixed) signs and independent zero-mean residuals.
struct SignNoiseModel {
  std::size_t N = 16;
  std::size_t M = 16;
  std::size_t r = 4;
  double mu_A = 1.0;
  double mu_B = 1.0;
  NoiseKind noise = NoiseKind::gaussian;
  double noise_scale = 0.0;  // gaussian: std s; uniform: half-width a
  std::optional<SignMatrix> fixed_sigma_A;  // N x r
  std::optional<SignMatrix> fixed_sigma_B;  // M x r
  std::uint64_t seed = 0;

  void validate() const;
  /// Concrete sub-Gaussian norm stand-in: s sqrt(8/3) or a.
  double zeta() const noexcept;
  /// Gaussian std giving the requested zeta under the proxy above.
  static double gaussian_scale_for_zeta(double zeta) noexcept;
};

struct FactorSample {
  LoRAFactors factors;
  SignMatrix sigma_A;  // N x r
  SignMatrix sigma_B;  // M x r
  double zeta = 0.0;
};

FactorSample sample_factors(const SignNoiseModel& model, std::mt19937_64& rng);
/// Trial stream t of the model's seed; trials never share random state.
FactorSample sample_factors(const SignNoiseModel& model, std::uint64_t trial = 0);
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

/// The latent-sign adapter (sigma_A, sigma_B^T, 1, mu_A mu_B 1, 1).
LoRDBAAdapter latent_adapter(const SignNoiseModel& model, const FactorSample& sample);

struct MCReport {
  std::string quantity;
  std::size_t trials = 0;
  std::vector<double> grid;       // abscissa for per-point quantities, when any
  std::vector<double> empirical;  // per trial, or per grid point
  std::vector<double> bound;      // matching bound values, when defined
  double violation_rate = 0.0;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::map<std::string, double> scalars;
  std::vector<std::string> notes;
  bool passed = true;
};

/// Relative error ||A B^T - dW(theta*)|| / ||dW(theta*)|| per trial.
/// Reports the (1 - delta) quantile, the fitted constant and the side
/// condition log(6NM/delta)/r.
MCReport check_reconstruction_bound(const SignNoiseModel& model, std::size_t trials, double delta);

/// Median relative error over a grid of zeta/mu ratios and the log-log
/// slope. slope_tolerance sets the pass band around 1.
MCReport noise_scaling_regression(const SignNoiseModel& model, const std::vector<double>& ratios,
                                  std::size_t trials, double slope_tolerance = 0.15);

/// 2 N r exp(-mu_A^2/zeta^2) + 2 M r exp(-mu_B^2/zeta^2).
double flip_bound(const SignNoiseModel& model);
MCReport check_sign_consistency(const SignNoiseModel& model, std::size_t trials);

/// Z = sum_ij (sigma_A sigma_B^T)_ij^2 against N M r / 2.
MCReport check_signal_lowerbound(std::size_t n, std::size_t m, std::size_t r, std::size_t trials,
                                 std::uint64_t seed = 0);

/// Tail of the residual entry E_00 over t_grid and E[E_00^2] against
/// V = r zeta^2 (mu_A^2 + mu_B^2 + zeta^2).
MCReport check_entry_tail(const SignNoiseModel& model, std::size_t trials,
                          const std::vector<double>& t_grid);

/// Least-squares line through (x, y).
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);
double quantile(std::vector<double> values, double q);

}  // namespace lordba
