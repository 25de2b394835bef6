#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "lordba/adapter.hpp"

namespace lordba {

enum class QATMode { full, freeze, scratch };
std::string_view qat_mode_name(QATMode mode) noexcept;
QATMode parse_qat_mode(std::string_view text);

struct QATConfig {
  QATMode mode = QATMode::full;
  double kappa = 100.0;
  std::size_t steps = 2000;
  double lr = 2e-4;
  double warmup_frac = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // Optional linear temperature ramp from kappa_start to kappa; off by default.
  bool kappa_ramp = false;
  double kappa_start = 1.0;

  void validate() const;
  /// Linear warm-up over ceil(warmup_frac * steps) steps, then cosine to zero.
  double lr_at(std::size_t step) const;
  double kappa_at(std::size_t step) const;
};

/// Regression task with a frozen base: minimise 1/2 ||Y - X (W0 + dW)||^2 / T.
struct ToyTask {
  DenseMatrix X;   // T x N
  DenseMatrix Y;   // T x M
  DenseMatrix W0;  // N x M

  std::size_t samples() const noexcept { return X.rows(); }
  void validate() const;
};

/// Trainable parameters (and, with the same layout, their gradients).
struct QATParams {
  DenseMatrix H1;  // N x R latent carriers
  DenseMatrix H2;  // R x M
  std::vector<ScaleEnvelope> envelopes;
};

struct QATState {
  QATParams params;
  QATParams first_moment;
  QATParams second_moment;
  std::size_t step = 0;
  std::vector<double> loss_history;
};

/// How the carrier map s(H) is evaluated in the forward pass.
enum class CarrierMap {
  hard,     // sign(H); backward uses the smooth-sign surrogate
  relaxed,  // tanh(kappa H) in both passes (used for gradient checks)
};

struct QATForward {
  double loss = 0.0;
  DenseMatrix Yhat;
};

QATForward qat_forward(const QATParams& params, const ToyTask& task,
                       CarrierMap map = CarrierMap::hard, double kappa = 100.0);
double base_loss(const ToyTask& task);

/// Reverse-mode gradients. Scale gradients are exact for the chosen forward;
/// carrier gradients use d s / dH = kappa (1 - tanh^2(kappa H)).
QATParams qat_backward(const QATParams& params, const ToyTask& task,
                       CarrierMap map = CarrierMap::hard, double kappa = 100.0);

/// Latent carriers at +-1/kappa with the adapter's signs.
QATState init_from_adapter(const LoRDBAAdapter& adapter, double kappa);
/// Unit-variance latents and scales from one closed-form sweep against the
/// least-squares delta of the task.
QATState init_scratch(const ToyTask& task, std::size_t carrier_rank, std::size_t envelope_rank,
                      std::uint64_t seed);

/// One decoupled-weight-decay Adam step at the given learning rate. In
/// freeze mode the carriers are left untouched.
void adam_step(QATState& state, const QATParams& grad, const QATConfig& config, double lr);

LoRDBAAdapter export_adapter(const QATParams& params, std::size_t r0_ref);

struct QATResult {
  LoRDBAAdapter adapter;
  QATState state;
  double initial_loss = 0.0;  // hard-sign loss before the first step
  double final_loss = 0.0;    // hard-sign loss of the exported adapter
};

/// Full/freeze need init; scratch ignores it and needs carrier_rank and
/// envelope_rank. Throws Errc::divergence if the loss becomes non-finite.
QATResult train(const ToyTask& task, const std::optional<LoRDBAAdapter>& init,
                const QATConfig& config, std::size_t carrier_rank = 0,
                std::size_t envelope_rank = 1);

/// l (N + R + M) in freeze mode, plus N R + R M otherwise.
std::size_t trainable_parameter_count(QATMode mode, std::size_t n, std::size_t r, std::size_t m,
                                      std::size_t ell);

struct PlantedToySpec {
  std::size_t samples = 256;  // T
  std::size_t in_features = 32;
  std::size_t out_features = 32;
  std::size_t carrier_rank = 4;
  std::size_t envelope_rank = 1;
  double base_scale = 0.1;     // std of W0 entries
  double warmup_noise = 0.25;  // relative Frobenius size of the warm-up error
  std::uint64_t seed = 0;
};

struct PlantedToy {
  ToyTask task;
  LoRDBAAdapter hidden;      // realises Y exactly
  DenseMatrix warmup_delta;  // hidden delta plus Gaussian error, the PTQ input
};

PlantedToy make_planted_toy(const PlantedToySpec& spec);

}  // namespace lordba
