#include "lordba/qat.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "lordba/admm.hpp"

namespace lordba {
namespace {

DenseMatrix carrier_values(const DenseMatrix& h, CarrierMap map, double kappa) {
  DenseMatrix out = h;
  for (double& v : out.data()) v = map == CarrierMap::hard ? sign_of(v) : std::tanh(kappa * v);
  return out;
}

DenseMatrix delta_from(const DenseMatrix& s1, const DenseMatrix& s2,
                       const std::vector<ScaleEnvelope>& envelopes) {
  DenseMatrix delta(s1.rows(), s2.cols());
  for (const ScaleEnvelope& env : envelopes) add_inplace(delta, reconstruct_envelope(s1, s2, env));
  return delta;
}

// Every trainable block as a flat span, in a fixed order shared by params,
// gradients and optimiser moments.
std::vector<std::span<double>> blocks(QATParams& p) {
  std::vector<std::span<double>> out{p.H1.data(), p.H2.data()};
  for (ScaleEnvelope& env : p.envelopes) {
    out.emplace_back(env.alpha);
    out.emplace_back(env.beta);
    out.emplace_back(env.gamma);
  }
  return out;
}

std::vector<std::span<const double>> blocks(const QATParams& p) {
  std::vector<std::span<const double>> out{p.H1.data(), p.H2.data()};
  for (const ScaleEnvelope& env : p.envelopes) {
    out.emplace_back(env.alpha);
    out.emplace_back(env.beta);
    out.emplace_back(env.gamma);
  }
  return out;
}

QATParams zeros_like(const QATParams& p) {
  QATParams z{DenseMatrix(p.H1.rows(), p.H1.cols()), DenseMatrix(p.H2.rows(), p.H2.cols()), {}};
  for (const ScaleEnvelope& env : p.envelopes) {
    z.envelopes.push_back(
        ScaleEnvelope::zeros(env.alpha.size(), env.beta.size(), env.gamma.size()));
  }
  return z;
}

QATState state_from_params(QATParams params) {
  QATState state;
  state.first_moment = zeros_like(params);
  state.second_moment = zeros_like(params);
  state.params = std::move(params);
  return state;
}

// Least-squares adapter delta: argmin ||Y - X (W0 + D)||_F.
DenseMatrix least_squares_delta(const ToyTask& task) {
  const DenseMatrix gram = matmul_tn(task.X, task.X);
  const DenseMatrix rhs = matmul_tn(task.X, subtract(task.Y, matmul(task.X, task.W0)));
  DenseMatrix out(rhs.rows(), rhs.cols());
  Vector column(rhs.rows());
  for (std::size_t j = 0; j < rhs.cols(); ++j) {
    for (std::size_t i = 0; i < rhs.rows(); ++i) column[i] = rhs(i, j);
    const Vector x = pinv_solve(gram, column);
    for (std::size_t i = 0; i < rhs.rows(); ++i) out(i, j) = x[i];
  }
  return out;
}

}  // namespace

std::string_view qat_mode_name(QATMode mode) noexcept {
  switch (mode) {
    case QATMode::full: return "full";
    case QATMode::freeze: return "freeze";
    case QATMode::scratch: return "scratch";
  }
  return "full";
}

QATMode parse_qat_mode(std::string_view text) {
  if (text == "full") return QATMode::full;
  if (text == "freeze") return QATMode::freeze;
  if (text == "scratch") return QATMode::scratch;
  throw Error(Errc::invalid_argument, "unknown QAT mode '" + std::string(text) + "'");
}

void QATConfig::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw Error(Errc::invalid_argument, "kappa must be > 0");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0)) {
    throw Error(Errc::invalid_argument, "warmup_frac must lie in [0, 1]");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(Errc::invalid_argument, "lr must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(Errc::invalid_argument, "Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw Error(Errc::invalid_argument, "Adam epsilon must be > 0");
  if (kappa_ramp && !(kappa_start > 0.0)) {
    throw Error(Errc::invalid_argument, "kappa_start must be > 0");
  }
}

double QATConfig::lr_at(std::size_t step) const {
  if (steps == 0) return 0.0;
  const auto warm = static_cast<std::size_t>(std::ceil(warmup_frac * static_cast<double>(steps)));
  if (step < warm) return lr * static_cast<double>(step + 1) / static_cast<double>(warm);
  const std::size_t tail = steps - warm;
  if (tail == 0) return 0.0;
  const double progress = static_cast<double>(step - warm) / static_cast<double>(tail);
  return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * progress));
}

double QATConfig::kappa_at(std::size_t step) const {
  if (!kappa_ramp || steps <= 1) return kappa;
  const double t = static_cast<double>(std::min(step, steps - 1)) / static_cast<double>(steps - 1);
  return kappa_start + t * (kappa - kappa_start);
}

void ToyTask::validate() const {
  if (X.rows() == 0 || X.rows() != Y.rows() || X.cols() != W0.rows() || Y.cols() != W0.cols()) {
    throw Error(Errc::shape_mismatch, "toy task: X, Y and W0 shapes disagree");
  }
}

QATForward qat_forward(const QATParams& params, const ToyTask& task, CarrierMap map,
                       double kappa) {
  task.validate();
  const DenseMatrix s1 = carrier_values(params.H1, map, kappa);
  const DenseMatrix s2 = carrier_values(params.H2, map, kappa);
  const DenseMatrix weight = add(task.W0, delta_from(s1, s2, params.envelopes));
  QATForward out;
  out.Yhat = matmul(task.X, weight);
  out.loss = 0.5 * frobenius_norm_sq(subtract(task.Y, out.Yhat)) /
             static_cast<double>(task.samples());
  return out;
}

double base_loss(const ToyTask& task) {
  task.validate();
  return 0.5 * frobenius_norm_sq(subtract(task.Y, matmul(task.X, task.W0))) /
         static_cast<double>(task.samples());
}

QATParams qat_backward(const QATParams& params, const ToyTask& task, CarrierMap map,
                       double kappa) {
  const QATForward fwd = qat_forward(params, task, map, kappa);
  // dL/d(dW) = X^T (Yhat - Y) / T
  const DenseMatrix g = scaled(matmul_tn(task.X, subtract(fwd.Yhat, task.Y)),
                               1.0 / static_cast<double>(task.samples()));
  const DenseMatrix s1 = carrier_values(params.H1, map, kappa);
  const DenseMatrix s2 = carrier_values(params.H2, map, kappa);
  const std::size_t n = s1.rows();
  const std::size_t r = s1.cols();
  const std::size_t m = s2.cols();

  QATParams grad = zeros_like(params);
  DenseMatrix ds1(n, r);
  DenseMatrix ds2(r, m);
  for (std::size_t e = 0; e < params.envelopes.size(); ++e) {
    const ScaleEnvelope& env = params.envelopes[e];
    ScaleEnvelope& genv = grad.envelopes[e];

    const DenseMatrix k = diag_scale(env.alpha, g, env.gamma);  // D_a G D_g
    const DenseMatrix ks = matmul_nt(k, s2);                    // N x R
    for (std::size_t c = 0; c < r; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += s1(i, c) * ks(i, c);
      genv.beta[c] = acc;
    }
    add_inplace(ds1, diag_scale({}, ks, env.beta));
    add_inplace(ds2, diag_scale(env.beta, matmul_tn(s1, k), {}));

    const DenseMatrix core = matmul(diag_scale({}, s1, env.beta), s2);  // S1 D_b S2
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double w = g(i, j) * core(i, j);
        acc += w * env.gamma[j];
        genv.gamma[j] += w * env.alpha[i];
      }
      genv.alpha[i] = acc;
    }
  }

  auto surrogate = [kappa](const DenseMatrix& h, const DenseMatrix& ds, DenseMatrix& out) {
    const auto hd = h.data();
    const auto dd = ds.data();
    auto od = out.data();
    for (std::size_t i = 0; i < hd.size(); ++i) {
      const double t = std::tanh(kappa * hd[i]);
      od[i] = dd[i] * kappa * (1.0 - t * t);
    }
  };
  surrogate(params.H1, ds1, grad.H1);
  surrogate(params.H2, ds2, grad.H2);
  return grad;
}

QATState init_from_adapter(const LoRDBAAdapter& adapter, double kappa) {
  adapter.validate();
  if (!(kappa > 0.0)) throw Error(Errc::invalid_argument, "kappa must be > 0");
  QATParams params{scaled(adapter.B1.to_dense(), 1.0 / kappa),
                   scaled(adapter.B2.to_dense(), 1.0 / kappa), adapter.envelopes};
  return state_from_params(std::move(params));
}

QATState init_scratch(const ToyTask& task, std::size_t carrier_rank, std::size_t envelope_rank,
                      std::uint64_t seed) {
  task.validate();
  const std::size_t n = task.W0.rows();
  const std::size_t m = task.W0.cols();
  if (carrier_rank < 1 || envelope_rank < 1) {
    throw Error(Errc::invalid_argument, "scratch init needs R >= 1 and l >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  QATParams params{DenseMatrix(n, carrier_rank), DenseMatrix(carrier_rank, m), {}};
  for (double& v : params.H1.data()) v = gauss(rng);
  for (double& v : params.H2.data()) v = gauss(rng);
  params.envelopes.assign(envelope_rank, ScaleEnvelope::ones(n, carrier_rank, m));

  const DenseMatrix c1 = carrier_values(params.H1, CarrierMap::hard, 1.0);
  const DenseMatrix c2 = carrier_values(params.H2, CarrierMap::hard, 1.0);
  scale_sweep(params.envelopes, c1, c2, least_squares_delta(task), ScaleAxes::all);
  return state_from_params(std::move(params));
}

void adam_step(QATState& state, const QATParams& grad, const QATConfig& config, double lr) {
  const auto p = blocks(state.params);
  const auto g = blocks(grad);
  const auto m1 = blocks(state.first_moment);
  const auto m2 = blocks(state.second_moment);
  if (p.size() != g.size()) throw Error(Errc::shape_mismatch, "adam_step: gradient layout");
  const double t = static_cast<double>(state.step + 1);
  const double c1 = 1.0 - std::pow(config.adam_beta1, t);
  const double c2 = 1.0 - std::pow(config.adam_beta2, t);
  const std::size_t first = config.mode == QATMode::freeze ? 2 : 0;
  for (std::size_t b = first; b < p.size(); ++b) {
    if (p[b].size() != g[b].size()) throw Error(Errc::shape_mismatch, "adam_step: block size");
    for (std::size_t i = 0; i < p[b].size(); ++i) {
      const double gi = g[b][i];
      m1[b][i] = config.adam_beta1 * m1[b][i] + (1.0 - config.adam_beta1) * gi;
      m2[b][i] = config.adam_beta2 * m2[b][i] + (1.0 - config.adam_beta2) * gi * gi;
      const double update = (m1[b][i] / c1) / (std::sqrt(m2[b][i] / c2) + config.adam_eps);
      p[b][i] -= lr * (update + config.weight_decay * p[b][i]);
    }
  }
  ++state.step;
}

LoRDBAAdapter export_adapter(const QATParams& params, std::size_t r0_ref) {
  LoRDBAAdapter out;
  out.B1 = SignMatrix::from_dense(params.H1);
  out.B2 = SignMatrix::from_dense(params.H2);
  out.envelopes = params.envelopes;
  out.r0_ref = r0_ref;
  out.validate();
  return out;
}

QATResult train(const ToyTask& task, const std::optional<LoRDBAAdapter>& init,
                const QATConfig& config, std::size_t carrier_rank, std::size_t envelope_rank) {
  config.validate();
  task.validate();
  QATResult result;
  std::size_t r0 = carrier_rank;
  if (config.mode == QATMode::scratch) {
    result.state = init_scratch(task, carrier_rank, envelope_rank, config.seed);
  } else {
    if (!init) {
      throw Error(Errc::invalid_argument,
                  std::string(qat_mode_name(config.mode)) + " mode needs an initial adapter");
    }
    if (init->in_features() != task.W0.rows() || init->out_features() != task.W0.cols()) {
      throw Error(Errc::shape_mismatch, "initial adapter does not match the task");
    }
    result.state = init_from_adapter(*init, config.kappa_at(0));
    r0 = init->r0_ref;
  }
  QATState& state = result.state;
  result.initial_loss = qat_forward(state.params, task).loss;

  for (std::size_t s = 0; s < config.steps; ++s) {
    const double kappa = config.kappa_at(s);
    const QATParams grad = qat_backward(state.params, task, CarrierMap::hard, kappa);
    state.loss_history.push_back(qat_forward(state.params, task).loss);
    adam_step(state, grad, config, config.lr_at(s));
    if (!std::isfinite(state.loss_history.back()) || !all_finite(state.params.H1) ||
        !all_finite(state.params.H2)) {
      throw Error(Errc::divergence, "QAT diverged at step " + std::to_string(s));
    }
  }
  result.adapter = export_adapter(state.params, r0);
  result.final_loss = qat_forward(state.params, task).loss;
  if (!std::isfinite(result.final_loss)) throw Error(Errc::divergence, "QAT final loss");
  state.loss_history.push_back(result.final_loss);
  return result;
}

std::size_t trainable_parameter_count(QATMode mode, std::size_t n, std::size_t r, std::size_t m,
                                      std::size_t ell) {
  const std::size_t scales = ell * (n + r + m);
  return mode == QATMode::freeze ? scales : scales + n * r + r * m;
}

PlantedToy make_planted_toy(const PlantedToySpec& spec) {
  const std::size_t n = spec.in_features;
  const std::size_t m = spec.out_features;
  const std::size_t r = spec.carrier_rank;
  if (spec.samples == 0 || n == 0 || m == 0 || r == 0 || spec.envelope_rank == 0) {
    throw Error(Errc::invalid_argument, "planted toy: all sizes must be >= 1");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);

  PlantedToy toy;
  LoRDBAAdapter& hidden = toy.hidden;
  hidden.B1 = SignMatrix(n, r);
  hidden.B2 = SignMatrix(r, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) hidden.B1.set(i, k, coin(rng));
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < m; ++j) hidden.B2.set(k, j, coin(rng));
  const double beta_scale = 1.0 / std::sqrt(static_cast<double>(r * spec.envelope_rank));
  for (std::size_t e = 0; e < spec.envelope_rank; ++e) {
    ScaleEnvelope env = ScaleEnvelope::ones(n, r, m);
    for (double& v : env.alpha) v = unit(rng);
    for (double& v : env.beta) v = unit(rng) * beta_scale;
    for (double& v : env.gamma) v = unit(rng);
    hidden.envelopes.push_back(std::move(env));
  }
  hidden.r0_ref = r;

  toy.task.X = DenseMatrix(spec.samples, n);
  for (double& v : toy.task.X.data()) v = gauss(rng);
  toy.task.W0 = DenseMatrix(n, m);
  for (double& v : toy.task.W0.data()) v = spec.base_scale * gauss(rng);
  const DenseMatrix delta = reconstruct(hidden);
  toy.task.Y = matmul(toy.task.X, add(toy.task.W0, delta));

  DenseMatrix noise(n, m);
  for (double& v : noise.data()) v = gauss(rng);
  const double nn = frobenius_norm(noise);
  toy.warmup_delta = delta;
  if (nn > 0.0) add_inplace(toy.warmup_delta, noise, spec.warmup_noise * frobenius_norm(delta) / nn);
  return toy;
}

}  // namespace lordba
