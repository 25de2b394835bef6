#include "lordba/admm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lordba/parallel.hpp"

namespace lordba {
namespace {

DenseMatrix sum_reconstruction(const DenseMatrix& c1, const DenseMatrix& c2,
                               const std::vector<ScaleEnvelope>& envelopes,
                               std::size_t skip = std::numeric_limits<std::size_t>::max()) {
  DenseMatrix out(c1.rows(), c2.cols());
  for (std::size_t e = 0; e < envelopes.size(); ++e) {
    if (e == skip) continue;
    add_inplace(out, reconstruct_envelope(c1, c2, envelopes[e]));
  }
  return out;
}

// Least-squares coefficient of target onto design, 0 for a zero design.
double scalar_fit(double cross, double design_sq) {
  return design_sq > 0.0 ? cross / design_sq : 0.0;
}

void fit_alpha(ScaleEnvelope& env, const DenseMatrix& c1, const DenseMatrix& c2,
               const DenseMatrix& target) {
  const DenseMatrix design = matmul(diag_scale({}, c1, env.beta), diag_scale({}, c2, env.gamma));
  for (std::size_t i = 0; i < design.rows(); ++i) {
    env.alpha[i] = scalar_fit(dot(target.row(i), design.row(i)), dot(design.row(i), design.row(i)));
  }
}

void fit_gamma(ScaleEnvelope& env, const DenseMatrix& c1, const DenseMatrix& c2,
               const DenseMatrix& target) {
  const DenseMatrix design = matmul(diag_scale(env.alpha, c1, env.beta), c2);
  Vector cross(design.cols(), 0.0);
  Vector sq(design.cols(), 0.0);
  for (std::size_t i = 0; i < design.rows(); ++i) {
    const auto d = design.row(i);
    const auto t = target.row(i);
    for (std::size_t j = 0; j < d.size(); ++j) {
      cross[j] += t[j] * d[j];
      sq[j] += d[j] * d[j];
    }
  }
  for (std::size_t j = 0; j < env.gamma.size(); ++j) env.gamma[j] = scalar_fit(cross[j], sq[j]);
}

void fit_beta(ScaleEnvelope& env, const DenseMatrix& c1, const DenseMatrix& c2,
              const DenseMatrix& target) {
  const DenseMatrix p = diag_scale(env.alpha, c1, {});  // N x R
  const DenseMatrix q = diag_scale({}, c2, env.gamma);  // R x M
  // G = (P^T P) o (Q Q^T), h_k = <P_k, T Q_k^T>
  const DenseMatrix gram = hadamard(matmul_tn(p, p), matmul_nt(q, q));
  const DenseMatrix pt_t = matmul_tn(p, target);  // R x M
  Vector h(q.rows());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = dot(pt_t.row(k), q.row(k));
  env.beta = pinv_solve(gram, h);
}

}  // namespace

void ADMMConfig::validate(std::size_t n, std::size_t m) const {
  if (max_sweeps < 1) throw Error(Errc::invalid_argument, "ADMM: K must be >= 1");
  if (!(tau > 1.0)) throw Error(Errc::invalid_argument, "ADMM: tau must exceed 1");
  if (!(mu > 1.0)) throw Error(Errc::invalid_argument, "ADMM: mu must exceed 1");
  if (!(rho0_scale > 0.0) || !std::isfinite(rho0_scale)) {
    throw Error(Errc::invalid_argument, "ADMM: rho0_scale must be positive and finite");
  }
  if (envelope_rank < 1) throw Error(Errc::invalid_argument, "ADMM: envelope rank must be >= 1");
  if (carrier_rank < 1 || carrier_rank > std::min(n, m)) {
    throw Error(Errc::invalid_argument, "ADMM: carrier rank " + std::to_string(carrier_rank) +
                                            " outside [1, min(N, M)=" +
                                            std::to_string(std::min(n, m)) + "]");
  }
}

double fitting_objective(const DenseMatrix& target, const DenseMatrix& c1, const DenseMatrix& c2,
                         const std::vector<ScaleEnvelope>& envelopes) {
  return 0.5 * frobenius_norm_sq(subtract(target, sum_reconstruction(c1, c2, envelopes)));
}

double fitting_objective(const DenseMatrix& target, const LoRDBAAdapter& adapter) {
  return 0.5 * frobenius_norm_sq(subtract(target, reconstruct(adapter)));
}

ADMMState svd_warm_start(const DenseMatrix& target, std::size_t carrier_rank,
                         std::size_t envelope_rank) {
  if (carrier_rank < 1 || carrier_rank > std::min(target.rows(), target.cols())) {
    throw Error(Errc::invalid_argument, "warm start: carrier rank exceeds min(N, M)");
  }
  return svd_warm_start(target, thin_svd(target, carrier_rank), carrier_rank, envelope_rank);
}

ADMMState svd_warm_start(const DenseMatrix& target, const ThinSVD& svd, std::size_t carrier_rank,
                         std::size_t envelope_rank) {
  const std::size_t n = target.rows();
  const std::size_t m = target.cols();
  const std::size_t r = carrier_rank;
  if (r < 1 || r > std::min(n, m)) {
    throw Error(Errc::invalid_argument, "warm start: carrier rank exceeds min(N, M)");
  }
  if (envelope_rank < 1) throw Error(Errc::invalid_argument, "warm start: envelope rank");
  if (svd.U.rows() != n || svd.Vt.cols() != m || svd.S.size() < r) {
    throw Error(Errc::shape_mismatch, "warm start: SVD does not match the target");
  }

  ADMMState state;
  state.U1 = DenseMatrix(n, r);
  state.U2 = DenseMatrix(r, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) state.U1(i, k) = sign_of(svd.U(i, k));
  for (std::size_t k = 0; k < r; ++k)
    for (std::size_t j = 0; j < m; ++j) state.U2(k, j) = sign_of(svd.Vt(k, j));
  state.M1 = SignMatrix::from_dense(state.U1);
  state.M2 = SignMatrix::from_dense(state.U2);
  state.M1_prev = state.M1;
  state.M2_prev = state.M2;
  state.Y1 = DenseMatrix(n, r);
  state.Y2 = DenseMatrix(r, m);

  // Contiguous descending blocks of the spectrum, one per envelope.
  for (std::size_t e = 0; e < envelope_rank; ++e) {
    ScaleEnvelope env = ScaleEnvelope::ones(n, r, m);
    const std::size_t begin = r * e / envelope_rank;
    const std::size_t end = r * (e + 1) / envelope_rank;
    for (std::size_t k = 0; k < r; ++k) env.beta[k] = (k >= begin && k < end) ? svd.S[k] : 0.0;
    state.envelopes.push_back(std::move(env));
  }
  scale_sweep(state.envelopes, state.U1, state.U2, target, ScaleAxes::alpha_gamma);

  state.rho = frobenius_norm_sq(target) / static_cast<double>(n * r + r * m);
  state.initial_objective = fitting_objective(target, state.U1, state.U2, state.envelopes);
  state.scaled_grad1 = DenseMatrix(n, r);
  state.scaled_grad2 = DenseMatrix(r, m);
  return state;
}

DenseMatrix fitting_gradient(const ADMMState& state, const DenseMatrix& target, int block) {
  const DenseMatrix residual =
      subtract(target, sum_reconstruction(state.U1, state.U2, state.envelopes));
  if (block == 1) {
    DenseMatrix grad(state.U1.rows(), state.U1.cols());
    for (const ScaleEnvelope& env : state.envelopes) {
      // -diag(alpha) E diag(gamma) U2^T diag(beta)
      const DenseMatrix term =
          matmul_nt(diag_scale(env.alpha, residual, env.gamma), state.U2);
      add_inplace(grad, diag_scale({}, term, env.beta), -1.0);
    }
    return grad;
  }
  DenseMatrix grad(state.U2.rows(), state.U2.cols());
  for (const ScaleEnvelope& env : state.envelopes) {
    // -diag(beta) U1^T diag(alpha) E diag(gamma)
    const DenseMatrix term = matmul_tn(state.U1, diag_scale(env.alpha, residual, env.gamma));
    add_inplace(grad, diag_scale(env.beta, term, {}), -1.0);
  }
  return grad;
}

void u_step(ADMMState& state, const DenseMatrix& target, int block) {
  if (block != 1 && block != 2) throw Error(Errc::invalid_argument, "u_step: block must be 1 or 2");
  const std::size_t n = state.U1.rows();
  const std::size_t r = state.U1.cols();
  const std::size_t m = state.U2.cols();
  const std::size_t ell = state.envelopes.size();
  const double rt = state.rho_tilde(block);
  if (!(rt > 0.0) || !std::isfinite(rt)) {
    throw Error(Errc::non_finite, "u_step: penalty must be positive and finite");
  }

  if (block == 1) {
    // Row i of U1 solves (C_i C_i^T + rt I) x = C_i T_i^T + rt (M1 - Y1)_i^T
    // with C_i = sum_e alpha_i^e diag(beta^e) U2 diag(gamma^e).
    std::vector<DenseMatrix> c(ell);
    std::vector<DenseMatrix> ct(ell);  // C^e T^T, R x N
    for (std::size_t e = 0; e < ell; ++e) {
      c[e] = diag_scale(state.envelopes[e].beta, state.U2, state.envelopes[e].gamma);
      ct[e] = matmul_nt(c[e], target);
    }
    std::vector<DenseMatrix> gram(ell * ell);
    for (std::size_t e = 0; e < ell; ++e)
      for (std::size_t f = 0; f < ell; ++f) gram[e * ell + f] = matmul_nt(c[e], c[f]);
    const DenseMatrix anchor = subtract(state.M1.to_dense(), state.Y1);

    parallel_for(n, [&](std::size_t i) {
      DenseMatrix sys(r, r);
      Vector rhs(r);
      for (std::size_t k = 0; k < r; ++k) rhs[k] = rt * anchor(i, k);
      for (std::size_t e = 0; e < ell; ++e) {
        const double ae = state.envelopes[e].alpha[i];
        if (ae == 0.0) continue;
        for (std::size_t k = 0; k < r; ++k) rhs[k] += ae * ct[e](k, i);
        for (std::size_t f = 0; f < ell; ++f) {
          const double w = ae * state.envelopes[f].alpha[i];
          if (w == 0.0) continue;
          add_inplace(sys, gram[e * ell + f], w);
        }
      }
      for (std::size_t k = 0; k < r; ++k) sys(k, k) += rt;
      const Vector x = solve_spd(sys, rhs);
      for (std::size_t k = 0; k < r; ++k) state.U1(i, k) = x[k];
    });
  } else {
    // Column j of U2 solves (P_j^T P_j + rt I) x = P_j^T T_j + rt (M2 - Y2)_j
    // with P_j = sum_e gamma_j^e diag(alpha^e) U1 diag(beta^e).
    std::vector<DenseMatrix> p(ell);
    std::vector<DenseMatrix> pt(ell);  // P^e^T T, R x M
    for (std::size_t e = 0; e < ell; ++e) {
      p[e] = diag_scale(state.envelopes[e].alpha, state.U1, state.envelopes[e].beta);
      pt[e] = matmul_tn(p[e], target);
    }
    std::vector<DenseMatrix> gram(ell * ell);
    for (std::size_t e = 0; e < ell; ++e)
      for (std::size_t f = 0; f < ell; ++f) gram[e * ell + f] = matmul_tn(p[e], p[f]);
    const DenseMatrix anchor = subtract(state.M2.to_dense(), state.Y2);

    parallel_for(m, [&](std::size_t j) {
      DenseMatrix sys(r, r);
      Vector rhs(r);
      for (std::size_t k = 0; k < r; ++k) rhs[k] = rt * anchor(k, j);
      for (std::size_t e = 0; e < ell; ++e) {
        const double ge = state.envelopes[e].gamma[j];
        if (ge == 0.0) continue;
        for (std::size_t k = 0; k < r; ++k) rhs[k] += ge * pt[e](k, j);
        for (std::size_t f = 0; f < ell; ++f) {
          const double w = ge * state.envelopes[f].gamma[j];
          if (w == 0.0) continue;
          add_inplace(sys, gram[e * ell + f], w);
        }
      }
      for (std::size_t k = 0; k < r; ++k) sys(k, k) += rt;
      const Vector x = solve_spd(sys, rhs);
      for (std::size_t k = 0; k < r; ++k) state.U2(k, j) = x[k];
    });
  }

  const DenseMatrix& updated = block == 1 ? state.U1 : state.U2;
  if (!all_finite(updated)) throw Error(Errc::non_finite, "u_step: penalty blow-up");
  const double nk = static_cast<double>(block == 1 ? state.n1() : state.n2());
  DenseMatrix grad = scaled(fitting_gradient(state, target, block), nk);
  (block == 1 ? state.scaled_grad1 : state.scaled_grad2) = std::move(grad);
}

void scale_sweep(std::vector<ScaleEnvelope>& envelopes, const DenseMatrix& c1,
                 const DenseMatrix& c2, const DenseMatrix& target, ScaleAxes axes) {
  for (std::size_t e = 0; e < envelopes.size(); ++e) {
    const DenseMatrix residual_target =
        envelopes.size() == 1 ? target
                              : subtract(target, sum_reconstruction(c1, c2, envelopes, e));
    ScaleEnvelope& env = envelopes[e];
    const bool all = axes == ScaleAxes::all;
    if (all || axes == ScaleAxes::alpha_gamma || axes == ScaleAxes::alpha) {
      fit_alpha(env, c1, c2, residual_target);
    }
    if (all || axes == ScaleAxes::beta) fit_beta(env, c1, c2, residual_target);
    if (all || axes == ScaleAxes::alpha_gamma || axes == ScaleAxes::gamma) {
      fit_gamma(env, c1, c2, residual_target);
    }
  }
}

void scale_sweep(ADMMState& state, const DenseMatrix& target, bool on_binary) {
  if (on_binary) {
    const DenseMatrix c1 = SignMatrix::from_dense(add(state.U1, state.Y1)).to_dense();
    const DenseMatrix c2 = SignMatrix::from_dense(add(state.U2, state.Y2)).to_dense();
    scale_sweep(state.envelopes, c1, c2, target, ScaleAxes::all);
    return;
  }
  scale_sweep(state.envelopes, state.U1, state.U2, target, ScaleAxes::all);
}

void projection_dual_step(ADMMState& state) {
  state.M1_prev = state.M1;
  state.M2_prev = state.M2;
  double margin = std::numeric_limits<double>::infinity();
  auto project = [&](DenseMatrix& u, DenseMatrix& y, SignMatrix& mk) {
    DenseMatrix z = add(u, y);
    for (const double v : z.data()) margin = std::min(margin, std::abs(v));
    mk = SignMatrix::from_dense(z);
    const DenseMatrix md = mk.to_dense();
    add_inplace(y, u);
    add_inplace(y, md, -1.0);
  };
  project(state.U1, state.Y1, state.M1);
  project(state.U2, state.Y2, state.M2);
  state.sign_margin_history.push_back(margin);
  state.carriers_changed = !(state.M1 == state.M1_prev) || !(state.M2 == state.M2_prev);
}

double dual_identity_residual(const ADMMState& state) {
  auto block_residual = [&](const DenseMatrix& y, const DenseMatrix& grad, const SignMatrix& now,
                            const SignMatrix& before) {
    const double floor = state.rho * std::sqrt(static_cast<double>(y.rows() * y.cols()));
    const DenseMatrix dm = subtract(now.to_dense(), before.to_dense());
    DenseMatrix total = scaled(y, state.rho);
    add_inplace(total, grad);
    add_inplace(total, dm, state.rho);
    const double scale = std::max(floor, state.rho * frobenius_norm(y) + frobenius_norm(grad) +
                                             state.rho * frobenius_norm(dm));
    const double absolute = frobenius_norm(total);
    return scale > 0.0 ? absolute / scale : absolute;
  };
  return std::max(block_residual(state.Y1, state.scaled_grad1, state.M1, state.M1_prev),
                  block_residual(state.Y2, state.scaled_grad2, state.M2, state.M2_prev));
}

void penalty_update(ADMMState& state, const ADMMConfig& config) {
  const DenseMatrix m1 = state.M1.to_dense();
  const DenseMatrix m2 = state.M2.to_dense();
  state.primal_residual = std::sqrt(frobenius_norm_sq(subtract(state.U1, m1)) +
                                    frobenius_norm_sq(subtract(state.U2, m2)));
  const double change = frobenius_norm(subtract(m1, state.M1_prev.to_dense())) +
                        frobenius_norm(subtract(m2, state.M2_prev.to_dense()));
  state.dual_residual = state.rho * change / static_cast<double>(state.n1() + state.n2());

  if (state.sweep < config.penalty_cutoff()) {
    double factor = 1.0;
    if (state.primal_residual > config.mu * state.dual_residual) {
      factor = config.tau;
    } else if (state.dual_residual > config.mu * state.primal_residual) {
      factor = 1.0 / config.tau;
    }
    if (factor != 1.0) {
      state.rho *= factor;
      // scaled duals Y = lambda / rho
      for (double& v : state.Y1.data()) v /= factor;
      for (double& v : state.Y2.data()) v /= factor;
    }
  }
  state.rho_history.push_back(state.rho);
}

SignMarginReport sign_margin(const ADMMState& state) {
  double eta = std::numeric_limits<double>::infinity();
  auto scan = [&](const DenseMatrix& u, const DenseMatrix& y) {
    const auto ud = u.data();
    const auto yd = y.data();
    for (std::size_t i = 0; i < ud.size(); ++i) eta = std::min(eta, std::abs(ud[i] + yd[i]));
  };
  scan(state.U1, state.Y1);
  scan(state.U2, state.Y2);
  if (!std::isfinite(eta)) eta = 0.0;
  return {eta, eta > 0.0};
}

ADMMResult run_admm(const DenseMatrix& target, const ADMMConfig& config,
                    const ThinSVD* warm_svd) {
  config.validate(target.rows(), target.cols());
  if (!all_finite(target)) throw Error(Errc::non_finite, "run_admm: target has NaN/Inf");

  ADMMResult result;
  ADMMState& state = result.state;
  state = warm_svd != nullptr
              ? svd_warm_start(target, *warm_svd, config.carrier_rank, config.envelope_rank)
              : svd_warm_start(target, config.carrier_rank, config.envelope_rank);
  if (!(state.rho > 0.0)) throw Error(Errc::degenerate_input, "run_admm: zero target");
  state.rho *= config.rho0_scale;

  std::size_t last_change = 0;
  for (std::size_t t = 0; t < config.max_sweeps; ++t) {
    state.sweep = t;
    u_step(state, target, 1);
    u_step(state, target, 2);
    scale_sweep(state, target, config.scales_on_binary);
    projection_dual_step(state);
    state.dual_identity_history.push_back(dual_identity_residual(state));
    const DenseMatrix m1 = state.M1.to_dense();
    const DenseMatrix m2 = state.M2.to_dense();
    const double objective = fitting_objective(target, m1, m2, state.envelopes);
    if (!std::isfinite(objective)) throw Error(Errc::non_finite, "run_admm: objective diverged");
    state.objective_history.push_back(objective);
    if (state.carriers_changed) last_change = t + 1;
    penalty_update(state, config);
    result.sweeps_run = t + 1;
    if (config.freeze_detect && !state.carriers_changed && t >= config.penalty_cutoff()) {
      result.frozen = true;
      break;
    }
  }
  if (result.frozen) state.freeze_sweep = last_change;

  result.adapter.B1 = state.M1;
  result.adapter.B2 = state.M2;
  result.adapter.envelopes = state.envelopes;
  result.adapter.r0_ref = config.r0_ref == 0 ? config.carrier_rank : config.r0_ref;

  const DenseMatrix m1 = state.M1.to_dense();
  const DenseMatrix m2 = state.M2.to_dense();
  double objective = fitting_objective(target, m1, m2, result.adapter.envelopes);
  for (std::size_t s = 0; s < config.final_scale_sweeps; ++s) {
    std::vector<ScaleEnvelope> trial = result.adapter.envelopes;
    scale_sweep(trial, m1, m2, target, ScaleAxes::all);
    const double next = fitting_objective(target, m1, m2, trial);
    if (!(next <= objective)) break;
    const bool stalled = objective - next <= 1e-15 * objective;
    result.adapter.envelopes = std::move(trial);
    objective = next;
    if (stalled) break;
  }
  result.final_objective = objective;
  result.relative_error = std::sqrt(2.0 * objective) / frobenius_norm(target);
  result.adapter.validate();
  return result;
}

ThinSVD factored_svd(const LoRAFactors& factors, std::size_t k) {
  factors.validate();
  const std::size_t n = factors.in_features();
  const std::size_t m = factors.out_features();
  const std::size_t r0 = factors.rank();
  if (k < 1 || k > std::min(n, m)) throw Error(Errc::invalid_argument, "factored_svd: k");
  if (r0 > std::min(n, m)) {
    return thin_svd(factors.product(), k);
  }
  // A = Ua Sa Va^T, B = Ub Sb Vb^T  =>  A B^T = Ua (Sa Va^T Vb Sb) Ub^T
  const ThinSVD sa = thin_svd(factors.A, r0);
  const ThinSVD sb = thin_svd(factors.B, r0);
  const DenseMatrix core =
      matmul(diag_scale(sa.S, sa.Vt, {}), transpose(diag_scale(sb.S, sb.Vt, {})));
  const ThinSVD sc = thin_svd(core, r0);
  const DenseMatrix u = matmul(sa.U, sc.U);              // N x r0
  const DenseMatrix v = matmul(sb.U, transpose(sc.Vt));  // M x r0

  const std::size_t kept = std::min(k, r0);
  DenseMatrix u_k(n, kept);
  DenseMatrix v_k(m, kept);
  for (std::size_t c = 0; c < kept; ++c) {
    for (std::size_t i = 0; i < n; ++i) u_k(i, c) = u(i, c);
    for (std::size_t j = 0; j < m; ++j) v_k(j, c) = v(j, c);
  }
  ThinSVD out;
  out.S.assign(k, 0.0);
  std::copy(sc.S.begin(), sc.S.begin() + static_cast<std::ptrdiff_t>(kept), out.S.begin());
  out.U = complete_columns(u_k, k);
  out.Vt = transpose(complete_columns(v_k, k));
  return out;
}

}  // namespace lordba
