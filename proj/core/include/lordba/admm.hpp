#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lordba/adapter.hpp"
#include "lordba/tensor.hpp"

namespace lordba {

/// Scaled consensus ADMM settings for training-free compression.
struct ADMMConfig {
  std::size_t carrier_rank = 1;   // R
  std::size_t envelope_rank = 1;  // l
  std::size_t max_sweeps = 100;   // K
  double tau = 2.0;               // penalty multiplier
  double mu = 10.0;               // residual-ratio trigger
  bool freeze_detect = true;
  /// Closed-form scale sweeps on the exported binary carriers after the
  /// ADMM loop ends. 0 disables the refit.
  std::size_t final_scale_sweeps = 50;
  /// Reference LoRA rank stored in the exported adapter; 0 means R.
  std::size_t r0_ref = 0;
  /// Multiplier on the warm-start penalty ||T||^2 / (NR + RM).
  double rho0_scale = 1.0;
  /// Fit scales against the upcoming binary copies sign(U + Y) instead of U.
  bool scales_on_binary = true;

  /// Penalty is adapted only for sweeps strictly below this index.
  std::size_t penalty_cutoff() const noexcept { return max_sweeps / 2; }
  void validate(std::size_t n, std::size_t m) const;
};

struct ADMMState {
  DenseMatrix U1;  // N x R continuous copy of B1
  DenseMatrix U2;  // R x M continuous copy of B2
  SignMatrix M1;
  SignMatrix M2;
  DenseMatrix Y1;  // scaled duals
  DenseMatrix Y2;
  std::vector<ScaleEnvelope> envelopes;
  double rho = 0.0;
  std::size_t sweep = 0;  // index of the sweep being (or last) executed

  std::vector<double> objective_history;  // 1/2 ||T - dW(M, scales)||^2 after each sweep
  std::vector<double> rho_history;
  std::vector<double> dual_identity_history;  // relative residual per sweep
  std::vector<double> sign_margin_history;    // min |U^{t+1} + Y^t| per sweep
  std::optional<std::size_t> freeze_sweep;
  double initial_objective = 0.0;

  // bookkeeping between sub-steps of one sweep
  SignMatrix M1_prev;
  SignMatrix M2_prev;
  bool carriers_changed = true;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  DenseMatrix scaled_grad1;  // n1 * grad_U1 f at the Gauss-Seidel point
  DenseMatrix scaled_grad2;

  std::size_t n1() const noexcept { return U1.rows() * U1.cols(); }
  std::size_t n2() const noexcept { return U2.rows() * U2.cols(); }
  double rho_tilde(int block) const noexcept {
    return rho / static_cast<double>(block == 1 ? n1() : n2());
  }
};

/// 1/2 ||T - sum_i diag(alpha_i) C1 diag(beta_i) C2 diag(gamma_i)||_F^2.
double fitting_objective(const DenseMatrix& target, const DenseMatrix& c1, const DenseMatrix& c2,
                         const std::vector<ScaleEnvelope>& envelopes);
double fitting_objective(const DenseMatrix& target, const LoRDBAAdapter& adapter);

/// Rank-R SVD warm start with split-spectrum envelopes and
/// rho0 = ||T||_F^2 / (NR + RM). A zero target yields rho = 0.
ADMMState svd_warm_start(const DenseMatrix& target, std::size_t carrier_rank,
                         std::size_t envelope_rank);
ADMMState svd_warm_start(const DenseMatrix& target, const ThinSVD& svd, std::size_t carrier_rank,
                         std::size_t envelope_rank);

/// Exact Tikhonov least-squares update of U1 (block 1, row-decoupled) or U2
/// (block 2, column-decoupled). Also stores n_k * grad f at the new point.
void u_step(ADMMState& state, const DenseMatrix& target, int block);

/// Gradient of the fitting objective with respect to U1 (block 1) or U2.
DenseMatrix fitting_gradient(const ADMMState& state, const DenseMatrix& target, int block);

/// Which closed-form updates a sweep applies; single axes are exposed for
/// per-step monotonicity checks.
enum class ScaleAxes { all, alpha_gamma, alpha, beta, gamma };

/// One ordered alpha -> beta -> gamma pass per envelope, each envelope fit to
/// its residual target with the other envelopes held fixed.
void scale_sweep(std::vector<ScaleEnvelope>& envelopes, const DenseMatrix& c1,
                 const DenseMatrix& c2, const DenseMatrix& target,
                 ScaleAxes axes = ScaleAxes::all);
/// Scale sweep of the ADMM iteration. Carriers are the continuous copies U,
/// or sign(U + Y) when on_binary is set; the latter equals the next M.
void scale_sweep(ADMMState& state, const DenseMatrix& target, bool on_binary = true);

/// M <- sign(U + Y), Y <- Y + U - M; records whether either carrier moved.
void projection_dual_step(ADMMState& state);

/// ||rho Y_k + n_k grad f + rho (M_k^{t+1} - M_k^t)|| relative to the size of
/// its terms (floored at rho sqrt(n_k), the norm of rho M_k), maximised over
/// both blocks.
double dual_identity_residual(const ADMMState& state);

/// Residual-balancing schedule, frozen once state.sweep >= K/2.
void penalty_update(ADMMState& state, const ADMMConfig& config);

struct SignMarginReport {
  double eta = 0.0;
  bool positive = false;
};

/// min over both blocks of |U_k + Y_k|.
SignMarginReport sign_margin(const ADMMState& state);

struct ADMMResult {
  LoRDBAAdapter adapter;
  ADMMState state;
  double final_objective = 0.0;
  double relative_error = 0.0;  // ||T - dW|| / ||T||
  std::size_t sweeps_run = 0;
  bool frozen = false;  // exited through the freeze test
};

/// Full PTQ run. Throws Errc::degenerate_input on a zero target and
/// Errc::non_finite when the iteration blows up.
ADMMResult run_admm(const DenseMatrix& target, const ADMMConfig& config,
                    const ThinSVD* warm_svd = nullptr);

/// Thin SVD of A B^T computed from the factors (QR of each side), for
/// targets too large for a dense Jacobi pass.
ThinSVD factored_svd(const LoRAFactors& factors, std::size_t k);

}  // namespace lordba
