#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mmtc/estimation.hpp"
#include "mmtc/link_budget.hpp"
#include "mmtc/plan.hpp"
#include "mmtc/selection_opt.hpp"

namespace mmtc {

/// theta(t) = F(t) theta(t-1) + nu(t), nu(t) ~ N(0, C_nu(t)), for frames 1..T.
/// Entry 0 of each path belongs to frame 1 and is not used by the recursion.
struct DynamicsModel {
  std::vector<Matrix> transition;
  std::vector<Matrix> process_cov;

  std::size_t frames() const noexcept { return transition.size(); }
  void validate(std::size_t sensors) const;

  /// F = psi I and C_nu = (1 - psi^2) C_theta for every frame (stationary field).
  static DynamicsModel scaled_identity(const Matrix& prior_cov, double psi, std::size_t frames);
};

/// Per-frame field statistics plus the dynamics linking consecutive frames.
struct TemporalScenario {
  std::vector<Vector> mean;       // mu_theta(t)
  std::vector<Matrix> prior_cov;  // C_theta(t), used at frame 1 and for normalization
  std::vector<Matrix> noise_cov;  // C_w(t)
  DynamicsModel dynamics;

  std::size_t frames() const noexcept { return mean.size(); }
  std::size_t sensors() const noexcept {
    return mean.empty() ? 0 : static_cast<std::size_t>(mean.front().size());
  }
  void validate() const;

  /// The same field model in every frame with scaled-identity dynamics.
  static TemporalScenario stationary(const FieldModel& model, double psi, std::size_t frames);
};

struct KalmanState {
  Vector estimate;            // theta_hat(t|t)
  Matrix cov;                 // Sigma(t|t)
  Vector predicted_estimate;  // theta_hat(t|t-1)
  Matrix predicted_cov;       // Sigma(t|t-1)

  /// Filter start: the prediction for frame 1 is the prior itself.
  static KalmanState from_prior(const Vector& mean, const Matrix& prior_cov);
};

/// Fills the predicted fields from the previous posterior.
KalmanState predict(const KalmanState& previous, const Matrix& transition,
                    const Matrix& process_cov);

/// Kalman update with the decoded rows of `plan`. `quant_var` holds Delta^2/12
/// per plan row and `z_received` one value per decoded row in slot order.
KalmanState correct(const KalmanState& predicted, const Matrix& noise_cov,
                    const Vector& quant_var, const SelectionPlan& plan, SlotMask decoded,
                    const Vector& z_received);

/// Evaluator whose prior is the prediction covariance; margins follow the
/// 6-sigma rule on diag(Sigma(t|t-1)) + diag(C_w(t)).
MseEvaluator frame_evaluator(const Matrix& predicted_cov, const Matrix& noise_cov,
                             const Matrix& per_table);

/// Expected tr(Sigma(t|t)) over decode outcomes; truncated bound when k_max >= 0.
double frame_mse(const Matrix& predicted_cov, const Matrix& noise_cov,
                 const SelectionPlan& plan, const Matrix& per_table, int k_max = -1);

struct HorizonConfig {
  OptimizerConfig optimizer{};
  bool joint = false;        ///< joint instead of separate optimization
  bool freeze_plan = false;  ///< keep the frame-1 plan for the whole horizon
  /// Quantize with the actual mid-rise quantizer (centered at the prediction)
  /// instead of adding uniform noise of variance Delta^2/12.
  bool real_quantizer = false;
};

struct FrameRecord {
  int frame = 0;  // 1-based
  SelectionPlan plan;
  double mse = 0.0;              ///< analytic epsilon(t) (exact, or bound past the cap)
  double trace_prior = 0.0;      ///< tr(C_theta(t))
  double trace_predicted = 0.0;  ///< tr(Sigma(t|t-1))
  double trace_posterior = 0.0;  ///< tr(Sigma(t|t)) for the realized decode set
  double squared_error = 0.0;    ///< ||theta(t) - theta_hat(t|t)||^2
  SlotMask decoded = 0;

  double normalized_mse() const { return mse / trace_prior; }
};

struct HorizonResult {
  std::vector<FrameRecord> frames;

  /// Columns: frame,nmse,mse,sq_error,trace_posterior,decoded,selected,bits.
  void write_csv(std::ostream& out) const;
};

/// Frame-wise optimize / transmit / correct loop. The frame-1 plan search
/// starts from random_feasible_plan(..., plan_seed), so the first frame
/// matches a memoryless optimization started from the same seed.
HorizonResult run_horizon(const TemporalScenario& scenario, const LinkProfile& link,
                          std::size_t rows, const HorizonConfig& config,
                          std::uint64_t plan_seed, std::uint64_t sim_seed);

}  // namespace mmtc
