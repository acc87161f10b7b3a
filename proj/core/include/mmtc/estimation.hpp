#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mmtc/common.hpp"
#include "mmtc/link_budget.hpp"
#include "mmtc/plan.hpp"
#include "mmtc/spatial_field.hpp"

namespace mmtc {

/// Default limit on N for exact enumeration of all 2^N decode sets.
inline constexpr int kDefaultEnumerationCap = 20;

/// Exact averaging was requested for a plan with too many rows.
class EnumerationCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A decode set (bit k = slot k decoded) and its probability.
struct DecodingOutcome {
  SlotMask decoded = 0;
  double weight = 0.0;
};

struct MseReport {
  double exact = 0.0;        ///< error-averaged MSE over all decode sets
  double bound = 0.0;        ///< truncated upper bound at k_max
  int k_max = 0;
  double trace_prior = 0.0;  ///< tr(C_theta); the all-lost MSE
  /// MSE per decode set, by increasing error count then lexicographic slots.
  std::vector<std::pair<SlotMask, double>> per_subset;
};

/// Decode sets of an N-row plan grouped by error count k = 0..N, each group in
/// lexicographic order of the decoded slot indices.
std::vector<SlotMask> decode_sets_in_order(int rows);

/// p_I = prod_{i in I}(1 - PER_i) prod_{j not in I} PER_j for per-row PERs.
double decode_weight(const Vector& row_per, SlotMask decoded);

/// Replacement (sensor, bits) for one plan row.
struct RowOption {
  int sensor = 0;
  int bits = 1;
};

/// Evaluates error-averaged MSE of selection plans for one fixed prior,
/// measurement noise, quantizer margins and per-sensor PER table.
///
/// The prior need not be the unconditional C_theta: the Kalman extension passes
/// the one-step prediction covariance instead.
class MseEvaluator {
 public:
  /// `per_table` is M x B with column b-1 holding the PER at b bits.
  MseEvaluator(Matrix prior_cov, Matrix noise_cov, Vector margins, Matrix per_table);

  /// Margins from the 6-sigma rule on diag(prior) + diag(noise).
  static MseEvaluator from(const FieldModel& model, const LinkProfile& link);
  static MseEvaluator from(const Matrix& prior_cov, const Matrix& noise_cov,
                           const LinkProfile& link);

  std::size_t sensors() const noexcept { return static_cast<std::size_t>(prior_.rows()); }
  int max_bits() const noexcept { return static_cast<int>(per_.cols()); }
  double trace_prior() const noexcept { return trace_; }
  const Matrix& prior_cov() const noexcept { return prior_; }
  const Matrix& noise_cov() const noexcept { return noise_; }
  const Vector& margins() const noexcept { return margins_; }
  const Matrix& per_table() const noexcept { return per_; }

  int enumeration_cap = kDefaultEnumerationCap;

  /// PER of each plan row at its bit count.
  Vector row_per(const SelectionPlan& plan) const;
  /// Delta_k^2 / 12 of each plan row.
  Vector row_quant_noise(const SelectionPlan& plan) const;

  /// epsilon_I through a direct Cholesky solve of the |I| x |I| inner matrix.
  double subset_mse(const SelectionPlan& plan, SlotMask decoded) const;
  /// Error-averaged MSE over all 2^N decode sets.
  double averaged(const SelectionPlan& plan) const;
  /// Upper bound allowing at most `k_max` lost packets; k_max in [0, N-1].
  /// Branches whose probability falls below `weight_floor` are charged at
  /// tr(C_theta), which keeps the result an upper bound.
  double bound(const SelectionPlan& plan, int k_max, double weight_floor = 0.0) const;
  /// bound() of the plan with row `row` replaced by each option in turn. The
  /// other rows are walked once and shared by all options.
  std::vector<double> bound_row_options(const SelectionPlan& plan, std::size_t row,
                                        const std::vector<RowOption>& options, int k_max,
                                        double weight_floor = 0.0) const;
  /// Exact value and bound from one enumeration; per-subset values on request.
  MseReport report(const SelectionPlan& plan, int k_max, bool per_subset = false) const;

  /// Per error count k: sum of p_I and sum of p_I * epsilon_I over decode sets
  /// with at most `max_errors` losses. Zero-probability branches are skipped.
  struct LevelSums {
    std::vector<double> weight;
    std::vector<double> weighted_mse;
  };
  using SubsetVisitor = std::function<void(SlotMask, double weight, double mse)>;
  LevelSums accumulate(const SelectionPlan& plan, int max_errors,
                       const SubsetVisitor& visit = {}, double weight_floor = 0.0) const;

 private:
  void check_plan(const SelectionPlan& plan) const;

  Matrix prior_;
  Matrix noise_;
  Vector margins_;
  Matrix per_;
  double trace_ = 0.0;
};

/// C_theta U^T (U (C_theta + C_w + C_Delta) U^T)^{-1} (z - U mu) + mu for the
/// decoded rows of `plan`; z holds one value per decoded row in slot order.
Vector mmse_estimate(const FieldModel& model, const SelectionPlan& plan, SlotMask decoded,
                     const Vector& z_received);
/// Same, with explicit quantizer margins.
Vector mmse_estimate(const FieldModel& model, const Vector& margins, const SelectionPlan& plan,
                     SlotMask decoded, const Vector& z_received);

double mse_for_subset(const FieldModel& model, const SelectionPlan& plan, SlotMask decoded);
double averaged_mse(const FieldModel& model, const SelectionPlan& plan, const LinkProfile& link);
double bounded_mse(const FieldModel& model, const SelectionPlan& plan, const LinkProfile& link,
                   int k_max);

/// Margins S_i = 6 sqrt(prior_ii + noise_ii) for every sensor.
Vector default_margins(const Matrix& prior_cov, const Matrix& noise_cov);

}  // namespace mmtc
