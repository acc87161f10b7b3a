#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mmtc/estimation.hpp"
#include "mmtc/link_budget.hpp"
#include "mmtc/plan.hpp"
#include "mmtc/quantization.hpp"
#include "mmtc/spatial_field.hpp"

namespace mmtc {

struct OptimizerConfig {
  int k_max = 5;  ///< truncation of the bound; clipped to N-1
  int max_bits = kDefaultMaxBits;
  double power_cap = std::numeric_limits<double>::infinity();  ///< watts
  double mse_tolerance = 1e-9;  ///< relative improvement needed to accept a move
  int max_sweeps = 200;
  double per_ceiling = 1e-3;  ///< error-free baseline: largest admissible PER
  double weight_floor = 1e-15;  ///< decode branches below this probability are charged tr(C)

  void validate() const;
};

enum class SweepKind { kInitial, kRows, kBits, kJoint };
const char* to_string(SweepKind kind) noexcept;

/// Objective value after the initial plan and after every sweep.
struct OptimizerTrace {
  std::vector<double> values;
  std::vector<SelectionPlan> plans;
  std::vector<SweepKind> kinds;
  std::vector<std::int64_t> trials;  ///< candidate plans examined in the sweep
  std::vector<double> elapsed_s;     ///< wall time since the start of the search
  std::string termination;

  /// Columns: iteration,sweep,bound,plan_hash,trials,elapsed_s.
  void write_csv(std::ostream& out) const;
};

struct OptimizerResult {
  SelectionPlan plan;
  double value = 0.0;  ///< bound at the final plan
  OptimizerTrace trace;
};

/// Throws Infeasible when even the N cheapest sensors exceed the power cap.
void check_power_feasible(const Vector& tx_power, std::size_t rows, double power_cap);

/// Bound truncation actually used for an N-row plan.
int effective_k(const OptimizerConfig& config, std::size_t rows);

/// Random feasible selection of `rows` sensors, all at `bits` bits.
SelectionPlan random_feasible_plan(const Vector& tx_power, std::size_t rows, int bits,
                                   double power_cap, std::uint64_t rng_seed);

/// Alternating row and bit sweeps (selection first, then bits) until no sweep
/// improves the bound by more than the tolerance.
OptimizerResult optimize_separate(const MseEvaluator& evaluator, const Vector& tx_power,
                                  const OptimizerConfig& config, const SelectionPlan& initial);

/// Each row move jointly chooses the sensor for that row and the bit count of
/// one row of the plan: (M-N+1) N B candidates per row.
OptimizerResult optimize_joint(const MseEvaluator& evaluator, const Vector& tx_power,
                               const OptimizerConfig& config, const SelectionPlan& initial);

/// Row sweeps only; every plan row keeps the bit count it starts with and a
/// sensor swapped in inherits the bits of the row it replaces.
OptimizerResult optimize_rows(const MseEvaluator& evaluator, const Vector& tx_power,
                              const OptimizerConfig& config, const SelectionPlan& initial);

OptimizerResult optimize_separate(const FieldModel& model, const LinkProfile& link,
                                  std::size_t rows, const OptimizerConfig& config,
                                  std::uint64_t rng_seed);
OptimizerResult optimize_joint(const FieldModel& model, const LinkProfile& link,
                               std::size_t rows, const OptimizerConfig& config,
                               std::uint64_t rng_seed);

SelectionPlan baseline_random(std::size_t sensors, std::size_t rows, int bits,
                              const Vector& tx_power, double power_cap,
                              std::uint64_t rng_seed);

/// The `rows` sensors of largest gain, ties to the lower index.
SelectionPlan baseline_channel_gain(const Vector& gain, std::size_t rows, int bits);

/// Largest bit count per sensor meeting the PER ceiling, or 0 if none does.
std::vector<int> error_free_bits(const Matrix& per_table, int max_bits, double per_ceiling);

/// Bits fixed by the PER ceiling, then row sweeps over the eligible sensors.
OptimizerResult baseline_error_free(const MseEvaluator& evaluator, const Vector& tx_power,
                                    std::size_t rows, const OptimizerConfig& config,
                                    std::uint64_t rng_seed);

}  // namespace mmtc
