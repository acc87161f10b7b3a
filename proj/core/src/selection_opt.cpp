#include "mmtc/selection_opt.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

namespace mmtc {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kPowerSlack = 1e-12;

bool within_cap(double consumed, double cap) {
  return consumed <= cap + kPowerSlack * std::abs(cap);
}

std::vector<int> all_sensors(std::size_t m) {
  std::vector<int> v(m);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// Random feasible draw from `allowed`: sensors are visited in shuffled order and
// kept while the cheapest completion of the remaining rows still fits the cap.
std::vector<int> draw_feasible(const Vector& tx_power, std::vector<int> allowed,
                               std::size_t rows, double power_cap, std::uint64_t rng_seed) {
  if (rows == 0) throw InvalidArgument("plan must select at least one sensor");
  if (allowed.size() < rows) throw Infeasible("fewer eligible sensors than plan rows");
  std::mt19937_64 rng(rng_seed);
  std::shuffle(allowed.begin(), allowed.end(), rng);
  if (std::isinf(power_cap)) {
    allowed.resize(rows);
    return allowed;
  }
  std::vector<int> chosen;
  double consumed = 0.0;
  for (std::size_t pos = 0; pos < allowed.size() && chosen.size() < rows; ++pos) {
    const int c = allowed[pos];
    std::vector<double> rest;
    for (std::size_t q = pos + 1; q < allowed.size(); ++q) rest.push_back(tx_power(allowed[q]));
    const std::size_t need = rows - chosen.size() - 1;
    if (rest.size() < need) break;
    std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need),
                      rest.end());
    const double completion =
        std::accumulate(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(need), 0.0);
    if (within_cap(consumed + tx_power(c) + completion, power_cap)) {
      chosen.push_back(c);
      consumed += tx_power(c);
    }
  }
  if (chosen.size() < rows) throw Infeasible("no feasible selection under the power cap");
  return chosen;
}

// Shared local search. `allowed` restricts candidate sensors; `bit_moves`
// enables bit sweeps (separate) and `joint` switches to the joint neighborhood.
class LocalSearch {
 public:
  LocalSearch(const MseEvaluator& ev, const Vector& tx_power, const OptimizerConfig& cfg,
              std::vector<bool> allowed, std::vector<int> sensor_bits)
      : ev_(ev),
        power_(tx_power),
        cfg_(cfg),
        allowed_(std::move(allowed)),
        sensor_bits_(std::move(sensor_bits)),
        start_(Clock::now()) {}

  void inherit_row_bits() { inherit_row_bits_ = true; }

  OptimizerResult run(const SelectionPlan& initial, bool bit_moves, bool joint) {
    plan_ = initial;
    k_ = effective_k(cfg_, plan_.size());
    for (std::size_t r = 0; r < plan_.size(); ++r) {
      sensor_bits_[static_cast<std::size_t>(plan_.selected[r])] = plan_.bits[r];
    }
    value_ = objective(plan_);
    record(SweepKind::kInitial, 0);

    std::string reason = "max_sweeps";
    for (int sweep = 0; sweep < cfg_.max_sweeps; ++sweep) {
      bool moved = false;
      if (joint) {
        moved |= joint_sweep();
      } else {
        moved |= row_sweep();
        if (bit_moves) moved |= bit_sweep();
      }
      if (!moved) {
        reason = "converged";
        break;
      }
    }
    trace_.termination = reason;
    return {plan_, value_, std::move(trace_)};
  }

 private:
  double objective(const SelectionPlan& p) const { return ev_.bound(p, k_, cfg_.weight_floor); }

  bool improves(double candidate) const {
    return candidate < value_ - cfg_.mse_tolerance * std::abs(value_);
  }

  double consumed() const { return power_consumed(plan_, power_); }

  void record(SweepKind kind, std::int64_t trials) {
    trace_.values.push_back(value_);
    trace_.plans.push_back(plan_);
    trace_.kinds.push_back(kind);
    trace_.trials.push_back(trials);
    trace_.elapsed_s.push_back(std::chrono::duration<double>(Clock::now() - start_).count());
  }

  // Candidates for row i: the current holder and every unselected allowed
  // sensor, ascending by index.
  std::vector<int> candidates(std::size_t row) const {
    std::vector<int> out;
    for (int s = 0; s < static_cast<int>(allowed_.size()); ++s) {
      if (s == plan_.selected[row]) {
        out.push_back(s);
      } else if (allowed_[static_cast<std::size_t>(s)] && !plan_.contains(s)) {
        out.push_back(s);
      }
    }
    return out;
  }

  bool feasible_swap(std::size_t row, int c, double used) const {
    return within_cap(used - power_(plan_.selected[row]) + power_(c), cfg_.power_cap);
  }

  void accept(const SelectionPlan& p) {
    plan_ = p;
    value_ = objective(plan_);
    for (std::size_t r = 0; r < plan_.size(); ++r) {
      sensor_bits_[static_cast<std::size_t>(plan_.selected[r])] = plan_.bits[r];
    }
  }

  // Best strictly lower value among `values`; the first one wins ties.
  static std::ptrdiff_t best_of(const std::vector<double>& values, double& best_value) {
    std::ptrdiff_t best = -1;
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (values[k] < best_value) {
        best_value = values[k];
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    return best;
  }

  std::vector<double> row_options(const SelectionPlan& p, std::size_t row,
                                  const std::vector<RowOption>& options) const {
    return ev_.bound_row_options(p, row, options, k_, cfg_.weight_floor);
  }

  bool row_sweep() {
    bool moved = false;
    std::int64_t trials = 0;
    for (std::size_t i = 0; i < plan_.size(); ++i) {
      const double used = consumed();
      std::vector<RowOption> options;
      for (int c : candidates(i)) {
        ++trials;
        if (c == plan_.selected[i] || !feasible_swap(i, c, used)) continue;
        options.push_back(
            {c, inherit_row_bits_ ? plan_.bits[i] : sensor_bits_[static_cast<std::size_t>(c)]});
      }
      double best_value = value_;
      const std::ptrdiff_t k = best_of(row_options(plan_, i, options), best_value);
      if (k >= 0 && improves(best_value)) {
        SelectionPlan next = plan_;
        next.selected[i] = options[static_cast<std::size_t>(k)].sensor;
        next.bits[i] = options[static_cast<std::size_t>(k)].bits;
        accept(next);
        moved = true;
      }
    }
    record(SweepKind::kRows, trials);
    return moved;
  }

  bool bit_sweep() {
    bool moved = false;
    std::int64_t trials = 0;
    for (std::size_t i = 0; i < plan_.size(); ++i) {
      std::vector<RowOption> options;
      for (int b = 1; b <= cfg_.max_bits; ++b) {
        ++trials;
        if (b != plan_.bits[i]) options.push_back({plan_.selected[i], b});
      }
      double best_value = value_;
      const std::ptrdiff_t k = best_of(row_options(plan_, i, options), best_value);
      if (k >= 0 && improves(best_value)) {
        SelectionPlan next = plan_;
        next.bits[i] = options[static_cast<std::size_t>(k)].bits;
        accept(next);
        moved = true;
      }
    }
    record(SweepKind::kBits, trials);
    return moved;
  }

  // Row i takes candidate c, then one row j (possibly i) takes bit count b.
  bool joint_sweep() {
    bool moved = false;
    std::int64_t trials = 0;
    const std::size_t n = plan_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double used = consumed();
      SelectionPlan best;
      double best_value = value_;
      bool found = false;
      for (int c : candidates(i)) {
        trials += static_cast<std::int64_t>(n) * cfg_.max_bits;
        const bool incumbent = c == plan_.selected[i];
        if (!incumbent && !feasible_swap(i, c, used)) continue;
        SelectionPlan base = plan_;
        base.selected[i] = c;
        base.bits[i] = sensor_bits_[static_cast<std::size_t>(c)];
        for (std::size_t j = 0; j < n; ++j) {
          std::vector<RowOption> options;
          for (int b = 1; b <= cfg_.max_bits; ++b) {
            if (b == base.bits[j] && (incumbent || j != i)) continue;
            options.push_back({base.selected[j], b});
          }
          const std::ptrdiff_t k = best_of(row_options(base, j, options), best_value);
          if (k >= 0) {
            best = base;
            best.bits[j] = options[static_cast<std::size_t>(k)].bits;
            found = true;
          }
        }
      }
      if (found && improves(best_value)) {
        accept(best);
        moved = true;
      }
    }
    record(SweepKind::kJoint, trials);
    return moved;
  }

  const MseEvaluator& ev_;
  const Vector& power_;
  const OptimizerConfig& cfg_;
  std::vector<bool> allowed_;
  std::vector<int> sensor_bits_;
  Clock::time_point start_;
  SelectionPlan plan_;
  double value_ = 0.0;
  int k_ = 0;
  bool inherit_row_bits_ = false;
  OptimizerTrace trace_;
};

void check_inputs(const MseEvaluator& ev, const Vector& tx_power, const OptimizerConfig& cfg,
                  const SelectionPlan& initial) {
  cfg.validate();
  if (static_cast<std::size_t>(tx_power.size()) != ev.sensors()) {
    throw InvalidArgument("transmit power vector length must equal the sensor count");
  }
  if (cfg.max_bits > ev.max_bits()) {
    throw InvalidArgument("optimizer max_bits exceeds the PER table");
  }
  check_power_feasible(tx_power, initial.size(), cfg.power_cap);
  initial.validate(ev.sensors(), cfg.max_bits);
  if (!within_cap(power_consumed(initial, tx_power), cfg.power_cap)) {
    throw Infeasible("initial plan violates the power cap");
  }
}

}  // namespace

void OptimizerConfig::validate() const {
  if (k_max < 0) throw InvalidArgument("k_max must be nonnegative");
  if (max_bits < 1 || max_bits > kDefaultMaxBits) throw InvalidArgument("max_bits out of range");
  if (!(power_cap > 0.0)) throw InvalidArgument("power cap must be positive");
  if (!(mse_tolerance >= 0.0)) throw InvalidArgument("tolerance must be nonnegative");
  if (max_sweeps < 1) throw InvalidArgument("max_sweeps must be at least 1");
  if (!(weight_floor >= 0.0 && weight_floor < 1.0)) {
    throw InvalidArgument("weight floor must lie in [0, 1)");
  }
  if (!(per_ceiling >= 0.0 && per_ceiling <= 1.0)) {
    throw InvalidArgument("PER ceiling must lie in [0, 1]");
  }
}

const char* to_string(SweepKind kind) noexcept {
  switch (kind) {
    case SweepKind::kInitial:
      return "initial";
    case SweepKind::kRows:
      return "rows";
    case SweepKind::kBits:
      return "bits";
    case SweepKind::kJoint:
      return "joint";
  }
  return "unknown";
}

void OptimizerTrace::write_csv(std::ostream& out) const {
  out << "iteration,sweep,bound,plan_hash,trials,elapsed_s\n";
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < values.size(); ++k) {
    out << k << ',' << to_string(kinds[k]) << ',' << values[k] << ',' << plans[k].hash() << ','
        << trials[k] << ',' << elapsed_s[k] << '\n';
  }
  out.precision(old);
}

void check_power_feasible(const Vector& tx_power, std::size_t rows, double power_cap) {
  if (rows == 0) throw InvalidArgument("plan must select at least one sensor");
  if (rows > static_cast<std::size_t>(tx_power.size())) {
    throw InvalidArgument("more plan rows than sensors");
  }
  std::vector<double> p(tx_power.data(), tx_power.data() + tx_power.size());
  std::partial_sort(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(rows), p.end());
  const double cheapest =
      std::accumulate(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(rows), 0.0);
  if (!within_cap(cheapest, power_cap)) {
    throw Infeasible("power cap below the cost of the cheapest selection");
  }
}

int effective_k(const OptimizerConfig& config, std::size_t rows) {
  return std::min(config.k_max, static_cast<int>(rows) - 1);
}

SelectionPlan random_feasible_plan(const Vector& tx_power, std::size_t rows, int bits,
                                   double power_cap, std::uint64_t rng_seed) {
  check_power_feasible(tx_power, rows, power_cap);
  return SelectionPlan::uniform(
      draw_feasible(tx_power, all_sensors(static_cast<std::size_t>(tx_power.size())), rows,
                    power_cap, rng_seed),
      bits);
}

OptimizerResult optimize_separate(const MseEvaluator& evaluator, const Vector& tx_power,
                                  const OptimizerConfig& config, const SelectionPlan& initial) {
  check_inputs(evaluator, tx_power, config, initial);
  LocalSearch search(evaluator, tx_power, config, std::vector<bool>(evaluator.sensors(), true),
                     std::vector<int>(evaluator.sensors(), 1));
  return search.run(initial, true, false);
}

OptimizerResult optimize_joint(const MseEvaluator& evaluator, const Vector& tx_power,
                               const OptimizerConfig& config, const SelectionPlan& initial) {
  check_inputs(evaluator, tx_power, config, initial);
  LocalSearch search(evaluator, tx_power, config, std::vector<bool>(evaluator.sensors(), true),
                     std::vector<int>(evaluator.sensors(), 1));
  return search.run(initial, true, true);
}

OptimizerResult optimize_rows(const MseEvaluator& evaluator, const Vector& tx_power,
                              const OptimizerConfig& config, const SelectionPlan& initial) {
  check_inputs(evaluator, tx_power, config, initial);
  LocalSearch search(evaluator, tx_power, config, std::vector<bool>(evaluator.sensors(), true),
                     std::vector<int>(evaluator.sensors(), 1));
  search.inherit_row_bits();
  return search.run(initial, false, false);
}

OptimizerResult optimize_separate(const FieldModel& model, const LinkProfile& link,
                                  std::size_t rows, const OptimizerConfig& config,
                                  std::uint64_t rng_seed) {
  const MseEvaluator ev = MseEvaluator::from(model, link);
  return optimize_separate(
      ev, link.tx_power, config,
      random_feasible_plan(link.tx_power, rows, 1, config.power_cap, rng_seed));
}

OptimizerResult optimize_joint(const FieldModel& model, const LinkProfile& link,
                               std::size_t rows, const OptimizerConfig& config,
                               std::uint64_t rng_seed) {
  const MseEvaluator ev = MseEvaluator::from(model, link);
  return optimize_joint(ev, link.tx_power, config,
                        random_feasible_plan(link.tx_power, rows, 1, config.power_cap, rng_seed));
}

SelectionPlan baseline_random(std::size_t sensors, std::size_t rows, int bits,
                              const Vector& tx_power, double power_cap,
                              std::uint64_t rng_seed) {
  if (static_cast<std::size_t>(tx_power.size()) != sensors) {
    throw InvalidArgument("transmit power vector length must equal the sensor count");
  }
  if (bits < 1) throw InvalidArgument("bit count must be positive");
  if (rows == sensors) {
    // Every sensor transmits; the order carries no randomness worth keeping.
    check_power_feasible(tx_power, rows, power_cap);
    if (!within_cap(tx_power.sum(), power_cap)) throw Infeasible("full selection exceeds cap");
    return SelectionPlan::uniform(all_sensors(sensors), bits);
  }
  return random_feasible_plan(tx_power, rows, bits, power_cap, rng_seed);
}

SelectionPlan baseline_channel_gain(const Vector& gain, std::size_t rows, int bits) {
  if (rows == 0 || rows > static_cast<std::size_t>(gain.size())) {
    throw InvalidArgument("row count out of range");
  }
  std::vector<int> order = all_sensors(static_cast<std::size_t>(gain.size()));
  std::stable_sort(order.begin(), order.end(), [&gain](int a, int b) { return gain(a) > gain(b); });
  order.resize(rows);
  return SelectionPlan::uniform(std::move(order), bits);
}

std::vector<int> error_free_bits(const Matrix& per_table, int max_bits, double per_ceiling) {
  if (max_bits > per_table.cols()) throw InvalidArgument("max_bits exceeds the PER table");
  std::vector<int> bits(static_cast<std::size_t>(per_table.rows()), 0);
  for (Eigen::Index i = 0; i < per_table.rows(); ++i) {
    for (int b = max_bits; b >= 1; --b) {
      if (per_table(i, b - 1) <= per_ceiling) {
        bits[static_cast<std::size_t>(i)] = b;
        break;
      }
    }
  }
  return bits;
}

OptimizerResult baseline_error_free(const MseEvaluator& evaluator, const Vector& tx_power,
                                    std::size_t rows, const OptimizerConfig& config,
                                    std::uint64_t rng_seed) {
  config.validate();
  const std::vector<int> bits =
      error_free_bits(evaluator.per_table(), config.max_bits, config.per_ceiling);
  std::vector<bool> allowed(bits.size());
  std::vector<int> eligible;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    allowed[i] = bits[i] > 0;
    if (allowed[i]) eligible.push_back(static_cast<int>(i));
  }
  if (eligible.size() < rows) {
    throw Infeasible("only " + std::to_string(eligible.size()) +
                     " sensors meet the PER ceiling; " + std::to_string(rows) + " needed");
  }
  Vector eligible_power(static_cast<Eigen::Index>(eligible.size()));
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    eligible_power(static_cast<Eigen::Index>(k)) = tx_power(eligible[k]);
  }
  check_power_feasible(eligible_power, rows, config.power_cap);
  SelectionPlan initial;
  initial.selected = draw_feasible(tx_power, eligible, rows, config.power_cap, rng_seed);
  for (int s : initial.selected) initial.bits.push_back(bits[static_cast<std::size_t>(s)]);
  check_inputs(evaluator, tx_power, config, initial);
  LocalSearch search(evaluator, tx_power, config, std::move(allowed), bits);
  return search.run(initial, false, false);
}

}  // namespace mmtc
