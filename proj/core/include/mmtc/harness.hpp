#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmtc/dataset.hpp"
#include "mmtc/link_budget.hpp"
#include "mmtc/selection_opt.hpp"
#include "mmtc/spatial_field.hpp"
#include "mmtc/temporal.hpp"

namespace mmtc {

/// Link parameters as written in a config file (dBm, dB, paths).
struct LinkConfig {
  double tx_power_dbm = 0.0;
  double noise_density_dbm_hz = -174.0;
  double slot_duration_s = 71.4e-6;
  double slot_bandwidth_hz = 15e3;
  double decay_exponent = 3.0;
  double fading_power = 1.0;
  std::string fading = "deterministic";  ///< or "rayleigh"
  double excess_loss_db = 70.0;  ///< extra path loss putting the disk edge near 11 dB SNR
  std::string mcs_table;  ///< file path; empty selects the built-in table
  double max_code_rate = 0.93;
  int max_bits = 8;
  std::string coding = "identity";  ///< or "waterfall"
  double coding_exponent = 1.0;     ///< c of the waterfall model

  LinkSettings settings() const;
};

struct SyntheticConfig {
  int sensors = 30;
  double radius_m = 50.0;
  double sigma = 10.0;          ///< prior standard deviation per sensor
  double noise_std_min = 0.0;   ///< measurement noise std drawn uniformly per sensor
  double noise_std_max = 10.0;
};

struct BoundStudyConfig {
  std::vector<int> sensor_grid{10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
  double active_fraction = 0.2;
  int bits = 4;
  std::vector<int> k_values{1, 3, 5};
  double varphi = 0.9;
  int trials = 50;
};

struct SweepConfig {
  std::vector<double> varphi{0.1, 0.9, 0.95, 0.99};
  std::vector<double> active_pct{10, 20, 30, 40, 50};
  std::vector<std::string> methods{"separate",      "joint",         "random-1",  "random-4",
                                   "random-8",      "channel-gain-4", "channel-gain-8",
                                   "error-free"};
  int trials = 200;
};

struct TemporalSweepConfig {
  std::vector<double> varphi{0.1, 0.9, 0.99};
  std::vector<double> psi{0.1, 0.9, 0.95, 0.99};
  double active_fraction = 0.2;
  int frames = 50;
  int trials = 50;
  bool freeze_plan = false;
  bool joint = false;
};

struct IntelConfig {
  std::string data;       ///< raw log path (intel-prepare)
  std::string locations;  ///< optional mote locations path
  int sensors = 54;
  double interval_s = 900.0;
  double window_s = 2700.0;
  double temp_low = -10.0;
  double temp_high = 50.0;
  double radius_m = 50.0;  ///< disk placement when no locations file is given
  std::vector<double> active_pct{5, 10, 20, 30, 40, 50, 60};
  std::vector<double> bits_active_pct{5, 10, 20};
  int temporal_rows = 2;
  int first_interval = 0;
  int frames = 96;
  int trials = 50;
};

struct ConsistencyConfig {
  int instances = 5;
  int sensors = 4;
  int rows = 3;
  int min_bits = 3;
  int trials = 100000;
  double varphi = 0.9;
  bool real_quantizer = true;  ///< mid-rise quantizer instead of additive uniform noise
};

/// Everything an experiment run needs; loaded from a JSON file.
struct ExperimentConfig {
  std::string scenario = "synthetic";
  std::uint64_t seed = 1;
  int threads = 1;
  SyntheticConfig synthetic{};
  LinkConfig link{};
  OptimizerConfig optimizer{};
  BoundStudyConfig bound{};
  SweepConfig sweep{};
  TemporalSweepConfig temporal{};
  IntelConfig intel{};
  ConsistencyConfig consistency{};

  void validate() const;
  /// FNV-1a of the canonical JSON serialization, as 16 hex digits.
  std::string hash() const;
  std::string to_json() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Runs body(i) for i in [0, count) on up to `threads` workers. The first
/// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Seed of trial `trial` under `master`.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial);

/// Independent streams of one synthetic trial.
enum class TrialStream : std::uint64_t {
  kLayout = 1,
  kNoise = 2,
  kFading = 3,
  kInitialPlan = 4,
  kRandomBaseline = 5,
  kSimulation = 6,
};
std::uint64_t stream_seed(std::uint64_t trial_seed, TrialStream stream);

/// One synthetic instance: layout, field model and link profile.
struct SyntheticInstance {
  SensorLayout layout;
  FieldModel model;
  LinkProfile link;
};

SyntheticInstance make_instance(const ExperimentConfig& config, int sensors, double varphi,
                                std::uint64_t trial_seed);

/// Normalized MSE of a plan: exact when enumerable, else the bound at k_max.
double normalized_mse(const MseEvaluator& evaluator, const SelectionPlan& plan, int k_max);

/// Plan chosen by a sweep method name: "separate", "joint", "error-free",
/// "random-<bits>" or "channel-gain-<bits>".
SelectionPlan plan_for_method(const std::string& method, const MseEvaluator& evaluator,
                              const LinkProfile& link, std::size_t rows,
                              const OptimizerConfig& optimizer, std::uint64_t trial_seed);

/// Rows for a fraction of the sensors, at least one.
std::size_t rows_for_fraction(int sensors, double fraction);

struct SweepCell {
  double varphi = 0.0;
  double active_pct = 0.0;
  std::size_t rows = 0;
  std::string method;
  std::vector<double> nmse;  ///< per trial; NaN where the method failed
  std::vector<std::string> errors;

  double mean() const;
  double standard_error() const;
  std::size_t failures() const;
};

/// Bound accuracy per sensor count and truncation depth.
struct BoundRow {
  int sensors = 0;
  std::size_t rows = 0;
  int k = 0;
  double nmse_exact = 0.0;
  double nmse_bound = 0.0;
  double rel_error = 0.0;
  std::size_t trials = 0;
};

std::vector<BoundRow> bound_study(const ExperimentConfig& config);
void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows,
                     const ExperimentConfig& config);

std::vector<SweepCell> selection_sweep(const ExperimentConfig& config);
void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     const ExperimentConfig& config);

struct TemporalCurve {
  double varphi = 0.0;
  double psi = 0.0;
  std::size_t rows = 0;
  std::vector<double> nmse_mean;  ///< per frame
  std::vector<double> nmse_se;
  std::vector<double> memoryless_nmse;  ///< per trial, memoryless value at frame-1 settings
  std::vector<double> frame1_nmse;      ///< per trial
};

std::vector<TemporalCurve> temporal_sweep(const ExperimentConfig& config);
void write_temporal_csv(std::ostream& out, const std::vector<TemporalCurve>& curves,
                        const ExperimentConfig& config);

struct ConsistencyRow {
  int instance = 0;
  double per_mean = 0.0;
  double analytic = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double z = 0.0;
};

/// Full-chain simulation (sample, quantize, drop, estimate) against the
/// analytic averaged MSE on random small instances.
std::vector<ConsistencyRow> consistency_study(const ExperimentConfig& config);

/// One instance: empirical mean squared error of the simulated chain.
ConsistencyRow simulate_chain(const FieldModel& model, const LinkProfile& link,
                              const SelectionPlan& plan, int trials, bool real_quantizer,
                              std::uint64_t seed);
void write_consistency_csv(std::ostream& out, const std::vector<ConsistencyRow>& rows,
                           const ExperimentConfig& config);

/// Parses the raw log, bins it, estimates the model and writes it with
/// layout.txt and diagnostics.csv into `model_dir`.
struct IntelPrepareSummary {
  intel::ParseReport parse;
  intel::MissingnessReport missing;
  std::size_t days = 0;
  std::size_t alpha_exclusions = 0;
};
IntelPrepareSummary intel_prepare(const ExperimentConfig& config,
                                  const std::filesystem::path& model_dir);

/// Memoryless sweep, bits sweep, temporal run and diagnostics, one CSV each
/// in `out_dir`.
void intel_run(const ExperimentConfig& config, const std::filesystem::path& model_dir,
               const std::filesystem::path& out_dir);

/// Subcommand drivers writing CSV files into `out_dir`.
void run_bound_study(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void run_selection_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void run_temporal_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);
void run_consistency(const ExperimentConfig& config, const std::filesystem::path& out_dir);

}  // namespace mmtc
