#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmtc/common.hpp"
#include "mmtc/spatial_field.hpp"
#include "mmtc/temporal.hpp"

namespace mmtc::intel {

/// One line of the lab deployment log.
struct RawReading {
  std::int64_t day = 0;        ///< days since 1970-01-01
  double seconds = 0.0;        ///< seconds since midnight
  std::int64_t epoch = 0;      ///< sampling round counter shared by all motes
  int mote_id = 0;             ///< 1-based
  double temperature = 0.0;    ///< degrees Celsius
  double humidity = 0.0;
  double light = 0.0;
  double voltage = 0.0;
};

struct ParseReport {
  std::size_t kept = 0;
  std::size_t skipped = 0;
  std::vector<std::size_t> skipped_lines;  ///< 1-based, first 100 only
};

struct ParseResult {
  std::vector<RawReading> readings;
  ParseReport report;
};

/// Whitespace-separated "YYYY-MM-DD hh:mm:ss[.ffffff] epoch moteid temperature
/// humidity light voltage". Lines that do not match, or whose mote id falls
/// outside [1, max_motes], are counted and skipped.
ParseResult parse_readings(std::istream& in, int max_motes = 54);

/// Parses a single line; std::nullopt when malformed.
std::optional<RawReading> parse_line(const std::string& line, int max_motes = 54);

/// Days since 1970-01-01 for a proleptic Gregorian date; throws on invalid dates.
std::int64_t civil_day(int year, unsigned month, unsigned day);

struct BinningConfig {
  int sensors = 54;
  double interval_s = 900.0;  ///< H
  double window_s = 2700.0;   ///< L
  double day_s = 86400.0;     ///< I
  double temp_low = -10.0;
  double temp_high = 50.0;

  int intervals_per_day() const;
  /// J = L / H; must be an odd integer.
  int window_intervals() const;
  void validate() const;
};

struct Sample {
  std::int64_t epoch = 0;
  int sensor = 0;  ///< 0-based
  double value = 0.0;
};

struct MissingnessReport {
  std::size_t binned = 0;
  std::size_t outliers = 0;
  /// cells (day, interval) x sensors without any reading
  std::size_t empty_sensor_cells = 0;
  std::size_t empty_cells = 0;
};

/// Readings bucketed by (day, interval). Days are the distinct calendar days
/// present in the input, in increasing order.
struct BinnedPanel {
  BinningConfig config;
  std::vector<std::int64_t> days;
  std::vector<std::vector<Sample>> cells;  ///< index day * intervals + interval
  MissingnessReport report;

  int intervals() const { return config.intervals_per_day(); }
  std::size_t day_count() const noexcept { return days.size(); }
  const std::vector<Sample>& cell(std::size_t day, int interval) const;
};

BinnedPanel bin_panel(const std::vector<RawReading>& readings, const BinningConfig& config = {});

/// theta(d,t) per cell and the residual samples x_j(d,t) - theta(d,t).
/// Entries of theta are NaN where the sensor has no reading in the whole window.
struct ParameterCells {
  int sensors = 0;
  int intervals = 0;
  std::size_t days = 0;
  std::vector<Vector> theta;               ///< index day * intervals + interval
  std::vector<std::vector<Sample>> residual;

  const Vector& at(std::size_t day, int interval) const {
    return theta[day * static_cast<std::size_t>(intervals) + static_cast<std::size_t>(interval)];
  }
};

/// Window average over the J intervals centered at t, truncated at day edges.
ParameterCells estimate_parameters(const BinnedPanel& panel);

/// Per-interval moments of the parameter and noise processes.
struct EmpiricalModel {
  int sensors = 0;
  double interval_s = 900.0;
  int window = 3;
  std::vector<Vector> mean;
  std::vector<Matrix> prior_cov;
  std::vector<Matrix> noise_cov;
  std::vector<double> alpha;  ///< alpha[0] is 1 (no predecessor)
  std::vector<Matrix> process_cov;
  std::vector<int> day_counts;  ///< days with at least one sensor available per interval

  std::size_t intervals() const noexcept { return mean.size(); }
  /// Field model of one interval.
  FieldModel field(std::size_t interval) const;
  /// Intervals [first, first + frames) as a temporal scenario with F(t) = alpha(t) I.
  TemporalScenario scenario(std::size_t first, std::size_t frames) const;
};

struct MomentReport {
  /// (day, interval) pairs excluded from alpha(t) for a near-zero denominator.
  std::vector<std::pair<std::size_t, int>> alpha_exclusions;
};

/// Sample moments; covariances use pairwise-available data and are clamped PSD.
EmpiricalModel estimate_moments(const ParameterCells& cells, MomentReport* report = nullptr);

struct DiagnosticRow {
  int interval = 0;
  double theta_bar = 0.0;  ///< day average of the sensor-mean parameter
  double theta_hat = 0.0;  ///< its standard deviation over days
  double xi = 0.0;         ///< relative covariance mismatch of the dynamics; NaN if undefined
};

std::vector<DiagnosticRow> model_diagnostics(const EmpiricalModel& model,
                                             const ParameterCells& cells);

/// Directory of plain-text matrices plus manifest.txt.
void write_model(const std::filesystem::path& dir, const EmpiricalModel& model);
EmpiricalModel read_model(const std::filesystem::path& dir);

/// Readings drawn from `model`: per day theta(0) ~ N(mean(0), C_theta(0)) and
/// theta(t) = alpha(t) theta(t-1) + nu(t) with nu(t) ~ N(mean(t) - alpha(t) mean(t-1),
/// C_nu(t)); every interval holds `epochs_per_interval` readings of all sensors with
/// N(0, C_w(t)) noise. Days start at `first_day`.
std::vector<RawReading> synthesize_readings(const EmpiricalModel& model,
                                            const BinningConfig& binning, std::size_t days,
                                            int epochs_per_interval, std::int64_t first_day,
                                            std::uint64_t seed);

/// Mote locations file: "id x y" per line (meters); ids are 1-based.
SensorLayout read_mote_locations(std::istream& in, int sensors);

}  // namespace mmtc::intel
