#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mmtc/dataset.hpp"

using namespace mmtc;
using namespace mmtc::intel;

namespace {

RawReading reading(std::int64_t day, double seconds, std::int64_t epoch, int mote, double temp) {
  RawReading r;
  r.day = day;
  r.seconds = seconds;
  r.epoch = epoch;
  r.mote_id = mote;
  r.temperature = temp;
  return r;
}

BinningConfig hourly_single_interval_window() {
  BinningConfig c;
  c.sensors = 2;
  c.interval_s = 900.0;
  c.window_s = 900.0;
  c.day_s = 3600.0;
  return c;
}

// Two days, two sensors, readings only in the first two quarter hours.
std::vector<RawReading> small_panel() {
  return {
      reading(0, 100, 1, 1, 10.0),  reading(0, 100, 1, 2, 20.0),  reading(0, 200, 2, 1, 12.0),
      reading(0, 200, 2, 2, 22.0),  reading(1, 100, 5, 1, 14.0),  reading(1, 100, 5, 2, 26.0),
      reading(0, 1000, 3, 1, 11.0), reading(0, 1000, 3, 2, 21.0), reading(1, 1000, 6, 1, 14.0),
      reading(1, 1000, 6, 2, 26.0),
  };
}

}  // namespace

TEST(CivilDay, DaysSinceEpoch) {
  EXPECT_EQ(civil_day(1970, 1, 1), 0);
  EXPECT_EQ(civil_day(2004, 2, 28), 12476);
  EXPECT_EQ(civil_day(2004, 3, 1) - civil_day(2004, 2, 28), 2);
  EXPECT_THROW(civil_day(2004, 2, 30), InvalidArgument);
}

TEST(ParseReadings, KeepsValidLinesAndReportsMalformed) {
  std::ifstream in(std::string(MMTC_FIXTURES) + "/intel_sample.txt");
  ASSERT_TRUE(in);
  const ParseResult r = parse_readings(in);
  EXPECT_EQ(r.report.kept, 7u);
  EXPECT_EQ(r.report.skipped, 3u);
  EXPECT_EQ(r.report.skipped_lines, (std::vector<std::size_t>{8, 9, 10}));
  const RawReading& first = r.readings.front();
  EXPECT_EQ(first.day, 12476);
  EXPECT_NEAR(first.seconds, 59 * 60 + 16.02785, 1e-9);
  EXPECT_EQ(first.epoch, 3);
  EXPECT_EQ(first.mote_id, 1);
  EXPECT_DOUBLE_EQ(first.temperature, 19.9884);
}

TEST(ParseLine, RejectsBadFields) {
  EXPECT_TRUE(parse_line("2004-02-28 00:00:00 1 1 20 1 1 1").has_value());
  EXPECT_FALSE(parse_line("2004-02-28 24:00:00 1 1 20 1 1 1").has_value());
  EXPECT_FALSE(parse_line("2004-02-28 00:00:00 1 0 20 1 1 1").has_value());
  EXPECT_FALSE(parse_line("2004-02-28 00:00:00 1 1 abc 1 1 1").has_value());
  EXPECT_FALSE(parse_line("2004-02-28 00:00:00 1 1 20 1 1 1 extra").has_value());
}

TEST(BinPanel, IntervalsOutliersAndMissingness) {
  std::ifstream in(std::string(MMTC_FIXTURES) + "/intel_sample.txt");
  const ParseResult r = parse_readings(in);
  BinningConfig c;
  c.sensors = 2;
  const BinnedPanel p = bin_panel(r.readings, c);
  ASSERT_EQ(p.day_count(), 2u);
  EXPECT_EQ(p.intervals(), 96);
  EXPECT_EQ(p.report.binned, 6u);
  EXPECT_EQ(p.report.outliers, 1u);
  EXPECT_EQ(p.cell(0, 3).size(), 2u);
  EXPECT_EQ(p.cell(0, 4).size(), 2u);
  EXPECT_EQ(p.cell(1, 0).size(), 1u);
  EXPECT_EQ(p.cell(1, 1).front().sensor, 1);
  EXPECT_EQ(p.report.empty_cells, 2u * 96u - 4u);
  EXPECT_THROW(p.cell(2, 0), InvalidArgument);
}

TEST(BinningConfig, Validation) {
  BinningConfig c;
  EXPECT_EQ(c.window_intervals(), 3);
  EXPECT_NO_THROW(c.validate());
  c.window_s = 1800.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = BinningConfig{};
  c.interval_s = 1000.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(EstimateMoments, SingleIntervalWindowHandValues) {
  const BinnedPanel p = bin_panel(small_panel(), hourly_single_interval_window());
  const ParameterCells cells = estimate_parameters(p);
  EXPECT_DOUBLE_EQ(cells.at(0, 0)(0), 11.0);
  EXPECT_DOUBLE_EQ(cells.at(0, 0)(1), 21.0);
  EXPECT_DOUBLE_EQ(cells.at(1, 0)(1), 26.0);
  EXPECT_TRUE(std::isnan(cells.at(0, 2)(0)));

  const EmpiricalModel m = estimate_moments(cells);
  ASSERT_EQ(m.intervals(), 4u);
  EXPECT_NEAR(m.mean[0](0), 12.5, 1e-12);
  EXPECT_NEAR(m.mean[0](1), 23.5, 1e-12);
  EXPECT_NEAR(m.prior_cov[0](0, 0), 2.25, 1e-12);
  EXPECT_NEAR(m.prior_cov[0](0, 1), 3.75, 1e-12);
  EXPECT_NEAR(m.prior_cov[0](1, 1), 6.25, 1e-12);
  EXPECT_NEAR(m.noise_cov[0](0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(m.noise_cov[0](0, 1), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.alpha[0], 1.0);
  EXPECT_NEAR(m.alpha[1], 1.0, 1e-12);
  EXPECT_LT(m.process_cov[1].norm(), 1e-12);
  EXPECT_EQ(m.day_counts[0], 2);
  EXPECT_EQ(m.day_counts[2], 0);

  const std::vector<DiagnosticRow> diag = model_diagnostics(m, cells);
  ASSERT_EQ(diag.size(), 4u);
  EXPECT_NEAR(diag[0].theta_bar, 0.5 * (16.0 + 20.0), 1e-12);
  EXPECT_NEAR(diag[0].theta_hat, 2.0, 1e-12);
  EXPECT_TRUE(std::isnan(diag[0].xi));
  EXPECT_NEAR(diag[1].xi, 0.0, 1e-12);
}

TEST(EstimateParameters, WindowSpansNeighbors) {
  BinningConfig c = hourly_single_interval_window();
  c.window_s = 2700.0;
  const ParameterCells cells = estimate_parameters(bin_panel(small_panel(), c));
  // Day 0 sensor 1: readings 10, 12 at t0 and 11 at t1.
  EXPECT_NEAR(cells.at(0, 0)(0), 11.0, 1e-12);
  EXPECT_NEAR(cells.at(0, 2)(0), 11.0, 1e-12);
  EXPECT_TRUE(std::isnan(cells.at(0, 3)(0)));
}

TEST(EmpiricalModel, WriteReadRoundTripAndScenario) {
  const EmpiricalModel m =
      estimate_moments(estimate_parameters(bin_panel(small_panel(), hourly_single_interval_window())));
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "mmtc_model_round_trip";
  std::filesystem::remove_all(dir);
  write_model(dir, m);
  const EmpiricalModel r = read_model(dir);
  ASSERT_EQ(r.intervals(), m.intervals());
  EXPECT_EQ(r.sensors, 2);
  for (std::size_t t = 0; t < m.intervals(); ++t) {
    EXPECT_EQ(r.alpha[t], m.alpha[t]);
    EXPECT_EQ(r.day_counts[t], m.day_counts[t]);
    EXPECT_TRUE(r.mean[t] == m.mean[t]);
    EXPECT_TRUE(r.prior_cov[t] == m.prior_cov[t]);
    EXPECT_TRUE(r.noise_cov[t] == m.noise_cov[t]);
    EXPECT_TRUE(r.process_cov[t] == m.process_cov[t]);
  }
  const TemporalScenario sc = r.scenario(0, 2);
  EXPECT_EQ(sc.frames(), 2u);
  EXPECT_THROW(r.scenario(3, 2), InvalidArgument);
  std::filesystem::remove_all(dir);
}

TEST(MoteLocations, ParsesAndRequiresEveryMote) {
  std::istringstream ok("1 0.5 1.0\n# comment\n2 3.5 -1.0\n9 1 1\n");
  const SensorLayout l = read_mote_locations(ok, 2);
  EXPECT_DOUBLE_EQ(l.positions[1].x, 3.5);
  EXPECT_DOUBLE_EQ(l.cn_position.x, 2.0);
  EXPECT_DOUBLE_EQ(l.cn_position.y, 0.0);
  std::istringstream missing("1 0 0\n");
  EXPECT_THROW(read_mote_locations(missing, 2), InvalidArgument);
}

TEST(SynthesizeReadings, ShapeAndDeterminism) {
  const EmpiricalModel m =
      estimate_moments(estimate_parameters(bin_panel(small_panel(), hourly_single_interval_window())));
  const BinningConfig c = hourly_single_interval_window();
  const std::vector<RawReading> a = synthesize_readings(m, c, 5, 3, 100, 7);
  const std::vector<RawReading> b = synthesize_readings(m, c, 5, 3, 100, 7);
  ASSERT_EQ(a.size(), 5u * 4u * 3u * 2u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].temperature, b[k].temperature);
    EXPECT_GE(a[k].day, 100);
    EXPECT_LT(a[k].day, 105);
    EXPECT_GE(a[k].seconds, 0.0);
    EXPECT_LT(a[k].seconds, c.day_s);
  }
  const BinnedPanel p = bin_panel(a, c);
  EXPECT_EQ(p.day_count(), 5u);
  EXPECT_EQ(p.report.empty_cells, 0u);
}
