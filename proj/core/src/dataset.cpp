#include "mmtc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "mmtc/csv.hpp"

namespace mmtc::intel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxSkippedRecorded = 100;
// Mean absolute sensor value below which a ratio denominator counts as zero.
constexpr double kAlphaDenominatorFloor = 1e-6;

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* end = s.data() + s.size();
  auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_date(std::string_view s, std::int64_t& day) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  int y = 0;
  unsigned m = 0, d = 0;
  if (!parse_number(s.substr(0, 4), y) || !parse_number(s.substr(5, 2), m) ||
      !parse_number(s.substr(8, 2), d)) {
    return false;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return false;
  day = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return true;
}

bool parse_time(std::string_view s, double& seconds) {
  if (s.size() < 8 || s[2] != ':' || s[5] != ':') return false;
  int h = 0, m = 0;
  double sec = 0.0;
  if (!parse_number(s.substr(0, 2), h) || !parse_number(s.substr(3, 2), m) ||
      !parse_number(s.substr(6), sec)) {
    return false;
  }
  if (h < 0 || h > 23 || m < 0 || m > 59 || !(sec >= 0.0 && sec < 61.0)) return false;
  seconds = 3600.0 * h + 60.0 * m + sec;
  return true;
}

std::size_t cell_index(std::size_t day, int interval, int intervals) {
  return day * static_cast<std::size_t>(intervals) + static_cast<std::size_t>(interval);
}

std::string padded(std::size_t t) {
  std::ostringstream s;
  s.width(4);
  s.fill('0');
  s << t;
  return s.str();
}

}  // namespace

std::int64_t civil_day(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw InvalidArgument("invalid calendar date");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::optional<RawReading> parse_line(const std::string& line, int max_motes) {
  std::istringstream ls(line);
  std::string tok[9];
  int n = 0;
  while (n < 9 && ls >> tok[n]) ++n;
  if (n != 8) return std::nullopt;
  RawReading r;
  if (!parse_date(tok[0], r.day) || !parse_time(tok[1], r.seconds)) return std::nullopt;
  if (!parse_number(std::string_view(tok[2]), r.epoch) ||
      !parse_number(std::string_view(tok[3]), r.mote_id)) {
    return std::nullopt;
  }
  if (r.mote_id < 1 || r.mote_id > max_motes || r.epoch < 0) return std::nullopt;
  if (!parse_number(std::string_view(tok[4]), r.temperature) ||
      !parse_number(std::string_view(tok[5]), r.humidity) ||
      !parse_number(std::string_view(tok[6]), r.light) ||
      !parse_number(std::string_view(tok[7]), r.voltage)) {
    return std::nullopt;
  }
  if (!std::isfinite(r.temperature)) return std::nullopt;
  return r;
}

ParseResult parse_readings(std::istream& in, int max_motes) {
  ParseResult out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (auto r = parse_line(line, max_motes)) {
      out.readings.push_back(*r);
      ++out.report.kept;
    } else {
      ++out.report.skipped;
      if (out.report.skipped_lines.size() < kMaxSkippedRecorded) {
        out.report.skipped_lines.push_back(number);
      }
    }
  }
  return out;
}

int BinningConfig::intervals_per_day() const {
  return static_cast<int>(std::lround(day_s / interval_s));
}

int BinningConfig::window_intervals() const {
  return static_cast<int>(std::lround(window_s / interval_s));
}

void BinningConfig::validate() const {
  if (sensors < 1) throw InvalidArgument("sensor count must be positive");
  if (!(interval_s > 0.0) || !(day_s > 0.0) || !(window_s > 0.0)) {
    throw InvalidArgument("interval, window and day lengths must be positive");
  }
  if (std::abs(day_s / interval_s - intervals_per_day()) > 1e-9) {
    throw InvalidArgument("interval length must divide the day length");
  }
  if (std::abs(window_s / interval_s - window_intervals()) > 1e-9 ||
      window_intervals() % 2 == 0) {
    throw InvalidArgument("window length must be an odd multiple of the interval length");
  }
  if (!(temp_low < temp_high)) throw InvalidArgument("outlier bounds are inverted");
}

const std::vector<Sample>& BinnedPanel::cell(std::size_t day, int interval) const {
  if (day >= days.size() || interval < 0 || interval >= intervals()) {
    throw InvalidArgument("panel cell out of range");
  }
  return cells[cell_index(day, interval, intervals())];
}

BinnedPanel bin_panel(const std::vector<RawReading>& readings, const BinningConfig& config) {
  config.validate();
  BinnedPanel panel;
  panel.config = config;
  const int intervals = config.intervals_per_day();

  std::vector<std::int64_t> days;
  for (const RawReading& r : readings) {
    if (r.mote_id >= 1 && r.mote_id <= config.sensors) days.push_back(r.day);
  }
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  panel.days = days;
  panel.cells.assign(days.size() * static_cast<std::size_t>(intervals), {});

  for (const RawReading& r : readings) {
    if (r.mote_id < 1 || r.mote_id > config.sensors) continue;
    if (!(r.temperature >= config.temp_low && r.temperature <= config.temp_high)) {
      ++panel.report.outliers;
      continue;
    }
    const auto d = static_cast<std::size_t>(
        std::lower_bound(days.begin(), days.end(), r.day) - days.begin());
    const int t = std::clamp(static_cast<int>(std::floor(r.seconds / config.interval_s)), 0,
                             intervals - 1);
    panel.cells[cell_index(d, t, intervals)].push_back({r.epoch, r.mote_id - 1, r.temperature});
    ++panel.report.binned;
  }

  for (auto& cell : panel.cells) {
    std::stable_sort(cell.begin(), cell.end(), [](const Sample& a, const Sample& b) {
      return a.epoch != b.epoch ? a.epoch < b.epoch : a.sensor < b.sensor;
    });
    if (cell.empty()) ++panel.report.empty_cells;
    std::vector<bool> seen(static_cast<std::size_t>(config.sensors), false);
    for (const Sample& s : cell) seen[static_cast<std::size_t>(s.sensor)] = true;
    panel.report.empty_sensor_cells +=
        static_cast<std::size_t>(std::count(seen.begin(), seen.end(), false));
  }
  return panel;
}

ParameterCells estimate_parameters(const BinnedPanel& panel) {
  const int m = panel.config.sensors;
  const int intervals = panel.intervals();
  const int half = (panel.config.window_intervals() - 1) / 2;
  ParameterCells out;
  out.sensors = m;
  out.intervals = intervals;
  out.days = panel.day_count();
  out.theta.assign(out.days * static_cast<std::size_t>(intervals), Vector::Constant(m, kNaN));
  out.residual.assign(out.theta.size(), {});

  for (std::size_t d = 0; d < out.days; ++d) {
    // Per-interval sums and counts, then window sums by a sliding pass.
    Matrix sum = Matrix::Zero(m, intervals);
    Matrix count = Matrix::Zero(m, intervals);
    for (int t = 0; t < intervals; ++t) {
      for (const Sample& s : panel.cell(d, t)) {
        sum(s.sensor, t) += s.value;
        count(s.sensor, t) += 1.0;
      }
    }
    for (int t = 0; t < intervals; ++t) {
      const int lo = std::max(0, t - half);
      const int hi = std::min(intervals - 1, t + half);
      const Vector ws = sum.middleCols(lo, hi - lo + 1).rowwise().sum();
      const Vector wc = count.middleCols(lo, hi - lo + 1).rowwise().sum();
      Vector& theta = out.theta[cell_index(d, t, intervals)];
      for (int i = 0; i < m; ++i) {
        if (wc(i) > 0.0) theta(i) = ws(i) / wc(i);
      }
      auto& res = out.residual[cell_index(d, t, intervals)];
      for (const Sample& s : panel.cell(d, t)) {
        res.push_back({s.epoch, s.sensor, s.value - theta(s.sensor)});
      }
    }
  }
  return out;
}

FieldModel EmpiricalModel::field(std::size_t interval) const {
  if (interval >= intervals()) throw InvalidArgument("interval out of range");
  return {mean[interval], prior_cov[interval], noise_cov[interval]};
}

TemporalScenario EmpiricalModel::scenario(std::size_t first, std::size_t frames) const {
  if (frames == 0 || first + frames > intervals()) {
    throw InvalidArgument("requested frames exceed the model's intervals");
  }
  TemporalScenario s;
  for (std::size_t t = first; t < first + frames; ++t) {
    s.mean.push_back(mean[t]);
    s.prior_cov.push_back(prior_cov[t]);
    s.noise_cov.push_back(noise_cov[t]);
    s.dynamics.transition.push_back(alpha[t] * Matrix::Identity(sensors, sensors));
    s.dynamics.process_cov.push_back(process_cov[t]);
  }
  return s;
}

EmpiricalModel estimate_moments(const ParameterCells& cells, MomentReport* report) {
  const int m = cells.sensors;
  const int intervals = cells.intervals;
  const std::size_t days = cells.days;
  if (days < 2) throw InvalidArgument("at least two days are needed for moment estimates");

  EmpiricalModel model;
  model.sensors = m;
  for (int t = 0; t < intervals; ++t) {
    // Mean and pairwise covariance over days.
    Vector mean = Vector::Zero(m);
    Vector n_mean = Vector::Zero(m);
    int day_count = 0;
    for (std::size_t d = 0; d < days; ++d) {
      const Vector& th = cells.at(d, t);
      bool any = false;
      for (int i = 0; i < m; ++i) {
        if (!std::isnan(th(i))) {
          mean(i) += th(i);
          n_mean(i) += 1.0;
          any = true;
        }
      }
      day_count += any ? 1 : 0;
    }
    for (int i = 0; i < m; ++i) mean(i) = n_mean(i) > 0.0 ? mean(i) / n_mean(i) : 0.0;

    Matrix cov = Matrix::Zero(m, m);
    Matrix n_cov = Matrix::Zero(m, m);
    for (std::size_t d = 0; d < days; ++d) {
      const Vector& th = cells.at(d, t);
      for (int i = 0; i < m; ++i) {
        if (std::isnan(th(i))) continue;
        for (int j = 0; j < m; ++j) {
          if (std::isnan(th(j))) continue;
          cov(i, j) += (th(i) - mean(i)) * (th(j) - mean(j));
          n_cov(i, j) += 1.0;
        }
      }
    }
    cov = (n_cov.array() > 0.0).select(cov.array() / n_cov.array().max(1.0), 0.0);

    // Noise covariance over samples sharing an epoch.
    Matrix wcov = Matrix::Zero(m, m);
    Matrix n_w = Matrix::Zero(m, m);
    for (std::size_t d = 0; d < days; ++d) {
      const auto& res = cells.residual[cell_index(d, t, intervals)];
      std::size_t a = 0;
      while (a < res.size()) {
        std::size_t b = a;
        while (b < res.size() && res[b].epoch == res[a].epoch) ++b;
        for (std::size_t p = a; p < b; ++p) {
          if (std::isnan(res[p].value)) continue;
          for (std::size_t q = a; q < b; ++q) {
            if (std::isnan(res[q].value)) continue;
            wcov(res[p].sensor, res[q].sensor) += res[p].value * res[q].value;
            n_w(res[p].sensor, res[q].sensor) += 1.0;
          }
        }
        a = b;
      }
    }
    wcov = (n_w.array() > 0.0).select(wcov.array() / n_w.array().max(1.0), 0.0);

    // Transition factor and process noise.
    double alpha = 1.0;
    Matrix ncov = Matrix::Zero(m, m);
    if (t > 0) {
      double ratio_sum = 0.0;
      int ratio_days = 0;
      for (std::size_t d = 0; d < days; ++d) {
        const Vector& cur = cells.at(d, t);
        const Vector& prev = cells.at(d, t - 1);
        double num = 0.0, den = 0.0;
        int common = 0;
        for (int i = 0; i < m; ++i) {
          if (std::isnan(cur(i)) || std::isnan(prev(i))) continue;
          num += cur(i);
          den += prev(i);
          ++common;
        }
        if (common == 0) continue;
        if (std::abs(den) / common < kAlphaDenominatorFloor) {
          if (report) report->alpha_exclusions.emplace_back(d, t);
          continue;
        }
        ratio_sum += num / den;
        ++ratio_days;
      }
      alpha = ratio_days > 0 ? ratio_sum / ratio_days : 1.0;

      Matrix n_nu = Matrix::Zero(m, m);
      for (std::size_t d = 0; d < days; ++d) {
        const Vector& cur = cells.at(d, t);
        const Vector& prev = cells.at(d, t - 1);
        Vector nu = cur - alpha * prev;  // NaN where either is missing
        for (int i = 0; i < m; ++i) {
          if (std::isnan(nu(i))) continue;
          for (int j = 0; j < m; ++j) {
            if (std::isnan(nu(j))) continue;
            ncov(i, j) += nu(i) * nu(j);
            n_nu(i, j) += 1.0;
          }
        }
      }
      ncov = (n_nu.array() > 0.0).select(ncov.array() / n_nu.array().max(1.0), 0.0);
    }

    model.mean.push_back(mean);
    model.prior_cov.push_back(clamp_psd(0.5 * (cov + cov.transpose())));
    model.noise_cov.push_back(clamp_psd(0.5 * (wcov + wcov.transpose())));
    model.alpha.push_back(alpha);
    model.process_cov.push_back(clamp_psd(0.5 * (ncov + ncov.transpose())));
    model.day_counts.push_back(day_count);
  }
  return model;
}

std::vector<DiagnosticRow> model_diagnostics(const EmpiricalModel& model,
                                             const ParameterCells& cells) {
  std::vector<DiagnosticRow> rows;
  for (int t = 0; t < cells.intervals; ++t) {
    double s1 = 0.0, s2 = 0.0;
    int n = 0;
    for (std::size_t d = 0; d < cells.days; ++d) {
      const Vector& th = cells.at(d, t);
      double acc = 0.0;
      int k = 0;
      for (Eigen::Index i = 0; i < th.size(); ++i) {
        if (!std::isnan(th(i))) {
          acc += th(i);
          ++k;
        }
      }
      if (k == 0) continue;
      const double v = acc / k;
      s1 += v;
      s2 += v * v;
      ++n;
    }
    DiagnosticRow row;
    row.interval = t;
    row.theta_bar = n > 0 ? s1 / n : kNaN;
    row.theta_hat = n > 0 ? std::sqrt(std::max(0.0, s2 / n - row.theta_bar * row.theta_bar)) : kNaN;
    row.xi = kNaN;
    const auto tu = static_cast<std::size_t>(t);
    if (t > 0 && tu < model.intervals()) {
      const double ref = model.prior_cov[tu].norm();
      if (ref > 0.0) {
        const double a = model.alpha[tu];
        row.xi = (a * a * model.prior_cov[tu - 1] + model.process_cov[tu] - model.prior_cov[tu])
                     .norm() /
                 ref;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

void write_model(const std::filesystem::path& dir, const EmpiricalModel& model) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("cannot write model manifest in " + dir.string());
  manifest << "format mmtc-empirical-model 1\n"
           << "sensors " << model.sensors << '\n'
           << "intervals " << model.intervals() << '\n'
           << "interval_s " << format_double(model.interval_s) << '\n'
           << "window " << model.window << '\n'
           << "# interval alpha days\n";
  for (std::size_t t = 0; t < model.intervals(); ++t) {
    manifest << "interval " << t << ' ' << format_double(model.alpha[t]) << ' '
             << model.day_counts[t] << '\n';
    const std::string tag = padded(t);
    write_matrix_file(dir / ("mean_" + tag + ".txt"), model.mean[t]);
    write_matrix_file(dir / ("prior_cov_" + tag + ".txt"), model.prior_cov[t]);
    write_matrix_file(dir / ("noise_cov_" + tag + ".txt"), model.noise_cov[t]);
    write_matrix_file(dir / ("process_cov_" + tag + ".txt"), model.process_cov[t]);
  }
}

EmpiricalModel read_model(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw std::runtime_error("no manifest.txt in " + dir.string());
  EmpiricalModel model;
  std::size_t intervals = 0;
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "sensors") {
      ls >> model.sensors;
    } else if (key == "intervals") {
      ls >> intervals;
    } else if (key == "interval_s") {
      ls >> model.interval_s;
    } else if (key == "window") {
      ls >> model.window;
    } else if (key == "interval") {
      std::size_t t = 0;
      std::string alpha;
      int days = 0;
      ls >> t >> alpha >> days;
      if (t != model.alpha.size()) throw InvalidArgument("manifest intervals out of order");
      model.alpha.push_back(std::stod(alpha));
      model.day_counts.push_back(days);
    }
  }
  if (model.sensors < 1 || model.alpha.size() != intervals) {
    throw InvalidArgument("incomplete model manifest in " + dir.string());
  }
  for (std::size_t t = 0; t < intervals; ++t) {
    const std::string tag = padded(t);
    model.mean.push_back(read_matrix_file(dir / ("mean_" + tag + ".txt")).col(0));
    model.prior_cov.push_back(read_matrix_file(dir / ("prior_cov_" + tag + ".txt")));
    model.noise_cov.push_back(read_matrix_file(dir / ("noise_cov_" + tag + ".txt")));
    model.process_cov.push_back(read_matrix_file(dir / ("process_cov_" + tag + ".txt")));
    if (model.mean.back().size() != model.sensors ||
        model.prior_cov.back().rows() != model.sensors) {
      throw InvalidArgument("model matrix dimensions disagree with the manifest");
    }
  }
  return model;
}

std::vector<RawReading> synthesize_readings(const EmpiricalModel& model,
                                            const BinningConfig& binning, std::size_t days,
                                            int epochs_per_interval, std::int64_t first_day,
                                            std::uint64_t seed) {
  binning.validate();
  if (binning.sensors != model.sensors) throw InvalidArgument("binning and model sensor counts differ");
  if (static_cast<std::size_t>(binning.intervals_per_day()) != model.intervals()) {
    throw InvalidArgument("model intervals must cover one day of the binning");
  }
  if (epochs_per_interval < 1) throw InvalidArgument("at least one epoch per interval");
  const int m = model.sensors;
  std::vector<Matrix> prior_factor, process_factor, noise_factor;
  for (std::size_t t = 0; t < model.intervals(); ++t) {
    process_factor.push_back(symmetric_factor(model.process_cov[t]));
    noise_factor.push_back(symmetric_factor(model.noise_cov[t]));
  }
  const Matrix start_factor = symmetric_factor(model.prior_cov[0]);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto draw = [&](const Matrix& factor) {
    Vector z(m);
    for (int i = 0; i < m; ++i) z(i) = g(rng);
    return Vector(factor * z);
  };

  std::vector<RawReading> out;
  std::int64_t epoch = 0;
  const double slot = binning.interval_s / epochs_per_interval;
  for (std::size_t d = 0; d < days; ++d) {
    Vector theta = model.mean[0] + draw(start_factor);
    for (std::size_t t = 0; t < model.intervals(); ++t) {
      if (t > 0) {
        theta = model.alpha[t] * theta + (model.mean[t] - model.alpha[t] * model.mean[t - 1]) +
                draw(process_factor[t]);
      }
      for (int e = 0; e < epochs_per_interval; ++e, ++epoch) {
        const Vector x = theta + draw(noise_factor[t]);
        for (int i = 0; i < m; ++i) {
          RawReading r;
          r.day = first_day + static_cast<std::int64_t>(d);
          r.seconds = static_cast<double>(t) * binning.interval_s + (e + 0.5) * slot;
          r.epoch = epoch;
          r.mote_id = i + 1;
          r.temperature = x(i);
          out.push_back(r);
        }
      }
    }
  }
  return out;
}

SensorLayout read_mote_locations(std::istream& in, int sensors) {
  SensorLayout layout;
  layout.positions.assign(static_cast<std::size_t>(sensors), Point2{});
  std::vector<bool> seen(static_cast<std::size_t>(sensors), false);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    int id = 0;
    double x = 0.0, y = 0.0;
    if (!(ls >> id >> x >> y)) continue;
    if (id < 1 || id > sensors) continue;
    layout.positions[static_cast<std::size_t>(id - 1)] = {x, y};
    seen[static_cast<std::size_t>(id - 1)] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw InvalidArgument("mote locations file does not cover every sensor");
  }
  Point2 c{0.0, 0.0};
  for (const Point2& p : layout.positions) {
    c.x += p.x / sensors;
    c.y += p.y / sensors;
  }
  layout.cn_position = c;
  return layout;
}

}  // namespace mmtc::intel
