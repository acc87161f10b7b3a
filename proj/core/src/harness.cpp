#include "mmtc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mmtc/csv.hpp"
#include "mmtc/estimation.hpp"
#include "mmtc/quantization.hpp"

namespace mmtc {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rejects keys outside `allowed` so misspelled options do not pass silently.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

json link_json(const LinkConfig& c) {
  return {{"tx_power_dbm", c.tx_power_dbm},
          {"noise_density_dbm_hz", c.noise_density_dbm_hz},
          {"slot_duration_s", c.slot_duration_s},
          {"slot_bandwidth_hz", c.slot_bandwidth_hz},
          {"decay_exponent", c.decay_exponent},
          {"fading_power", c.fading_power},
          {"fading", c.fading},
          {"excess_loss_db", c.excess_loss_db},
          {"mcs_table", c.mcs_table},
          {"max_code_rate", c.max_code_rate},
          {"max_bits", c.max_bits},
          {"coding", c.coding},
          {"coding_exponent", c.coding_exponent}};
}

void from(const json& j, LinkConfig& c) {
  check_keys(j, "link",
             {"tx_power_dbm", "noise_density_dbm_hz", "slot_duration_s", "slot_bandwidth_hz",
              "decay_exponent", "fading_power", "fading", "excess_loss_db", "mcs_table",
              "max_code_rate", "max_bits", "coding", "coding_exponent"});
  read(j, "tx_power_dbm", c.tx_power_dbm);
  read(j, "noise_density_dbm_hz", c.noise_density_dbm_hz);
  read(j, "slot_duration_s", c.slot_duration_s);
  read(j, "slot_bandwidth_hz", c.slot_bandwidth_hz);
  read(j, "decay_exponent", c.decay_exponent);
  read(j, "fading_power", c.fading_power);
  read(j, "fading", c.fading);
  read(j, "excess_loss_db", c.excess_loss_db);
  read(j, "mcs_table", c.mcs_table);
  read(j, "max_code_rate", c.max_code_rate);
  read(j, "max_bits", c.max_bits);
  read(j, "coding", c.coding);
  read(j, "coding_exponent", c.coding_exponent);
}

json optimizer_json(const OptimizerConfig& c) {
  return {{"k_max", c.k_max},
          {"max_bits", c.max_bits},
          {"mse_tolerance", c.mse_tolerance},
          {"max_sweeps", c.max_sweeps},
          {"per_ceiling", c.per_ceiling},
          {"weight_floor", c.weight_floor}};
}

void from(const json& j, OptimizerConfig& c) {
  check_keys(j, "optimizer", {"k_max", "max_bits", "mse_tolerance", "max_sweeps", "per_ceiling",
                            "weight_floor"});
  read(j, "k_max", c.k_max);
  read(j, "max_bits", c.max_bits);
  read(j, "mse_tolerance", c.mse_tolerance);
  read(j, "max_sweeps", c.max_sweeps);
  read(j, "per_ceiling", c.per_ceiling);
  read(j, "weight_floor", c.weight_floor);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += x;
    ++n;
  }
  return n ? s / static_cast<double>(n) : kNaN;
}

double se_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isnan(x)) continue;
    s += (x - m) * (x - m);
    ++n;
  }
  if (n < 2) return kNaN;
  return std::sqrt(s / static_cast<double>(n - 1) / static_cast<double>(n));
}

std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

double power_cap_for(const ExperimentConfig& config, std::size_t rows) {
  // Every sensor transmits at the same power, so N P makes the cap inactive.
  return static_cast<double>(rows) * dbm_to_watts(config.link.tx_power_dbm);
}

int parse_method_bits(const std::string& method, const std::string& prefix) {
  const std::string tail = method.substr(prefix.size());
  int b = 0;
  const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), b);
  if (tail.empty() || res.ec != std::errc() || res.ptr != tail.data() + tail.size() || b < 1 ||
      b > kDefaultMaxBits) {
    throw InvalidArgument("bad method name " + method);
  }
  return b;
}

}  // namespace

LinkSettings LinkConfig::settings() const {
  LinkSettings s;
  s.slot.slot_duration = slot_duration_s;
  s.slot.slot_bandwidth = slot_bandwidth_hz;
  s.slot.noise_density = dbm_to_watts(noise_density_dbm_hz);
  s.slot.validate();
  if (mcs_table.empty()) {
    s.mcs = default_mcs_table(s.slot, max_bits, max_code_rate);
  } else {
    std::ifstream in(mcs_table);
    if (!in) throw InvalidArgument("cannot open MCS table " + mcs_table);
    s.mcs = read_mcs_table(in, s.slot);
  }
  if (coding == "identity") {
    s.coding = CodingModel::identity();
  } else if (coding == "waterfall") {
    s.coding = CodingModel::waterfall(coding_exponent);
  } else {
    throw InvalidArgument("unknown coding model " + coding);
  }
  if (fading == "deterministic") {
    s.fading = FadingMode::kDeterministic;
  } else if (fading == "rayleigh") {
    s.fading = FadingMode::kRayleigh;
  } else {
    throw InvalidArgument("unknown fading mode " + fading);
  }
  s.tx_power_w = dbm_to_watts(tx_power_dbm);
  s.decay_exponent = decay_exponent;
  s.fading_power = fading_power;
  s.excess_loss_db = excess_loss_db;
  return s;
}

void ExperimentConfig::validate() const {
  if (scenario != "synthetic" && scenario != "intel") {
    throw InvalidArgument("scenario must be 'synthetic' or 'intel'");
  }
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  if (synthetic.sensors < 1 || !(synthetic.radius_m > 0.0) || !(synthetic.sigma >= 0.0) ||
      !(synthetic.noise_std_min >= 0.0) || synthetic.noise_std_max < synthetic.noise_std_min) {
    throw InvalidArgument("invalid synthetic scenario settings");
  }
  optimizer.validate();
  link.settings();
  if (optimizer.max_bits > link.max_bits) {
    throw InvalidArgument("optimizer max_bits exceeds the link's MCS table");
  }
  auto nonempty = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(std::string(what) + " must be nonempty");
  };
  nonempty(!bound.sensor_grid.empty() && !bound.k_values.empty(), "bound grids");
  nonempty(!sweep.varphi.empty() && !sweep.active_pct.empty() && !sweep.methods.empty(),
           "sweep grids");
  nonempty(!temporal.varphi.empty() && !temporal.psi.empty(), "temporal grids");
  if (bound.trials < 1 || sweep.trials < 1 || temporal.trials < 1 || intel.trials < 1 ||
      consistency.trials < 1 || consistency.instances < 1) {
    throw InvalidArgument("trial counts must be at least 1");
  }
  if (temporal.frames < 1) throw InvalidArgument("temporal frames must be at least 1");
  for (double p : sweep.varphi) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("varphi must lie in [0, 1]");
  }
  for (double p : temporal.psi) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("psi must lie in [0, 1]");
  }
  for (const std::string& m : sweep.methods) {
    if (m == "separate" || m == "joint" || m == "error-free") continue;
    if (m.rfind("random-", 0) == 0) {
      parse_method_bits(m, "random-");
    } else if (m.rfind("channel-gain-", 0) == 0) {
      parse_method_bits(m, "channel-gain-");
    } else {
      throw InvalidArgument("unknown sweep method " + m);
    }
  }
  if (consistency.rows > consistency.sensors || consistency.min_bits < 1 ||
      consistency.min_bits > optimizer.max_bits) {
    throw InvalidArgument("invalid consistency settings");
  }
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["synthetic"] = {{"sensors", synthetic.sensors},
                    {"radius_m", synthetic.radius_m},
                    {"sigma", synthetic.sigma},
                    {"noise_std_min", synthetic.noise_std_min},
                    {"noise_std_max", synthetic.noise_std_max}};
  j["link"] = link_json(link);
  j["optimizer"] = optimizer_json(optimizer);
  j["bound"] = {{"sensor_grid", bound.sensor_grid},
                {"active_fraction", bound.active_fraction},
                {"bits", bound.bits},
                {"k_values", bound.k_values},
                {"varphi", bound.varphi},
                {"trials", bound.trials}};
  j["sweep"] = {{"varphi", sweep.varphi},
                {"active_pct", sweep.active_pct},
                {"methods", sweep.methods},
                {"trials", sweep.trials}};
  j["temporal"] = {{"varphi", temporal.varphi},       {"psi", temporal.psi},
                   {"active_fraction", temporal.active_fraction},
                   {"frames", temporal.frames},       {"trials", temporal.trials},
                   {"freeze_plan", temporal.freeze_plan}, {"joint", temporal.joint}};
  j["intel"] = {{"data", intel.data},
                {"locations", intel.locations},
                {"sensors", intel.sensors},
                {"interval_s", intel.interval_s},
                {"window_s", intel.window_s},
                {"temp_low", intel.temp_low},
                {"temp_high", intel.temp_high},
                {"radius_m", intel.radius_m},
                {"active_pct", intel.active_pct},
                {"bits_active_pct", intel.bits_active_pct},
                {"temporal_rows", intel.temporal_rows},
                {"first_interval", intel.first_interval},
                {"frames", intel.frames},
                {"trials", intel.trials}};
  j["consistency"] = {{"instances", consistency.instances},
                      {"sensors", consistency.sensors},
                      {"rows", consistency.rows},
                      {"min_bits", consistency.min_bits},
                      {"trials", consistency.trials},
                      {"varphi", consistency.varphi},
                      {"real_quantizer", consistency.real_quantizer}};
  // Thread count is excluded: results do not depend on it.
  return j.dump();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  try {
    check_keys(j, "config",
               {"scenario", "seed", "threads", "synthetic", "link", "optimizer", "bound", "sweep",
                "temporal", "intel", "consistency", "description"});
    read(j, "scenario", c.scenario);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("synthetic")) {
      const json& s = j["synthetic"];
      check_keys(s, "synthetic",
                 {"sensors", "radius_m", "sigma", "noise_std_min", "noise_std_max"});
      read(s, "sensors", c.synthetic.sensors);
      read(s, "radius_m", c.synthetic.radius_m);
      read(s, "sigma", c.synthetic.sigma);
      read(s, "noise_std_min", c.synthetic.noise_std_min);
      read(s, "noise_std_max", c.synthetic.noise_std_max);
    }
    if (j.contains("link")) from(j["link"], c.link);
    if (j.contains("optimizer")) from(j["optimizer"], c.optimizer);
    if (j.contains("bound")) {
      const json& s = j["bound"];
      check_keys(s, "bound",
                 {"sensor_grid", "active_fraction", "bits", "k_values", "varphi", "trials"});
      read(s, "sensor_grid", c.bound.sensor_grid);
      read(s, "active_fraction", c.bound.active_fraction);
      read(s, "bits", c.bound.bits);
      read(s, "k_values", c.bound.k_values);
      read(s, "varphi", c.bound.varphi);
      read(s, "trials", c.bound.trials);
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      check_keys(s, "sweep", {"varphi", "active_pct", "methods", "trials"});
      read(s, "varphi", c.sweep.varphi);
      read(s, "active_pct", c.sweep.active_pct);
      read(s, "methods", c.sweep.methods);
      read(s, "trials", c.sweep.trials);
    }
    if (j.contains("temporal")) {
      const json& s = j["temporal"];
      check_keys(s, "temporal",
                 {"varphi", "psi", "active_fraction", "frames", "trials", "freeze_plan", "joint"});
      read(s, "varphi", c.temporal.varphi);
      read(s, "psi", c.temporal.psi);
      read(s, "active_fraction", c.temporal.active_fraction);
      read(s, "frames", c.temporal.frames);
      read(s, "trials", c.temporal.trials);
      read(s, "freeze_plan", c.temporal.freeze_plan);
      read(s, "joint", c.temporal.joint);
    }
    if (j.contains("intel")) {
      const json& s = j["intel"];
      check_keys(s, "intel",
                 {"data", "locations", "sensors", "interval_s", "window_s", "temp_low",
                  "temp_high", "radius_m", "active_pct", "bits_active_pct", "temporal_rows",
                  "first_interval", "frames", "trials"});
      read(s, "data", c.intel.data);
      read(s, "locations", c.intel.locations);
      read(s, "sensors", c.intel.sensors);
      read(s, "interval_s", c.intel.interval_s);
      read(s, "window_s", c.intel.window_s);
      read(s, "temp_low", c.intel.temp_low);
      read(s, "temp_high", c.intel.temp_high);
      read(s, "radius_m", c.intel.radius_m);
      read(s, "active_pct", c.intel.active_pct);
      read(s, "bits_active_pct", c.intel.bits_active_pct);
      read(s, "temporal_rows", c.intel.temporal_rows);
      read(s, "first_interval", c.intel.first_interval);
      read(s, "frames", c.intel.frames);
      read(s, "trials", c.intel.trials);
    }
    if (j.contains("consistency")) {
      const json& s = j["consistency"];
      check_keys(s, "consistency",
                 {"instances", "sensors", "rows", "min_bits", "trials", "varphi",
                  "real_quantizer"});
      read(s, "instances", c.consistency.instances);
      read(s, "sensors", c.consistency.sensors);
      read(s, "rows", c.consistency.rows);
      read(s, "min_bits", c.consistency.min_bits);
      read(s, "trials", c.consistency.trials);
      read(s, "varphi", c.consistency.varphi);
      read(s, "real_quantizer", c.consistency.real_quantizer);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config has a value of the wrong type: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return derive_seed(master, trial);
}

std::uint64_t stream_seed(std::uint64_t trial_seed, TrialStream stream) {
  return derive_seed(trial_seed, static_cast<std::uint64_t>(stream));
}

SyntheticInstance make_instance(const ExperimentConfig& config, int sensors, double varphi,
                                std::uint64_t seed) {
  SyntheticInstance inst;
  inst.layout = place_sensors(static_cast<std::size_t>(sensors), config.synthetic.radius_m,
                              stream_seed(seed, TrialStream::kLayout));
  CorrelationSpec spec;
  spec.sigma = Vector::Constant(sensors, config.synthetic.sigma);
  spec.varphi = varphi;
  inst.model.mean = Vector::Zero(sensors);
  inst.model.prior_cov = build_prior_cov(inst.layout, spec);
  std::mt19937_64 rng(stream_seed(seed, TrialStream::kNoise));
  std::uniform_real_distribution<double> noise_std(config.synthetic.noise_std_min,
                                                   config.synthetic.noise_std_max);
  Vector var(sensors);
  for (int i = 0; i < sensors; ++i) {
    const double s = noise_std(rng);
    var(i) = s * s;
  }
  inst.model.noise_cov = var.asDiagonal();
  inst.link = build_link_profile(inst.layout, config.link.settings(),
                                 stream_seed(seed, TrialStream::kFading));
  return inst;
}

double normalized_mse(const MseEvaluator& evaluator, const SelectionPlan& plan, int k_max) {
  const int n = static_cast<int>(plan.size());
  const double eps = n <= evaluator.enumeration_cap
                         ? evaluator.averaged(plan)
                         : evaluator.bound(plan, std::min(k_max, n - 1));
  return eps / evaluator.trace_prior();
}

std::size_t rows_for_fraction(int sensors, double fraction) {
  const auto n = static_cast<long>(std::lround(fraction * sensors));
  return static_cast<std::size_t>(std::clamp<long>(n, 1, sensors));
}

SelectionPlan plan_for_method(const std::string& method, const MseEvaluator& evaluator,
                              const LinkProfile& link, std::size_t rows,
                              const OptimizerConfig& optimizer, std::uint64_t seed) {
  const std::uint64_t init_seed = stream_seed(seed, TrialStream::kInitialPlan);
  if (method == "separate" || method == "joint") {
    const SelectionPlan initial =
        random_feasible_plan(link.tx_power, rows, 1, optimizer.power_cap, init_seed);
    return method == "separate"
               ? optimize_separate(evaluator, link.tx_power, optimizer, initial).plan
               : optimize_joint(evaluator, link.tx_power, optimizer, initial).plan;
  }
  if (method == "error-free") {
    return baseline_error_free(evaluator, link.tx_power, rows, optimizer, init_seed).plan;
  }
  if (method.rfind("random-", 0) == 0) {
    return baseline_random(evaluator.sensors(), rows, parse_method_bits(method, "random-"),
                           link.tx_power, optimizer.power_cap,
                           stream_seed(seed, TrialStream::kRandomBaseline));
  }
  if (method.rfind("channel-gain-", 0) == 0) {
    return baseline_channel_gain(link.gain, rows, parse_method_bits(method, "channel-gain-"));
  }
  throw InvalidArgument("unknown method " + method);
}

double SweepCell::mean() const { return mean_of(nmse); }
double SweepCell::standard_error() const { return se_of(nmse); }
std::size_t SweepCell::failures() const {
  return static_cast<std::size_t>(
      std::count_if(nmse.begin(), nmse.end(), [](double v) { return std::isnan(v); }));
}

std::vector<BoundRow> bound_study(const ExperimentConfig& config) {
  config.validate();
  const BoundStudyConfig& b = config.bound;
  std::vector<BoundRow> out;
  for (int m : b.sensor_grid) {
    const std::size_t rows = rows_for_fraction(m, b.active_fraction);
    std::vector<int> ks;
    for (int k : b.k_values) {
      if (k >= 0 && k <= static_cast<int>(rows) - 1) ks.push_back(k);
    }
    if (std::find(ks.begin(), ks.end(), static_cast<int>(rows) - 1) == ks.end()) {
      ks.push_back(static_cast<int>(rows) - 1);
    }
    const auto trials = static_cast<std::size_t>(b.trials);
    std::vector<std::vector<double>> exact(ks.size(), std::vector<double>(trials));
    std::vector<std::vector<double>> bound(ks.size(), std::vector<double>(trials));
    parallel_for(trials, config.threads, [&](std::size_t t) {
      const std::uint64_t seed = trial_seed(config.seed, t);
      const SyntheticInstance inst = make_instance(config, m, b.varphi, seed);
      const MseEvaluator ev = MseEvaluator::from(inst.model, inst.link);
      const SelectionPlan plan = baseline_random(static_cast<std::size_t>(m), rows, b.bits,
                                                 inst.link.tx_power,
                                                 power_cap_for(config, rows),
                                                 stream_seed(seed, TrialStream::kRandomBaseline));
      const MseReport full = ev.report(plan, static_cast<int>(rows) - 1);
      for (std::size_t q = 0; q < ks.size(); ++q) {
        exact[q][t] = full.exact / full.trace_prior;
        bound[q][t] = ev.bound(plan, ks[q]) / full.trace_prior;
      }
    });
    for (std::size_t q = 0; q < ks.size(); ++q) {
      BoundRow r;
      r.sensors = m;
      r.rows = rows;
      r.k = ks[q];
      r.nmse_exact = mean_of(exact[q]);
      r.nmse_bound = mean_of(bound[q]);
      r.rel_error = std::abs(r.nmse_bound - r.nmse_exact) / r.nmse_exact;
      r.trials = trials;
      out.push_back(r);
    }
  }
  return out;
}

void write_bound_csv(std::ostream& out, const std::vector<BoundRow>& rows,
                     const ExperimentConfig& config) {
  CsvWriter csv(out, {"sensors", "active", "k", "nmse_exact", "nmse_bound", "rel_error", "trials",
                      "seed", "config_hash"});
  const std::string h = config.hash();
  for (const BoundRow& r : rows) {
    csv.cell(r.sensors).cell(r.rows).cell(r.k).cell(r.nmse_exact).cell(r.nmse_bound);
    csv.cell(r.rel_error).cell(r.trials).cell(static_cast<unsigned long long>(config.seed));
    csv.cell(h).end_row();
  }
}

std::vector<SweepCell> selection_sweep(const ExperimentConfig& config) {
  config.validate();
  const SweepConfig& s = config.sweep;
  const int m = config.synthetic.sensors;
  std::vector<SweepCell> cells;
  for (double phi : s.varphi) {
    for (double pct : s.active_pct) {
      for (const std::string& method : s.methods) {
        SweepCell c;
        c.varphi = phi;
        c.active_pct = pct;
        c.rows = rows_for_fraction(m, pct / 100.0);
        c.method = method;
        c.nmse.assign(static_cast<std::size_t>(s.trials), kNaN);
        c.errors.assign(static_cast<std::size_t>(s.trials), "");
        cells.push_back(std::move(c));
      }
    }
  }
  parallel_for(static_cast<std::size_t>(s.trials), config.threads, [&](std::size_t t) {
    const std::uint64_t seed = trial_seed(config.seed, t);
    std::size_t idx = 0;
    for (double phi : s.varphi) {
      const SyntheticInstance inst = make_instance(config, m, phi, seed);
      const MseEvaluator ev = MseEvaluator::from(inst.model, inst.link);
      for (std::size_t p = 0; p < s.active_pct.size(); ++p) {
        for (std::size_t q = 0; q < s.methods.size(); ++q, ++idx) {
          SweepCell& cell = cells[idx];
          OptimizerConfig opt = config.optimizer;
          opt.power_cap = power_cap_for(config, cell.rows);
          try {
            const SelectionPlan plan =
                plan_for_method(cell.method, ev, inst.link, cell.rows, opt, seed);
            cell.nmse[t] = normalized_mse(ev, plan, opt.k_max);
          } catch (const std::exception& e) {
            cell.errors[t] = e.what();
          }
        }
      }
    }
  });
  return cells;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepCell>& cells,
                     const ExperimentConfig& config) {
  CsvWriter csv(out, {"varphi", "active_pct", "active", "method", "nmse_mean", "nmse_se",
                      "trials", "failures", "seed", "config_hash"});
  const std::string h = config.hash();
  for (const SweepCell& c : cells) {
    csv.cell(c.varphi).cell(c.active_pct).cell(c.rows).cell(c.method).cell(c.mean());
    csv.cell(c.standard_error()).cell(c.nmse.size()).cell(c.failures());
    csv.cell(static_cast<unsigned long long>(config.seed)).cell(h).end_row();
  }
}

std::vector<TemporalCurve> temporal_sweep(const ExperimentConfig& config) {
  config.validate();
  const TemporalSweepConfig& ts = config.temporal;
  const int m = config.synthetic.sensors;
  const std::size_t rows = rows_for_fraction(m, ts.active_fraction);
  const auto trials = static_cast<std::size_t>(ts.trials);
  const auto frames = static_cast<std::size_t>(ts.frames);

  std::vector<TemporalCurve> curves;
  for (double phi : ts.varphi) {
    for (double psi : ts.psi) {
      TemporalCurve c;
      c.varphi = phi;
      c.psi = psi;
      c.rows = rows;
      c.memoryless_nmse.assign(trials, kNaN);
      c.frame1_nmse.assign(trials, kNaN);
      curves.push_back(std::move(c));
    }
  }
  std::vector<std::vector<std::vector<double>>> per_frame(
      curves.size(), std::vector<std::vector<double>>(frames, std::vector<double>(trials, kNaN)));

  HorizonConfig hc;
  hc.optimizer = config.optimizer;
  hc.optimizer.power_cap = power_cap_for(config, rows);
  hc.freeze_plan = ts.freeze_plan;
  hc.joint = ts.joint;

  parallel_for(trials, config.threads, [&](std::size_t t) {
    const std::uint64_t seed = trial_seed(config.seed, t);
    std::size_t idx = 0;
    for (double phi : ts.varphi) {
      const SyntheticInstance inst = make_instance(config, m, phi, seed);
      const MseEvaluator ev = MseEvaluator::from(inst.model, inst.link);
      const double memoryless = normalized_mse(
          ev,
          plan_for_method(ts.joint ? "joint" : "separate", ev, inst.link, rows, hc.optimizer,
                          seed),
          hc.optimizer.k_max);
      for (double psi : ts.psi) {
        const TemporalScenario scenario = TemporalScenario::stationary(inst.model, psi, frames);
        const HorizonResult h = run_horizon(
            scenario, inst.link, rows, hc, stream_seed(seed, TrialStream::kInitialPlan),
            stream_seed(seed, TrialStream::kSimulation));
        for (std::size_t f = 0; f < frames; ++f) {
          per_frame[idx][f][t] = h.frames[f].normalized_mse();
        }
        curves[idx].memoryless_nmse[t] = memoryless;
        curves[idx].frame1_nmse[t] = h.frames[0].normalized_mse();
        ++idx;
      }
    }
  });
  for (std::size_t c = 0; c < curves.size(); ++c) {
    for (std::size_t f = 0; f < frames; ++f) {
      curves[c].nmse_mean.push_back(mean_of(per_frame[c][f]));
      curves[c].nmse_se.push_back(se_of(per_frame[c][f]));
    }
  }
  return curves;
}

void write_temporal_csv(std::ostream& out, const std::vector<TemporalCurve>& curves,
                        const ExperimentConfig& config) {
  CsvWriter csv(out, {"varphi", "psi", "active", "frame", "nmse_mean", "nmse_se", "seed",
                      "config_hash"});
  const std::string h = config.hash();
  for (const TemporalCurve& c : curves) {
    for (std::size_t f = 0; f < c.nmse_mean.size(); ++f) {
      csv.cell(c.varphi).cell(c.psi).cell(c.rows).cell(f + 1).cell(c.nmse_mean[f]);
      csv.cell(c.nmse_se[f]).cell(static_cast<unsigned long long>(config.seed)).cell(h).end_row();
    }
  }
}

ConsistencyRow simulate_chain(const FieldModel& model, const LinkProfile& link,
                              const SelectionPlan& plan, int trials, bool real_quantizer,
                              std::uint64_t seed) {
  const MseEvaluator ev = MseEvaluator::from(model, link);
  const int n = static_cast<int>(plan.size());
  if (n > 16) throw InvalidArgument("chain simulation supports at most 16 plan rows");
  const auto m = static_cast<Eigen::Index>(model.size());
  const Matrix a = symmetric_factor(model.prior_cov);
  const Matrix b = symmetric_factor(model.noise_cov);
  const Vector per = ev.row_per(plan);
  const Vector qv = ev.row_quant_noise(plan);

  // Gain matrix per decode set: theta_hat = mu + G (z - U mu).
  std::vector<Matrix> gain(std::size_t{1} << n);
  for (SlotMask mask = 0; mask < (SlotMask{1} << n); ++mask) {
    if (mask == 0 || decode_weight(per, mask) == 0.0) continue;
    std::vector<int> idx;
    for (int k = 0; k < n; ++k) {
      if (mask & (SlotMask{1} << k)) idx.push_back(k);
    }
    const auto s = static_cast<Eigen::Index>(idx.size());
    Matrix inner(s, s), cross(m, s);
    for (Eigen::Index r = 0; r < s; ++r) {
      const int i = plan.selected[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])];
      for (Eigen::Index c = 0; c < s; ++c) {
        const int j = plan.selected[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])];
        inner(r, c) = model.prior_cov(i, j) + model.noise_cov(i, j);
      }
      inner(r, r) += qv(idx[static_cast<std::size_t>(r)]);
      cross.col(r) = model.prior_cov.col(i);
    }
    gain[mask] = inner.llt().solve(cross.transpose()).transpose();
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector g(m), h(m), z(n);
  double sum = 0.0, sum2 = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    for (Eigen::Index i = 0; i < m; ++i) g(i) = gauss(rng);
    for (Eigen::Index i = 0; i < m; ++i) h(i) = gauss(rng);
    const Vector theta = model.mean + a * g;
    const Vector x = theta + b * h;
    SlotMask mask = 0;
    int count = 0;
    for (int k = 0; k < n; ++k) {
      const int i = plan.selected[static_cast<std::size_t>(k)];
      double y = 0.0;
      if (real_quantizer) {
        y = quantize(x(i), QuantizerSpec{plan.bits[static_cast<std::size_t>(k)], ev.margins()(i),
                                         model.mean(i)});
      } else {
        y = x(i) + (unit(rng) - 0.5) * std::sqrt(12.0 * qv(k));
      }
      if (unit(rng) >= per(k)) {
        mask |= SlotMask{1} << k;
        z(count) = y - model.mean(i);
        ++count;
      }
    }
    Vector est = model.mean;
    if (mask != 0) est += gain[mask] * z.head(count);
    const double e = (theta - est).squaredNorm();
    sum += e;
    sum2 += e * e;
  }
  ConsistencyRow row;
  row.per_mean = per.mean();
  row.analytic = ev.averaged(plan);
  row.empirical = sum / trials;
  const double var = std::max(0.0, (sum2 - sum * sum / trials) / (trials - 1));
  row.standard_error = std::sqrt(var / trials);
  row.z = row.standard_error > 0.0 ? (row.empirical - row.analytic) / row.standard_error
                                   : (row.empirical == row.analytic ? 0.0 : kNaN);
  return row;
}

std::vector<ConsistencyRow> consistency_study(const ExperimentConfig& config) {
  config.validate();
  const ConsistencyConfig& cc = config.consistency;
  std::vector<ConsistencyRow> rows(static_cast<std::size_t>(cc.instances));
  parallel_for(rows.size(), config.threads, [&](std::size_t k) {
    const std::uint64_t seed = trial_seed(config.seed, k);
    SyntheticInstance inst = make_instance(config, cc.sensors, cc.varphi, seed);
    std::mt19937_64 rng(stream_seed(seed, TrialStream::kRandomBaseline));
    std::uniform_real_distribution<double> per(0.0, 0.5);
    Vector p(cc.sensors);
    for (int i = 0; i < cc.sensors; ++i) p(i) = per(rng);
    const LinkProfile link = fixed_per_profile(p, config.optimizer.max_bits);
    SelectionPlan plan = random_feasible_plan(link.tx_power, static_cast<std::size_t>(cc.rows), 1,
                                              std::numeric_limits<double>::infinity(),
                                              stream_seed(seed, TrialStream::kInitialPlan));
    std::uniform_int_distribution<int> bits(cc.min_bits, config.optimizer.max_bits);
    for (int& b : plan.bits) b = bits(rng);
    ConsistencyRow r = simulate_chain(inst.model, link, plan, cc.trials, cc.real_quantizer,
                                      stream_seed(seed, TrialStream::kSimulation));
    r.instance = static_cast<int>(k);
    rows[k] = r;
  });
  return rows;
}

void write_consistency_csv(std::ostream& out, const std::vector<ConsistencyRow>& rows,
                           const ExperimentConfig& config) {
  CsvWriter csv(out, {"instance", "per_mean", "mse_analytic", "mse_empirical", "se", "z",
                      "seed", "config_hash"});
  const std::string h = config.hash();
  for (const ConsistencyRow& r : rows) {
    csv.cell(r.instance).cell(r.per_mean).cell(r.analytic).cell(r.empirical);
    csv.cell(r.standard_error).cell(r.z).cell(static_cast<unsigned long long>(config.seed));
    csv.cell(h).end_row();
  }
}

IntelPrepareSummary intel_prepare(const ExperimentConfig& config,
                                  const std::filesystem::path& model_dir) {
  config.validate();
  const IntelConfig& ic = config.intel;
  if (ic.data.empty()) throw InvalidArgument("intel.data must name the raw log file");
  std::ifstream in(ic.data);
  if (!in) throw InvalidArgument("cannot open " + ic.data);
  IntelPrepareSummary summary;
  intel::ParseResult parsed = intel::parse_readings(in, ic.sensors);
  summary.parse = parsed.report;

  intel::BinningConfig bc;
  bc.sensors = ic.sensors;
  bc.interval_s = ic.interval_s;
  bc.window_s = ic.window_s;
  bc.temp_low = ic.temp_low;
  bc.temp_high = ic.temp_high;
  const intel::BinnedPanel panel = intel::bin_panel(parsed.readings, bc);
  summary.missing = panel.report;
  summary.days = panel.day_count();
  const intel::ParameterCells cells = intel::estimate_parameters(panel);
  intel::MomentReport mr;
  intel::EmpiricalModel model = intel::estimate_moments(cells, &mr);
  model.interval_s = ic.interval_s;
  model.window = bc.window_intervals();
  summary.alpha_exclusions = mr.alpha_exclusions.size();
  intel::write_model(model_dir, model);

  SensorLayout layout;
  if (!ic.locations.empty()) {
    std::ifstream loc(ic.locations);
    if (!loc) throw InvalidArgument("cannot open " + ic.locations);
    layout = intel::read_mote_locations(loc, ic.sensors);
  } else {
    layout = place_sensors(static_cast<std::size_t>(ic.sensors), ic.radius_m,
                           stream_seed(config.seed, TrialStream::kLayout));
  }
  std::ofstream lay(model_dir / "layout.txt");
  write_layout(lay, layout);

  std::ofstream diag(model_dir / "diagnostics.csv");
  CsvWriter csv(diag, {"interval", "theta_bar", "theta_hat", "xi"});
  for (const intel::DiagnosticRow& r : intel::model_diagnostics(model, cells)) {
    csv.cell(r.interval).cell(r.theta_bar).cell(r.theta_hat).cell(r.xi).end_row();
  }
  return summary;
}

void intel_run(const ExperimentConfig& config, const std::filesystem::path& model_dir,
               const std::filesystem::path& out_dir) {
  config.validate();
  const IntelConfig& ic = config.intel;
  const intel::EmpiricalModel model = intel::read_model(model_dir);
  std::ifstream lay(model_dir / "layout.txt");
  if (!lay) throw InvalidArgument("model directory lacks layout.txt");
  const SensorLayout layout = read_layout(lay);
  if (layout.size() != static_cast<std::size_t>(model.sensors)) {
    throw InvalidArgument("layout and model disagree on the sensor count");
  }
  const LinkProfile link = build_link_profile(layout, config.link.settings(),
                                              stream_seed(config.seed, TrialStream::kFading));
  const int m = model.sensors;
  const std::string h = config.hash();
  const auto seed_cell = static_cast<unsigned long long>(config.seed);

  std::vector<std::size_t> usable;
  for (std::size_t t = 0; t < model.intervals(); ++t) {
    if (model.day_counts[t] >= 2 && model.prior_cov[t].trace() > 0.0) usable.push_back(t);
  }
  if (usable.empty()) throw InvalidArgument("model has no interval with usable statistics");
  const auto trials = static_cast<std::size_t>(ic.trials);
  auto interval_for = [&](std::uint64_t seed) {
    std::mt19937_64 rng(stream_seed(seed, TrialStream::kSimulation));
    return usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
  };

  // Memoryless selection sweep.
  {
    const std::vector<std::string> methods = config.sweep.methods;
    std::vector<std::vector<double>> res(ic.active_pct.size() * methods.size(),
                                         std::vector<double>(trials, kNaN));
    parallel_for(trials, config.threads, [&](std::size_t t) {
      const std::uint64_t seed = trial_seed(config.seed, t);
      const FieldModel field = model.field(interval_for(seed));
      const MseEvaluator ev = MseEvaluator::from(field, link);
      for (std::size_t p = 0; p < ic.active_pct.size(); ++p) {
        const std::size_t rows = rows_for_fraction(m, ic.active_pct[p] / 100.0);
        OptimizerConfig opt = config.optimizer;
        opt.power_cap = power_cap_for(config, rows);
        for (std::size_t q = 0; q < methods.size(); ++q) {
          try {
            res[p * methods.size() + q][t] =
                normalized_mse(ev, plan_for_method(methods[q], ev, link, rows, opt, seed),
                               opt.k_max);
          } catch (const std::exception&) {
          }
        }
      }
    });
    std::ofstream out = open_out(out_dir, "intel_memoryless.csv");
    CsvWriter csv(out, {"active_pct", "active", "method", "nmse_mean", "nmse_se", "trials",
                        "failures", "seed", "config_hash"});
    for (std::size_t p = 0; p < ic.active_pct.size(); ++p) {
      for (std::size_t q = 0; q < methods.size(); ++q) {
        const auto& v = res[p * methods.size() + q];
        csv.cell(ic.active_pct[p]).cell(rows_for_fraction(m, ic.active_pct[p] / 100.0));
        csv.cell(methods[q]).cell(mean_of(v)).cell(se_of(v)).cell(trials);
        csv.cell(static_cast<std::size_t>(std::count_if(v.begin(), v.end(),
                                                        [](double x) { return std::isnan(x); })));
        csv.cell(seed_cell).cell(h).end_row();
      }
    }
  }

  // Fixed-bit sweep with optimized selection.
  {
    const int bmax = config.optimizer.max_bits;
    std::vector<std::vector<double>> res(ic.bits_active_pct.size() * static_cast<std::size_t>(bmax),
                                         std::vector<double>(trials, kNaN));
    parallel_for(trials, config.threads, [&](std::size_t t) {
      const std::uint64_t seed = trial_seed(config.seed, t);
      const FieldModel field = model.field(interval_for(seed));
      const MseEvaluator ev = MseEvaluator::from(field, link);
      for (std::size_t p = 0; p < ic.bits_active_pct.size(); ++p) {
        const std::size_t rows = rows_for_fraction(m, ic.bits_active_pct[p] / 100.0);
        OptimizerConfig opt = config.optimizer;
        opt.power_cap = power_cap_for(config, rows);
        for (int b = 1; b <= bmax; ++b) {
          try {
            const SelectionPlan init = random_feasible_plan(
                link.tx_power, rows, b, opt.power_cap,
                stream_seed(seed, TrialStream::kInitialPlan));
            res[p * static_cast<std::size_t>(bmax) + static_cast<std::size_t>(b - 1)][t] =
                normalized_mse(ev, optimize_rows(ev, link.tx_power, opt, init).plan, opt.k_max);
          } catch (const std::exception&) {
          }
        }
      }
    });
    std::ofstream out = open_out(out_dir, "intel_bits.csv");
    CsvWriter csv(out, {"active_pct", "active", "bits", "nmse_mean", "nmse_se", "trials", "seed",
                        "config_hash"});
    for (std::size_t p = 0; p < ic.bits_active_pct.size(); ++p) {
      for (int b = 1; b <= bmax; ++b) {
        const auto& v = res[p * static_cast<std::size_t>(bmax) + static_cast<std::size_t>(b - 1)];
        csv.cell(ic.bits_active_pct[p]).cell(rows_for_fraction(m, ic.bits_active_pct[p] / 100.0));
        csv.cell(b).cell(mean_of(v)).cell(se_of(v)).cell(trials).cell(seed_cell).cell(h).end_row();
      }
    }
  }

  // Temporal evolution over consecutive intervals.
  {
    const auto first = static_cast<std::size_t>(std::max(ic.first_interval, 0));
    if (first >= model.intervals()) throw InvalidArgument("first_interval beyond the model");
    const std::size_t frames =
        std::min(static_cast<std::size_t>(ic.frames), model.intervals() - first);
    const TemporalScenario scenario = model.scenario(first, frames);
    const auto rows = static_cast<std::size_t>(ic.temporal_rows);
    HorizonConfig hc;
    hc.optimizer = config.optimizer;
    hc.optimizer.power_cap = power_cap_for(config, rows);
    std::vector<std::vector<double>> res(frames, std::vector<double>(trials, kNaN));
    parallel_for(trials, config.threads, [&](std::size_t t) {
      const std::uint64_t seed = trial_seed(config.seed, t);
      const HorizonResult hr =
          run_horizon(scenario, link, rows, hc, stream_seed(seed, TrialStream::kInitialPlan),
                      stream_seed(seed, TrialStream::kSimulation));
      for (std::size_t f = 0; f < frames; ++f) res[f][t] = hr.frames[f].normalized_mse();
    });
    std::ofstream out = open_out(out_dir, "intel_temporal.csv");
    CsvWriter csv(out, {"frame", "interval", "active", "nmse_mean", "nmse_se", "trials", "seed",
                        "config_hash"});
    for (std::size_t f = 0; f < frames; ++f) {
      csv.cell(f + 1).cell(first + f).cell(rows).cell(mean_of(res[f])).cell(se_of(res[f]));
      csv.cell(trials).cell(seed_cell).cell(h).end_row();
    }
  }

  // Diagnostics recorded at preparation time.
  {
    std::ifstream diag(model_dir / "diagnostics.csv");
    if (!diag) throw InvalidArgument("model directory lacks diagnostics.csv");
    std::ofstream out = open_out(out_dir, "intel_diagnostics.csv");
    std::string line;
    std::getline(diag, line);
    out << line << ",seed,config_hash\n";
    while (std::getline(diag, line)) {
      if (!line.empty()) out << line << ',' << seed_cell << ',' << h << '\n';
    }
  }
}

void run_bound_study(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::ofstream out = open_out(out_dir, "bound.csv");
  write_bound_csv(out, bound_study(config), config);
}

void run_selection_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const std::vector<SweepCell> cells = selection_sweep(config);
  std::ofstream out = open_out(out_dir, "sweep.csv");
  write_sweep_csv(out, cells, config);
  std::ofstream err = open_out(out_dir, "sweep_failures.csv");
  CsvWriter csv(err, {"varphi", "active_pct", "method", "trial", "error", "seed", "config_hash"});
  for (const SweepCell& c : cells) {
    for (std::size_t t = 0; t < c.errors.size(); ++t) {
      if (c.errors[t].empty()) continue;
      csv.cell(c.varphi).cell(c.active_pct).cell(c.method).cell(t).cell(c.errors[t]);
      csv.cell(static_cast<unsigned long long>(config.seed)).cell(config.hash()).end_row();
    }
  }
}

void run_temporal_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::ofstream out = open_out(out_dir, "temporal.csv");
  write_temporal_csv(out, temporal_sweep(config), config);
}

void run_consistency(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::ofstream out = open_out(out_dir, "consistency.csv");
  write_consistency_csv(out, consistency_study(config), config);
}

}  // namespace mmtc
