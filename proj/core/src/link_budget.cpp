#include "mmtc/link_budget.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mmtc {

namespace {

constexpr std::array<int, 5> kModulations{1, 2, 4, 6, 8};
constexpr int kMaxMcsBits = 8;

bool supported_modulation(int l) {
  return std::find(kModulations.begin(), kModulations.end(), l) != kModulations.end();
}

double gaussian_q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// Exact Gray-coded square M-QAM bit error rate (Cho and Yoon, 2002), with
// rho the symbol SNR Es/N0 and l = log2(M) even.
double square_qam_ber(double rho, int l) {
  const int per_dim = 1 << (l / 2);  // sqrt(M)
  const double m = static_cast<double>(1 << l);
  const double arg = std::sqrt(3.0 * rho / (2.0 * (m - 1.0)));
  double total = 0.0;
  const int bits_per_dim = l / 2;
  for (int k = 1; k <= bits_per_dim; ++k) {
    const int pow_k = 1 << (k - 1);
    const int upper = (per_dim - (per_dim >> k)) - 1;  // (1 - 2^-k) sqrt(M) - 1
    double pk = 0.0;
    for (int i = 0; i <= upper; ++i) {
      const int q = (i * pow_k) / per_dim;
      const double sign = (q % 2 == 0) ? 1.0 : -1.0;
      const double weight =
          pow_k - std::floor(static_cast<double>(i * pow_k) / per_dim + 0.5);
      pk += sign * weight * std::erfc((2.0 * i + 1.0) * arg);
    }
    total += pk / per_dim;
  }
  return total / bits_per_dim;
}

}  // namespace

void SlotConfig::validate() const {
  if (!(slot_duration > 0.0) || !(slot_bandwidth > 0.0) || !(noise_density > 0.0)) {
    throw InvalidArgument("slot duration, bandwidth and noise density must be positive");
  }
}

double dbm_to_watts(double dbm) noexcept { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double watts_to_dbm(double watts) noexcept { return 10.0 * std::log10(watts * 1e3); }

McsTable::McsTable(std::vector<McsEntry> entries, const SlotConfig& slot)
    : entries_(std::move(entries)) {
  slot.validate();
  if (entries_.empty()) throw InvalidArgument("MCS table is empty");
  if (entries_.size() > static_cast<std::size_t>(kMaxMcsBits)) {
    throw InvalidArgument("MCS table supports at most 8 information bits");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const McsEntry& e = entries_[i];
    if (e.info_bits != static_cast<int>(i) + 1) {
      throw InvalidArgument("MCS entries must list info_bits 1, 2, ..., B in order");
    }
    if (!supported_modulation(e.modulation_bits)) {
      throw InvalidArgument("unsupported modulation order in MCS table");
    }
    if (!(e.code_rate > 0.0 && e.code_rate <= 1.0)) {
      throw InvalidArgument("MCS code rate must be in (0, 1]");
    }
    const double n = slot.symbols_per_slot() * e.code_rate * e.modulation_bits;
    if (std::lround(n) != e.info_bits) {
      std::ostringstream msg;
      msg << "MCS entry for " << e.info_bits << " bits carries " << n
          << " information bits per slot";
      throw InvalidArgument(msg.str());
    }
  }
}

const McsEntry& McsTable::at(int info_bits) const {
  if (info_bits < 1 || info_bits > max_bits()) {
    throw InvalidArgument("no MCS entry for " + std::to_string(info_bits) + " bits");
  }
  return entries_[static_cast<std::size_t>(info_bits - 1)];
}

McsTable default_mcs_table(const SlotConfig& slot, int max_bits, double max_rate) {
  slot.validate();
  if (max_bits < 1 || max_bits > kMaxMcsBits) {
    throw InvalidArgument("max_bits must be in [1, 8]");
  }
  const double sps = slot.symbols_per_slot();
  std::vector<McsEntry> entries;
  for (int n = 1; n <= max_bits; ++n) {
    bool found = false;
    for (int l : kModulations) {
      // Largest admissible rate must still round to n.
      if (sps * max_rate * l < n - 0.5) continue;
      const double rate = std::min(static_cast<double>(n) / (sps * l), max_rate);
      if (std::lround(sps * rate * l) != n) continue;
      entries.push_back({n, l, rate});
      found = true;
      break;
    }
    if (!found) throw InvalidArgument("slot too short to carry " + std::to_string(n) + " bits");
  }
  return McsTable(std::move(entries), slot);
}

McsTable read_mcs_table(std::istream& in, const SlotConfig& slot) {
  std::vector<McsEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    McsEntry e;
    if (!(ls >> e.info_bits)) continue;
    if (!(ls >> e.modulation_bits >> e.code_rate)) {
      throw InvalidArgument("malformed MCS line: " + line);
    }
    entries.push_back(e);
  }
  std::sort(entries.begin(), entries.end(),
            [](const McsEntry& a, const McsEntry& b) { return a.info_bits < b.info_bits; });
  return McsTable(std::move(entries), slot);
}

void write_mcs_table(std::ostream& out, const McsTable& table) {
  out << "# n_bits L code_rate\n" << std::setprecision(17);
  for (const McsEntry& e : table.entries()) {
    out << e.info_bits << ' ' << e.modulation_bits << ' ' << e.code_rate << '\n';
  }
}

CodingModel CodingModel::waterfall(double exponent_scale) {
  if (!(exponent_scale >= 1.0)) throw InvalidArgument("waterfall exponent scale must be >= 1");
  return {Kind::kWaterfall, exponent_scale};
}

std::string CodingModel::name() const {
  if (kind == Kind::kIdentity) return "identity";
  std::ostringstream s;
  s << "waterfall(c=" << exponent_scale << ")";
  return s.str();
}

double channel_gain(double distance, double decay_exponent, double fading_power,
                    FadingMode mode, std::uint64_t rng_seed) {
  if (!(distance > 0.0)) throw InvalidArgument("distance to the CN must be positive");
  if (!(decay_exponent > 0.0)) throw InvalidArgument("decay exponent must be positive");
  if (!(fading_power >= 0.0)) throw InvalidArgument("fading power must be nonnegative");
  double g = std::pow(distance, -decay_exponent) * fading_power;
  if (mode == FadingMode::kRayleigh) {
    std::mt19937_64 rng(rng_seed);
    std::exponential_distribution<double> fade(1.0);
    g *= fade(rng);
  }
  return g;
}

double snr(double gain, double tx_power, const SlotConfig& slot) {
  return gain * tx_power / (slot.slot_bandwidth * slot.noise_density);
}

double raw_ber(double rho, int modulation_bits) {
  if (!supported_modulation(modulation_bits)) {
    throw InvalidArgument("unsupported modulation order " + std::to_string(modulation_bits));
  }
  if (!(rho >= 0.0)) throw InvalidArgument("SNR must be nonnegative");
  double ber = 0.0;
  switch (modulation_bits) {
    case 1:
      ber = gaussian_q(std::sqrt(2.0 * rho));
      break;
    case 2:
      ber = gaussian_q(std::sqrt(rho));
      break;
    default:
      ber = square_qam_ber(rho, modulation_bits);
      break;
  }
  return std::clamp(ber, 0.0, 0.5);
}

double raw_per(double ber, double coded_bits) {
  if (!(ber >= 0.0 && ber <= 1.0)) throw InvalidArgument("BER must lie in [0, 1]");
  if (ber == 1.0) return coded_bits > 0.0 ? 1.0 : 0.0;
  return -std::expm1(coded_bits * std::log1p(-ber));
}

double coded_per(double per_raw, const McsEntry& mcs, const CodingModel& model) {
  if (!(per_raw >= 0.0 && per_raw <= 1.0)) throw InvalidArgument("PER must lie in [0, 1]");
  double out = per_raw;
  if (model.kind == CodingModel::Kind::kWaterfall) {
    out = std::pow(per_raw, model.exponent_scale / mcs.code_rate);
  }
  out = std::clamp(out, 0.0, 1.0);
  if (out > per_raw) throw std::logic_error("coding model increased the packet error rate");
  return out;
}

LinkSettings LinkSettings::defaults() {
  LinkSettings s;
  s.mcs = default_mcs_table(s.slot);
  return s;
}

LinkProfile make_link_profile(const Vector& gains, const Vector& tx_power,
                              const LinkSettings& settings) {
  if (gains.size() != tx_power.size()) throw InvalidArgument("gain/power length mismatch");
  if (settings.mcs.max_bits() < 1) throw InvalidArgument("link settings have no MCS table");
  const auto m = gains.size();
  const int b = settings.mcs.max_bits();
  LinkProfile p;
  p.gain = gains;
  p.tx_power = tx_power;
  p.snr.resize(m);
  p.per_raw.resize(m, b);
  p.per.resize(m, b);
  for (Eigen::Index i = 0; i < m; ++i) {
    p.snr(i) = snr(gains(i), tx_power(i), settings.slot);
    for (int n = 1; n <= b; ++n) {
      const McsEntry& e = settings.mcs.at(n);
      const double ber = raw_ber(p.snr(i), e.modulation_bits);
      const double pr = raw_per(ber, e.coded_bits(settings.slot));
      p.per_raw(i, n - 1) = pr;
      p.per(i, n - 1) = coded_per(pr, e, settings.coding);
    }
  }
  return p;
}

LinkProfile build_link_profile(const SensorLayout& layout, const LinkSettings& settings,
                               std::uint64_t rng_seed) {
  const Vector dist = layout.cn_distances();
  const double excess = std::pow(10.0, -settings.excess_loss_db / 10.0);
  Vector gains(dist.size());
  for (Eigen::Index i = 0; i < dist.size(); ++i) {
    gains(i) = excess * channel_gain(dist(i), settings.decay_exponent, settings.fading_power,
                                     settings.fading,
                                     derive_seed(rng_seed, static_cast<std::uint64_t>(i)));
  }
  return make_link_profile(gains, Vector::Constant(dist.size(), settings.tx_power_w), settings);
}

LinkProfile fixed_per_profile(const Vector& per, int max_bits, double tx_power) {
  if ((per.array() < 0.0).any() || (per.array() > 1.0).any()) {
    throw InvalidArgument("PER must lie in [0, 1]");
  }
  LinkProfile p;
  const auto m = per.size();
  p.gain = Vector::Ones(m);
  p.tx_power = Vector::Constant(m, tx_power);
  p.snr = Vector::Constant(m, std::numeric_limits<double>::quiet_NaN());
  p.per_raw = per.replicate(1, max_bits);
  p.per = p.per_raw;
  return p;
}

double power_consumed(const SelectionPlan& plan, const Vector& tx_power) {
  double total = 0.0;
  for (int s : plan.selected) {
    if (s < 0 || s >= tx_power.size()) throw InvalidArgument("plan sensor index out of range");
    total += tx_power(s);
  }
  return total;
}

}  // namespace mmtc
