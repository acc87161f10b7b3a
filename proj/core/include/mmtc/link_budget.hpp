#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mmtc/common.hpp"
#include "mmtc/plan.hpp"
#include "mmtc/spatial_field.hpp"

namespace mmtc {

/// One resource element: slot duration T_s, bandwidth B_s and noise density N_o (W/Hz).
struct SlotConfig {
  double slot_duration = 71.4e-6;
  double slot_bandwidth = 15e3;
  double noise_density = 3.981071705534972e-21;  // -174 dBm/Hz

  double symbols_per_slot() const noexcept { return slot_duration * slot_bandwidth; }
  void validate() const;
};

double dbm_to_watts(double dbm) noexcept;
double watts_to_dbm(double watts) noexcept;

/// A modulation and coding scheme carrying `info_bits` information bits per slot.
struct McsEntry {
  int info_bits = 1;
  int modulation_bits = 1;  // coded bits per symbol, L
  double code_rate = 1.0;   // R

  /// Coded bits per slot, T_s B_s L (not necessarily an integer).
  double coded_bits(const SlotConfig& slot) const noexcept {
    return slot.symbols_per_slot() * modulation_bits;
  }
};

/// Mapping from information bits n = 1..B to the MCS that carries them.
class McsTable {
 public:
  McsTable() = default;
  /// Entries must be sorted by info_bits = 1, 2, ..., B and satisfy
  /// info_bits = round(T_s B_s R L).
  McsTable(std::vector<McsEntry> entries, const SlotConfig& slot);

  int max_bits() const noexcept { return static_cast<int>(entries_.size()); }
  const McsEntry& at(int info_bits) const;
  const std::vector<McsEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<McsEntry> entries_;
};

/// One entry per n = 1..max_bits: the smallest modulation in {1,2,4,6,8} that
/// reaches n with a rate <= max_rate, and rate min(n / (T_s B_s L), max_rate).
McsTable default_mcs_table(const SlotConfig& slot, int max_bits = 8, double max_rate = 0.93);

/// Text format: one "n_bits L code_rate" line per entry, '#' comments allowed.
McsTable read_mcs_table(std::istream& in, const SlotConfig& slot);
void write_mcs_table(std::ostream& out, const McsTable& table);

/// Relation between raw and decoded packet error rate.
struct CodingModel {
  enum class Kind { kIdentity, kWaterfall };
  Kind kind = Kind::kIdentity;
  /// c in PER = PER_raw^(c / R); must be >= 1.
  double exponent_scale = 1.0;

  static CodingModel identity() { return {Kind::kIdentity, 1.0}; }
  static CodingModel waterfall(double exponent_scale);
  std::string name() const;
};

enum class FadingMode { kDeterministic, kRayleigh };

/// G = D^-alpha sigma_g^2, times a unit-mean exponential draw in Rayleigh mode.
double channel_gain(double distance, double decay_exponent, double fading_power,
                    FadingMode mode, std::uint64_t rng_seed);

/// rho = G P / (B_s N_o).
double snr(double gain, double tx_power, const SlotConfig& slot);

/// Gray-mapped AWGN bit error rate for L bits per symbol; L in {1, 2, 4, 6, 8}.
double raw_ber(double rho, int modulation_bits);

/// 1 - (1 - ber)^coded_bits.
double raw_per(double ber, double coded_bits);

double coded_per(double per_raw, const McsEntry& mcs, const CodingModel& model);

/// Everything the link layer contributes to a scenario.
struct LinkSettings {
  SlotConfig slot{};
  McsTable mcs{};
  CodingModel coding{};
  double tx_power_w = 1e-3;  // 0 dBm
  double decay_exponent = 3.0;
  double fading_power = 1.0;
  FadingMode fading = FadingMode::kDeterministic;
  /// Extra attenuation applied on top of the power-law path loss, in dB.
  double excess_loss_db = 0.0;

  static LinkSettings defaults();
};

/// Per-sensor channel state and packet error rates for every bit count.
struct LinkProfile {
  Vector gain;
  Vector tx_power;
  Vector snr;
  Matrix per_raw;  // M x B, column b-1 holds bits = b
  Matrix per;      // M x B

  std::size_t size() const noexcept { return static_cast<std::size_t>(gain.size()); }
  int max_bits() const noexcept { return static_cast<int>(per.cols()); }
  double per_at(int sensor, int bits) const { return per(sensor, bits - 1); }
  Matrix power_matrix() const { return tx_power.asDiagonal(); }
};

/// PER tables from given gains and transmit powers.
LinkProfile make_link_profile(const Vector& gains, const Vector& tx_power,
                              const LinkSettings& settings);

/// Gains from CN distances (power-law path loss plus excess loss and optional fading).
LinkProfile build_link_profile(const SensorLayout& layout, const LinkSettings& settings,
                               std::uint64_t rng_seed);

/// Profile with prescribed PERs independent of the bit count (analysis and tests).
LinkProfile fixed_per_profile(const Vector& per, int max_bits, double tx_power = 1e-3);

/// tr(V P V^T): sum of transmit powers of the selected sensors.
double power_consumed(const SelectionPlan& plan, const Vector& tx_power);

}  // namespace mmtc
