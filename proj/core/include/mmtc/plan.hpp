#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

/// Which sensors transmit and with how many bits.
///
/// Row k of the selection matrix V picks sensor `selected[k]`, which quantizes
/// with `bits[k]` bits. Unselected sensors carry no bit allocation.
struct SelectionPlan {
  std::vector<int> selected;
  std::vector<int> bits;

  std::size_t size() const noexcept { return selected.size(); }

  /// Distinct indices in [0, sensors), one bit count per row, bits in [1, max_bits].
  void validate(std::size_t sensors, int max_bits) const;
  bool contains(int sensor) const noexcept;
  /// Row-order independent 64-bit fingerprint (FNV-1a over sorted (sensor, bits)).
  std::uint64_t hash() const;
  std::string describe() const;

  /// All rows share the same bit count.
  static SelectionPlan uniform(std::vector<int> selected, int bits);
};

bool operator==(const SelectionPlan& a, const SelectionPlan& b);

}  // namespace mmtc
