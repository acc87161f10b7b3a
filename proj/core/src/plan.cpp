#include "mmtc/plan.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

namespace mmtc {

void SelectionPlan::validate(std::size_t sensors, int max_bits) const {
  if (selected.empty()) throw InvalidArgument("plan selects no sensors");
  if (selected.size() > sensors) throw InvalidArgument("plan selects more rows than sensors");
  if (bits.size() != selected.size()) throw InvalidArgument("plan needs one bit count per row");
  std::vector<int> sorted = selected;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("plan selects a sensor twice");
  }
  if (sorted.front() < 0 || sorted.back() >= static_cast<int>(sensors)) {
    throw InvalidArgument("plan sensor index out of range");
  }
  for (int b : bits) {
    if (b < 1 || b > max_bits) throw InvalidArgument("plan bit count out of range");
  }
}

bool SelectionPlan::contains(int sensor) const noexcept {
  return std::find(selected.begin(), selected.end(), sensor) != selected.end();
}

std::uint64_t SelectionPlan::hash() const {
  std::vector<std::pair<int, int>> rows;
  rows.reserve(selected.size());
  for (std::size_t k = 0; k < selected.size(); ++k) rows.emplace_back(selected[k], bits[k]);
  std::sort(rows.begin(), rows.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xFFu;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [s, b] : rows) {
    mix(static_cast<std::uint32_t>(s));
    mix(static_cast<std::uint32_t>(b));
  }
  return h;
}

std::string SelectionPlan::describe() const {
  std::ostringstream out;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    if (k) out << ' ';
    out << selected[k] << ':' << bits[k];
  }
  return out.str();
}

SelectionPlan SelectionPlan::uniform(std::vector<int> selected, int bits) {
  SelectionPlan p;
  p.bits.assign(selected.size(), bits);
  p.selected = std::move(selected);
  return p;
}

bool operator==(const SelectionPlan& a, const SelectionPlan& b) {
  return a.selected == b.selected && a.bits == b.bits;
}

}  // namespace mmtc
