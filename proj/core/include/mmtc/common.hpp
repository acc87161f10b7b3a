#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace mmtc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Bitmask over the slots (rows) of a selection plan; bit k set means slot k decoded.
using SlotMask = std::uint64_t;

/// Raised when an input violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that should be positive (semi)definite is not, beyond tolerance.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inner covariance of a decode subset is singular. Carries the offending subset.
class SingularSubset : public std::runtime_error {
 public:
  SingularSubset(const std::string& what, SlotMask subset)
      : std::runtime_error(what), subset_(subset) {}
  SlotMask subset() const noexcept { return subset_; }

 private:
  SlotMask subset_;
};

/// No selection plan satisfies the power cap.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// splitmix64 step, used to derive independent stream seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of `master`; stable across platforms and thread counts.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

inline int popcount(SlotMask m) noexcept { return std::popcount(m); }

}  // namespace mmtc
