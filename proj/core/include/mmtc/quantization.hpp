#pragma once

#include <span>

#include "mmtc/common.hpp"

namespace mmtc {

/// Uniform mid-rise quantizer of one sensor: 2^bits cells spanning
/// [center - margin/2, center + margin/2].
struct QuantizerSpec {
  int bits = 1;
  double margin = 0.0;
  double center = 0.0;

  double step() const;
  /// Delta^2 / 12, the uniform-noise second moment.
  double noise_variance() const;
};

/// Default and hard limit on bits per measurement.
inline constexpr int kDefaultMaxBits = 8;

/// S = 6 sqrt(prior_var + noise_var).
double dynamic_margin(double prior_var, double noise_var);

/// Nearest cell center; out-of-span inputs saturate to the extreme levels.
double quantize(double value, const QuantizerSpec& spec);

/// diag(Delta_1^2/12, ..., Delta_M^2/12).
Matrix quant_noise_cov(std::span<const QuantizerSpec> specs);

/// Delta^2/12 for a given margin and bit count, without building a spec.
double quant_noise_variance(double margin, int bits);

}  // namespace mmtc
