#include "mmtc/quantization.hpp"

#include <algorithm>
#include <cmath>

namespace mmtc {

namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > 62) throw InvalidArgument("quantizer bits must be in [1, 62]");
}

}  // namespace

double QuantizerSpec::step() const {
  check_bits(bits);
  if (!(margin >= 0.0)) throw InvalidArgument("quantizer margin must be nonnegative");
  return std::ldexp(margin, -bits);
}

double QuantizerSpec::noise_variance() const {
  const double d = step();
  return d * d / 12.0;
}

double dynamic_margin(double prior_var, double noise_var) {
  if (prior_var < 0.0 || noise_var < 0.0) throw InvalidArgument("variances must be >= 0");
  return 6.0 * std::sqrt(prior_var + noise_var);
}

double quant_noise_variance(double margin, int bits) {
  return QuantizerSpec{bits, margin, 0.0}.noise_variance();
}

double quantize(double value, const QuantizerSpec& spec) {
  const double delta = spec.step();
  if (delta == 0.0) return spec.center;
  const double low = spec.center - 0.5 * spec.margin;
  const double cells = std::ldexp(1.0, spec.bits);
  const double k = std::clamp(std::floor((value - low) / delta), 0.0, cells - 1.0);
  return low + (k + 0.5) * delta;
}

Matrix quant_noise_cov(std::span<const QuantizerSpec> specs) {
  Vector d(static_cast<Eigen::Index>(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    d(static_cast<Eigen::Index>(i)) = specs[i].noise_variance();
  }
  return d.asDiagonal();
}

}  // namespace mmtc
