#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b) noexcept;

/// Sensor positions (meters) and the collector node position.
struct SensorLayout {
  std::vector<Point2> positions;
  Point2 cn_position{};

  std::size_t size() const noexcept { return positions.size(); }
  /// Distance of every sensor to the collector node.
  Vector cn_distances() const;
  /// Symmetric M x M matrix of pairwise distances with a zero diagonal.
  Matrix pairwise_distances() const;
};

/// Per-sensor standard deviations and the spatial correlation coefficient
/// varphi, giving K(d) = varphi^d with d in meters.
struct CorrelationSpec {
  Vector sigma;
  double varphi = 0.0;

  /// Uniform sigma for `count` sensors.
  static CorrelationSpec uniform(std::size_t count, double sigma, double varphi);
};

/// Correlation as a function of distance; K(0) must be 1 and |K(d)| <= 1.
using CorrelationKernel = std::function<double(double)>;

/// K(d) = varphi^d with the convention 0^0 = 1.
CorrelationKernel exponential_kernel(double varphi);

/// Prior mean, prior covariance and measurement noise covariance of x = theta + w.
struct FieldModel {
  Vector mean;
  Matrix prior_cov;
  Matrix noise_cov;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean.size()); }
  /// Throws InvalidArgument on dimension mismatch and NotPositiveDefinite if a
  /// covariance is asymmetric or has an eigenvalue below -1e-9 * trace.
  void validate() const;
};

/// count positions i.i.d. uniform on the disk of `radius` centered at the CN (origin).
SensorLayout place_sensors(std::size_t count, double radius, std::uint64_t rng_seed);

/// [C]_{ij} = sigma_i sigma_j K(d_ij).
Matrix build_prior_cov(const SensorLayout& layout, const CorrelationSpec& spec);
Matrix build_prior_cov(const SensorLayout& layout, const Vector& sigma,
                       const CorrelationKernel& kernel);

/// Returns A with A A^T = cov, from an eigendecomposition. Eigenvalues in
/// [-tol, 0) are clamped to zero; anything more negative throws NotPositiveDefinite.
Matrix symmetric_factor(const Matrix& cov);

/// Projects a symmetric matrix onto the PSD cone by zeroing negative eigenvalues.
Matrix clamp_psd(const Matrix& cov);

/// True when symmetric and min eigenvalue >= -1e-9 * max(trace, 1e-300).
bool is_psd(const Matrix& cov, double rel_tol = 1e-9);

struct Realization {
  Vector theta;
  Vector x;
};

/// theta ~ N(mean, prior_cov), x = theta + w with w ~ N(0, noise_cov).
Realization sample_realization(const FieldModel& model, std::uint64_t rng_seed);

/// Plain-text table: header "CN x y" then one "index x y" line per sensor.
void write_layout(std::ostream& out, const SensorLayout& layout);
SensorLayout read_layout(std::istream& in);

}  // namespace mmtc
