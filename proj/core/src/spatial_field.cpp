#include "mmtc/spatial_field.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace mmtc {

double distance(const Point2& a, const Point2& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Vector SensorLayout::cn_distances() const {
  Vector d(static_cast<Eigen::Index>(positions.size()));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    d(static_cast<Eigen::Index>(i)) = distance(positions[i], cn_position);
  }
  return d;
}

Matrix SensorLayout::pairwise_distances() const {
  const auto m = static_cast<Eigen::Index>(positions.size());
  Matrix d = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double dij = distance(positions[static_cast<std::size_t>(i)],
                                  positions[static_cast<std::size_t>(j)]);
      d(i, j) = dij;
      d(j, i) = dij;
    }
  }
  return d;
}

CorrelationSpec CorrelationSpec::uniform(std::size_t count, double sigma, double varphi) {
  return CorrelationSpec{Vector::Constant(static_cast<Eigen::Index>(count), sigma), varphi};
}

CorrelationKernel exponential_kernel(double varphi) {
  if (!(varphi >= 0.0 && varphi <= 1.0)) {
    throw InvalidArgument("varphi must lie in [0, 1]");
  }
  return [varphi](double d) {
    if (d == 0.0) return 1.0;
    return std::pow(varphi, d);
  };
}

namespace {

void check_symmetric(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw InvalidArgument(std::string(name) + " is not square");
  }
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw NotPositiveDefinite(std::string(name) + " is not symmetric");
  }
}

}  // namespace

bool is_psd(const Matrix& cov, double rel_tol) {
  if (cov.rows() != cov.cols()) return false;
  if (cov.size() == 0) return true;
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  const double tol = rel_tol * std::max(std::abs(cov.trace()), 1e-300);
  return es.eigenvalues().minCoeff() >= -tol;
}

void FieldModel::validate() const {
  const auto m = mean.size();
  if (m < 1) throw InvalidArgument("field model needs at least one sensor");
  if (prior_cov.rows() != m || prior_cov.cols() != m || noise_cov.rows() != m ||
      noise_cov.cols() != m) {
    throw InvalidArgument("field model dimension mismatch");
  }
  check_symmetric(prior_cov, "prior covariance");
  check_symmetric(noise_cov, "noise covariance");
  if (!is_psd(prior_cov)) throw NotPositiveDefinite("prior covariance is indefinite");
  if (!is_psd(noise_cov)) throw NotPositiveDefinite("noise covariance is indefinite");
}

SensorLayout place_sensors(std::size_t count, double radius, std::uint64_t rng_seed) {
  if (count == 0) throw InvalidArgument("sensor count must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("deployment radius must be positive");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SensorLayout layout;
  layout.positions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = radius * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    layout.positions.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return layout;
}

Matrix build_prior_cov(const SensorLayout& layout, const Vector& sigma,
                       const CorrelationKernel& kernel) {
  const auto m = static_cast<Eigen::Index>(layout.size());
  if (sigma.size() != m) throw InvalidArgument("sigma length does not match layout");
  if ((sigma.array() < 0.0).any()) throw InvalidArgument("sigma must be nonnegative");
  Matrix c(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    c(i, i) = sigma(i) * sigma(i);
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = distance(layout.positions[static_cast<std::size_t>(i)],
                                layout.positions[static_cast<std::size_t>(j)]);
      const double v = sigma(i) * sigma(j) * kernel(d);
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  return c;
}

Matrix build_prior_cov(const SensorLayout& layout, const CorrelationSpec& spec) {
  return build_prior_cov(layout, spec.sigma, exponential_kernel(spec.varphi));
}

Matrix symmetric_factor(const Matrix& cov) {
  if (cov.rows() != cov.cols()) throw InvalidArgument("covariance is not square");
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() != Eigen::Success) throw NotPositiveDefinite("eigendecomposition failed");
  const double tol = 1e-9 * std::max(std::abs(cov.trace()), 1e-300);
  Vector lambda = es.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -tol) {
      std::ostringstream msg;
      msg << "covariance is indefinite: eigenvalue " << lambda(i) << " below tolerance "
          << -tol;
      throw NotPositiveDefinite(msg.str());
    }
    lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
  }
  return es.eigenvectors() * lambda.asDiagonal();
}

Matrix clamp_psd(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector lambda = es.eigenvalues().cwiseMax(0.0);
  Matrix out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

Realization sample_realization(const FieldModel& model, std::uint64_t rng_seed) {
  model.validate();
  const Matrix a = symmetric_factor(model.prior_cov);
  const Matrix b = symmetric_factor(model.noise_cov);
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto m = model.mean.size();
  Vector g(m), h(m);
  for (Eigen::Index i = 0; i < m; ++i) g(i) = gauss(rng);
  for (Eigen::Index i = 0; i < m; ++i) h(i) = gauss(rng);
  Realization r;
  r.theta = model.mean + a * g;
  r.x = r.theta + b * h;
  return r;
}

void write_layout(std::ostream& out, const SensorLayout& layout) {
  out << std::setprecision(17);
  out << "CN " << layout.cn_position.x << ' ' << layout.cn_position.y << '\n';
  for (std::size_t i = 0; i < layout.positions.size(); ++i) {
    out << i << ' ' << layout.positions[i].x << ' ' << layout.positions[i].y << '\n';
  }
}

SensorLayout read_layout(std::istream& in) {
  SensorLayout layout;
  std::string line;
  bool have_cn = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag.starts_with('#')) continue;
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) throw InvalidArgument("malformed layout line: " + line);
    if (tag == "CN") {
      layout.cn_position = {x, y};
      have_cn = true;
      continue;
    }
    std::size_t idx = 0;
    try {
      idx = std::stoul(tag);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed layout index: " + tag);
    }
    if (idx != expected) throw InvalidArgument("layout indices must be 0..M-1 in order");
    layout.positions.push_back({x, y});
    ++expected;
  }
  if (!have_cn) throw InvalidArgument("layout is missing the CN header line");
  if (layout.positions.empty()) throw InvalidArgument("layout has no sensors");
  return layout;
}

}  // namespace mmtc
