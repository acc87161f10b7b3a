#include "mmtc/temporal.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "mmtc/quantization.hpp"
#include "mmtc/spatial_field.hpp"

namespace mmtc {

namespace {

void check_square(const Matrix& m, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
    throw InvalidArgument(std::string(what) + " has the wrong dimensions");
  }
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

std::string frame_tag(std::size_t t) { return "frame " + std::to_string(t) + ": "; }

Vector gaussian_draw(const Matrix& factor, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector g(factor.cols());
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gauss(rng);
  return factor * g;
}

}  // namespace

void DynamicsModel::validate(std::size_t sensors) const {
  if (transition.size() != process_cov.size()) {
    throw InvalidArgument("transition and process noise paths differ in length");
  }
  for (std::size_t t = 1; t < transition.size(); ++t) {
    check_square(transition[t], sensors, "transition matrix");
    check_square(process_cov[t], sensors, "process noise covariance");
    if (!is_psd(process_cov[t])) {
      throw NotPositiveDefinite(frame_tag(t + 1) + "process noise covariance is not PSD");
    }
  }
}

DynamicsModel DynamicsModel::scaled_identity(const Matrix& prior_cov, double psi,
                                             std::size_t frames) {
  if (!(psi >= 0.0 && psi <= 1.0)) throw InvalidArgument("psi must lie in [0, 1]");
  const auto m = prior_cov.rows();
  DynamicsModel d;
  d.transition.assign(frames, psi * Matrix::Identity(m, m));
  d.process_cov.assign(frames, (1.0 - psi * psi) * prior_cov);
  return d;
}

void TemporalScenario::validate() const {
  const std::size_t t = frames();
  if (t == 0) throw InvalidArgument("scenario has no frames");
  if (prior_cov.size() != t || noise_cov.size() != t || dynamics.frames() != t) {
    throw InvalidArgument("scenario paths differ in length");
  }
  const std::size_t m = sensors();
  for (std::size_t k = 0; k < t; ++k) {
    if (static_cast<std::size_t>(mean[k].size()) != m) {
      throw InvalidArgument(frame_tag(k + 1) + "mean has the wrong length");
    }
    check_square(prior_cov[k], m, "prior covariance");
    check_square(noise_cov[k], m, "noise covariance");
  }
  dynamics.validate(m);
}

TemporalScenario TemporalScenario::stationary(const FieldModel& model, double psi,
                                              std::size_t frames) {
  model.validate();
  TemporalScenario s;
  s.mean.assign(frames, model.mean);
  s.prior_cov.assign(frames, model.prior_cov);
  s.noise_cov.assign(frames, model.noise_cov);
  s.dynamics = DynamicsModel::scaled_identity(model.prior_cov, psi, frames);
  return s;
}

KalmanState KalmanState::from_prior(const Vector& mean, const Matrix& prior_cov) {
  KalmanState s;
  s.estimate = mean;
  s.cov = prior_cov;
  s.predicted_estimate = mean;
  s.predicted_cov = prior_cov;
  return s;
}

KalmanState predict(const KalmanState& previous, const Matrix& transition,
                    const Matrix& process_cov) {
  const auto m = previous.estimate.size();
  check_square(transition, static_cast<std::size_t>(m), "transition matrix");
  check_square(process_cov, static_cast<std::size_t>(m), "process noise covariance");
  KalmanState s = previous;
  s.predicted_estimate = transition * previous.estimate;
  s.predicted_cov =
      symmetrized(transition * previous.cov * transition.transpose() + process_cov);
  return s;
}

KalmanState correct(const KalmanState& predicted, const Matrix& noise_cov,
                    const Vector& quant_var, const SelectionPlan& plan, SlotMask decoded,
                    const Vector& z_received) {
  const auto m = predicted.predicted_estimate.size();
  plan.validate(static_cast<std::size_t>(m), 62);
  if (quant_var.size() != static_cast<Eigen::Index>(plan.size())) {
    throw InvalidArgument("one quantization variance per plan row is required");
  }
  std::vector<int> sensors;
  std::vector<double> qv;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (decoded & (SlotMask{1} << k)) {
      sensors.push_back(plan.selected[k]);
      qv.push_back(quant_var(static_cast<Eigen::Index>(k)));
    }
  }
  if (z_received.size() != static_cast<Eigen::Index>(sensors.size())) {
    throw InvalidArgument("received vector length must equal the decode set size");
  }
  KalmanState s = predicted;
  if (sensors.empty()) {
    s.estimate = predicted.predicted_estimate;
    s.cov = predicted.predicted_cov;
    return s;
  }
  const Matrix& sigma = predicted.predicted_cov;
  const auto n = static_cast<Eigen::Index>(sensors.size());
  Matrix inner(n, n);
  Matrix cross(m, n);  // Sigma U^T
  Vector innovation(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = sensors[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < n; ++c) {
      const int j = sensors[static_cast<std::size_t>(c)];
      inner(r, c) = sigma(i, j) + noise_cov(i, j);
    }
    inner(r, r) += qv[static_cast<std::size_t>(r)];
    cross.col(r) = sigma.col(i);
    innovation(r) = z_received(r) - predicted.predicted_estimate(i);
  }
  Eigen::LLT<Matrix> llt(inner);
  const Vector pivots = llt.matrixL().toDenseMatrix().diagonal().array().square();
  if (llt.info() != Eigen::Success || pivots.minCoeff() < 1e-12 * pivots.maxCoeff()) {
    throw SingularSubset("innovation covariance is singular", decoded);
  }
  const Matrix gain = llt.solve(cross.transpose()).transpose();  // M x |I|
  s.estimate = predicted.predicted_estimate + gain * innovation;
  // (I - K U) Sigma
  Matrix post = sigma - gain * cross.transpose();
  s.cov = symmetrized(post);
  return s;
}

MseEvaluator frame_evaluator(const Matrix& predicted_cov, const Matrix& noise_cov,
                             const Matrix& per_table) {
  return MseEvaluator(predicted_cov, noise_cov, default_margins(predicted_cov, noise_cov),
                      per_table);
}

double frame_mse(const Matrix& predicted_cov, const Matrix& noise_cov,
                 const SelectionPlan& plan, const Matrix& per_table, int k_max) {
  const MseEvaluator ev = frame_evaluator(predicted_cov, noise_cov, per_table);
  return k_max < 0 ? ev.averaged(plan) : ev.bound(plan, k_max);
}

void HorizonResult::write_csv(std::ostream& out) const {
  out << "frame,nmse,mse,sq_error,trace_posterior,decoded,selected,bits\n";
  const auto old = out.precision(17);
  for (const FrameRecord& f : frames) {
    out << f.frame << ',' << f.normalized_mse() << ',' << f.mse << ',' << f.squared_error << ','
        << f.trace_posterior << ',' << popcount(f.decoded) << ',';
    for (std::size_t k = 0; k < f.plan.size(); ++k) out << (k ? " " : "") << f.plan.selected[k];
    out << ',';
    for (std::size_t k = 0; k < f.plan.size(); ++k) out << (k ? " " : "") << f.plan.bits[k];
    out << '\n';
  }
  out.precision(old);
}

HorizonResult run_horizon(const TemporalScenario& scenario, const LinkProfile& link,
                          std::size_t rows, const HorizonConfig& config,
                          std::uint64_t plan_seed, std::uint64_t sim_seed) {
  scenario.validate();
  const std::size_t m = scenario.sensors();
  if (link.size() != m) throw InvalidArgument("link profile and scenario disagree on size");

  std::mt19937_64 rng(sim_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  HorizonResult result;
  KalmanState state = KalmanState::from_prior(scenario.mean[0], scenario.prior_cov[0]);
  Vector theta;
  SelectionPlan plan;

  for (std::size_t t = 0; t < scenario.frames(); ++t) {
    try {
      const Matrix& cw = scenario.noise_cov[t];
      if (t == 0) {
        theta = scenario.mean[0] + gaussian_draw(symmetric_factor(scenario.prior_cov[0]), rng);
      } else {
        state = predict(state, scenario.dynamics.transition[t], scenario.dynamics.process_cov[t]);
        theta = scenario.dynamics.transition[t] * theta +
                gaussian_draw(symmetric_factor(scenario.dynamics.process_cov[t]), rng);
      }

      const MseEvaluator ev = frame_evaluator(state.predicted_cov, cw, link.per);
      if (t == 0) {
        const SelectionPlan initial = random_feasible_plan(link.tx_power, rows, 1,
                                                           config.optimizer.power_cap, plan_seed);
        plan = config.joint ? optimize_joint(ev, link.tx_power, config.optimizer, initial).plan
                            : optimize_separate(ev, link.tx_power, config.optimizer, initial).plan;
      } else if (!config.freeze_plan) {
        plan = config.joint ? optimize_joint(ev, link.tx_power, config.optimizer, plan).plan
                            : optimize_separate(ev, link.tx_power, config.optimizer, plan).plan;
      }

      FrameRecord rec;
      rec.frame = static_cast<int>(t + 1);
      rec.plan = plan;
      rec.mse = static_cast<int>(plan.size()) <= ev.enumeration_cap
                    ? ev.averaged(plan)
                    : ev.bound(plan, effective_k(config.optimizer, plan.size()));
      rec.trace_prior = scenario.prior_cov[t].trace();
      rec.trace_predicted = state.predicted_cov.trace();

      // Transmit: measure, quantize, drop packets.
      const Vector x = theta + gaussian_draw(symmetric_factor(cw), rng);
      const Vector qv = ev.row_quant_noise(plan);
      const Vector per = ev.row_per(plan);
      SlotMask decoded = 0;
      std::vector<double> z;
      for (std::size_t k = 0; k < plan.size(); ++k) {
        const int i = plan.selected[k];
        double y = 0.0;
        if (config.real_quantizer) {
          y = quantize(x(i), QuantizerSpec{plan.bits[k], ev.margins()(i),
                                           state.predicted_estimate(i)});
        } else {
          const double half = 0.5 * std::sqrt(12.0 * qv(static_cast<Eigen::Index>(k)));
          y = x(i) + (2.0 * unit(rng) - 1.0) * half;
        }
        if (unit(rng) >= per(static_cast<Eigen::Index>(k))) {
          decoded |= SlotMask{1} << k;
          z.push_back(y);
        }
      }
      state = correct(state, cw, qv, plan, decoded,
                      Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size())));
      rec.decoded = decoded;
      rec.trace_posterior = state.cov.trace();
      rec.squared_error = (theta - state.estimate).squaredNorm();
      result.frames.push_back(std::move(rec));
    } catch (const SingularSubset& e) {
      throw SingularSubset(frame_tag(t + 1) + e.what(), e.subset());
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(frame_tag(t + 1) + e.what());
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite(frame_tag(t + 1) + e.what());
    } catch (const Infeasible& e) {
      throw Infeasible(frame_tag(t + 1) + e.what());
    } catch (const EnumerationCapExceeded& e) {
      throw EnumerationCapExceeded(frame_tag(t + 1) + e.what());
    }
  }
  return result;
}

}  // namespace mmtc
