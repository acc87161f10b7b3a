#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mmtc/temporal.hpp"

using namespace mmtc;

namespace {

FieldModel field(int m, double phi, std::uint64_t seed) {
  const SensorLayout l = place_sensors(static_cast<std::size_t>(m), 50.0, seed);
  FieldModel f;
  f.mean = Vector::Constant(m, 20.0);
  f.prior_cov = build_prior_cov(l, CorrelationSpec::uniform(static_cast<std::size_t>(m), 10.0, phi));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  f.noise_cov = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) f.noise_cov(i, i) = std::pow(u(rng), 2);
  return f;
}

Vector row_quant(const Vector& margins, const SelectionPlan& plan) {
  Vector q(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const double step = margins(plan.selected[k]) / std::pow(2.0, plan.bits[k]);
    q(static_cast<Eigen::Index>(k)) = step * step / 12.0;
  }
  return q;
}

}  // namespace

TEST(Dynamics, StationaryFixedPointWithoutMeasurements) {
  const FieldModel f = field(8, 0.9, 1);
  const DynamicsModel d = DynamicsModel::scaled_identity(f.prior_cov, 0.7, 30);
  const SelectionPlan plan{{0, 3}, {4, 4}};
  KalmanState s = KalmanState::from_prior(f.mean, f.prior_cov);
  for (std::size_t t = 1; t < d.frames(); ++t) {
    s = predict(s, d.transition[t], d.process_cov[t]);
    EXPECT_LT((s.predicted_cov - f.prior_cov).cwiseAbs().maxCoeff(), 1e-12);
    s = correct(s, f.noise_cov, Vector::Ones(2), plan, 0, Vector());
    EXPECT_LT((s.cov - f.prior_cov).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dynamics, RejectsMismatchedSizes) {
  DynamicsModel d = DynamicsModel::scaled_identity(Matrix::Identity(3, 3), 0.5, 2);
  EXPECT_NO_THROW(d.validate(3));
  EXPECT_THROW(d.validate(4), InvalidArgument);
  d.process_cov.pop_back();
  EXPECT_THROW(d.validate(3), InvalidArgument);
}

TEST(Kalman, IdentityDynamicsMatchesBatchMmse) {
  const FieldModel f = field(6, 0.9, 2);
  const Vector margins = default_margins(f.prior_cov, f.noise_cov);
  const SelectionPlan plan{{4, 1, 3}, {2, 5, 3}};
  Vector z(2);
  z << 23.0, 17.5;
  const SlotMask decoded = 0b101;

  KalmanState s = KalmanState::from_prior(f.mean, f.prior_cov);
  s = predict(s, Matrix::Identity(6, 6), Matrix::Zero(6, 6));
  const KalmanState post = correct(s, f.noise_cov, row_quant(margins, plan), plan, decoded, z);

  const Vector batch = mmse_estimate(f, margins, plan, decoded, z);
  EXPECT_LT((post.estimate - batch).norm(), 1e-9);
  const MseEvaluator ev(f.prior_cov, f.noise_cov, margins, Matrix::Zero(6, 8));
  EXPECT_NEAR(post.cov.trace(), ev.subset_mse(plan, decoded), 1e-9);
}

TEST(Kalman, PosteriorNeverExceedsPrediction) {
  const FieldModel f = field(10, 0.5, 3);
  const Vector margins = default_margins(f.prior_cov, f.noise_cov);
  const SelectionPlan plan{{0, 2, 4, 6}, {1, 3, 5, 7}};
  KalmanState s = KalmanState::from_prior(f.mean, f.prior_cov);
  for (SlotMask m = 0; m < 16; ++m) {
    Vector z = Vector::Constant(std::popcount(m), 21.0);
    const KalmanState post = correct(s, f.noise_cov, row_quant(margins, plan), plan, m, z);
    EXPECT_LE(post.cov.trace(), s.predicted_cov.trace() + 1e-9);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(s.predicted_cov - post.cov);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(FrameMse, MatchesEvaluatorOnPrior) {
  const FieldModel f = field(8, 0.9, 4);
  Matrix per = Matrix::Constant(8, 8, 0.2);
  const SelectionPlan plan{{1, 5, 7}, {4, 4, 2}};
  const MseEvaluator ev = MseEvaluator(f.prior_cov, f.noise_cov,
                                       default_margins(f.prior_cov, f.noise_cov), per);
  EXPECT_NEAR(frame_mse(f.prior_cov, f.noise_cov, plan, per), ev.averaged(plan), 1e-12);
  EXPECT_NEAR(frame_mse(f.prior_cov, f.noise_cov, plan, per, 1), ev.bound(plan, 1), 1e-12);
}

TEST(Horizon, FirstFrameMatchesMemorylessAndIsDeterministic) {
  const FieldModel f = field(10, 0.9, 5);
  Vector p(10);
  p << 0.0, 0.1, 0.2, 0.05, 0.3, 0.0, 0.15, 0.4, 0.02, 0.1;
  const LinkProfile link = fixed_per_profile(p, 8);
  const TemporalScenario sc = TemporalScenario::stationary(f, 0.95, 6);
  HorizonConfig cfg;
  const HorizonResult a = run_horizon(sc, link, 3, cfg, 11, 12);
  const HorizonResult b = run_horizon(sc, link, 3, cfg, 11, 12);
  ASSERT_EQ(a.frames.size(), 6u);
  for (std::size_t t = 0; t < a.frames.size(); ++t) {
    EXPECT_EQ(a.frames[t].plan, b.frames[t].plan);
    EXPECT_EQ(a.frames[t].squared_error, b.frames[t].squared_error);
    EXPECT_EQ(a.frames[t].decoded, b.frames[t].decoded);
    EXPECT_LE(a.frames[t].trace_posterior, a.frames[t].trace_predicted + 1e-9);
  }

  const MseEvaluator ev = frame_evaluator(f.prior_cov, f.noise_cov, link.per);
  const SelectionPlan init = random_feasible_plan(link.tx_power, 3, 1, cfg.optimizer.power_cap, 11);
  const OptimizerResult memoryless = optimize_separate(ev, link.tx_power, cfg.optimizer, init);
  EXPECT_EQ(a.frames[0].plan, memoryless.plan);
  EXPECT_NEAR(a.frames[0].mse, ev.averaged(memoryless.plan), 1e-12);
  EXPECT_DOUBLE_EQ(a.frames[0].trace_prior, f.prior_cov.trace());
}

TEST(Horizon, MemoryLowersLaterFrames) {
  const FieldModel f = field(10, 0.9, 6);
  const LinkProfile link = fixed_per_profile(Vector::Constant(10, 0.1), 8);
  const TemporalScenario sc = TemporalScenario::stationary(f, 0.95, 5);
  const HorizonResult r = run_horizon(sc, link, 3, HorizonConfig{}, 1, 2);
  for (std::size_t t = 1; t < r.frames.size(); ++t) {
    EXPECT_LT(r.frames[t].mse, r.frames[0].mse);
  }
}

TEST(Horizon, FrozenPlanStaysFixed) {
  const FieldModel f = field(10, 0.9, 7);
  const LinkProfile link = fixed_per_profile(Vector::Constant(10, 0.1), 8);
  const TemporalScenario sc = TemporalScenario::stationary(f, 0.9, 5);
  HorizonConfig cfg;
  cfg.freeze_plan = true;
  const HorizonResult r = run_horizon(sc, link, 4, cfg, 3, 4);
  for (const FrameRecord& rec : r.frames) EXPECT_EQ(rec.plan, r.frames[0].plan);
  std::ostringstream csv;
  r.write_csv(csv);
  EXPECT_EQ(csv.str().rfind("frame,nmse,mse,sq_error,trace_posterior,decoded,selected,bits\n", 0),
            0u);
}

TEST(Horizon, SquaredErrorAveragesToAnalyticMse) {
  const FieldModel f = field(6, 0.9, 8);
  Vector p(6);
  p << 0.1, 0.3, 0.0, 0.2, 0.05, 0.4;
  const LinkProfile link = fixed_per_profile(p, 8);
  const TemporalScenario sc = TemporalScenario::stationary(f, 0.9, 1);
  const int runs = 4000;
  double sum = 0.0;
  double sum2 = 0.0;
  double mse = 0.0;
  for (int k = 0; k < runs; ++k) {
    const HorizonResult r = run_horizon(sc, link, 3, HorizonConfig{}, 5, 1000 + k);
    const double e = r.frames[0].squared_error;
    sum += e;
    sum2 += e * e;
    mse = r.frames[0].mse;
  }
  const double mean = sum / runs;
  const double se = std::sqrt((sum2 / runs - mean * mean) / runs);
  EXPECT_NEAR(mean, mse, 4.0 * se);
}
