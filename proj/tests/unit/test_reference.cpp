#include "fpf/error.hpp"
#include "fpf/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace fpf {
namespace {

SdeModel linear1d() { return make_linear_model(Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), Vec::Ones(1)); }

TEST(KalmanBucy, CovarianceSettlesAtRiccatiRoot) {
  // -2P + 1 - P^2 = 0 gives P = sqrt(2) - 1.
  KalmanState s{Vec::Zero(1), Mat::Identity(1, 1)};
  for (int n = 0; n < 3000; ++n) s = kalman_bucy_step(s, linear1d(), 0.01, 0.0);
  EXPECT_NEAR(s.cov(0, 0), std::sqrt(2.0) - 1.0, 1e-10);
}

TEST(KalmanBucy, OneStepByHand) {
  KalmanState s{Vec::Constant(1, 0.5), Mat::Constant(1, 1, 2.0)};
  const double dt = 0.1, dz = 0.3;
  const KalmanState r = kalman_bucy_step(s, linear1d(), dt, dz);
  EXPECT_NEAR(r.mean(0), 0.5 - 0.5 * dt + 2.0 * (dz - 0.5 * dt), 1e-15);
  EXPECT_NEAR(r.cov(0, 0), 2.0 + (-4.0 + 1.0 - 4.0) * dt, 1e-15);
}

TEST(KalmanBucy, LargeStepIsUnstable) {
  KalmanState s{Vec::Zero(1), Mat::Identity(1, 1)};
  try {
    kalman_bucy_step(s, linear1d(), 10.0, 0.0);
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "Riccati step unstable; reduce dt");
  }
}

TEST(KalmanBucy, NeedsLinearModel) {
  SdeModel m = linear1d();
  m.linear_drift.reset();
  EXPECT_THROW(kalman_bucy_step({Vec::Zero(1), Mat::Identity(1, 1)}, m, 0.01, 0.0), PreconditionError);
}

TEST(Resampling, SystematicByHand) {
  Vec w(4);
  w << 0.1, 0.2, 0.3, 0.4;
  // Positions 0.125, 0.375, 0.625, 0.875 against cumulative 0.1, 0.3, 0.6, 1.0.
  EXPECT_EQ(systematic_resample(w, 0.5), (std::vector<int>{1, 2, 3, 3}));
  EXPECT_EQ(systematic_resample(w, 0.0), (std::vector<int>{0, 1, 2, 3}));
}

TEST(Resampling, CountsStayWithinOneOfExpectation) {
  const Vec w = Vec::LinSpaced(50, 1.0, 3.0).normalized().array().square();
  const Vec wn = w / w.sum();
  for (double u0 : {0.0, 0.13, 0.77}) {
    const auto idx = systematic_resample(wn, u0);
    std::vector<int> count(50, 0);
    for (int i : idx) ++count[i];
    for (int i = 0; i < 50; ++i) EXPECT_LE(std::abs(count[i] - 50 * wn(i)), 1.0 + 1e-12);
  }
}

TEST(Resampling, EffectiveSampleSize) {
  EXPECT_NEAR(effective_sample_size(Vec::Constant(10, 0.1)), 10.0, 1e-12);
  Vec one = Vec::Zero(10);
  one(3) = 1.0;
  EXPECT_NEAR(effective_sample_size(one), 1.0, 1e-12);
}

TEST(Resampling, WeightedMoments) {
  Mat p(3, 1);
  p << 0.0, 1.0, 4.0;
  Vec w(3);
  w << 0.5, 0.25, 0.25;
  EXPECT_NEAR(weighted_mean(p, w)(0), 1.25, 1e-15);
  EXPECT_NEAR(weighted_cov(p, w)(0, 0), 0.5 * 1.5625 + 0.25 * 0.0625 + 0.25 * 7.5625, 1e-14);
}

TEST(BootstrapPf, TracksKalmanBucy) {
  const SdeModel m = linear1d();
  const TruthPath path = simulate_truth(m, Vec::Ones(1), 1.0, 0.01, 8);
  const auto obs = synthesize_observations(path, m, 1008);
  BootstrapState s = bootstrap_init(5000, Vec::Zero(1), Mat::Identity(1, 1), 9);
  KalmanState k{Vec::Zero(1), Mat::Identity(1, 1)};
  double worst = 0.0;
  for (const auto& o : obs) {
    s = bootstrap_pf_step(s, m, 0.01, o.dz);
    k = kalman_bucy_step(k, m, 0.01, o.dz);
    worst = std::max(worst, std::abs(weighted_mean(s.ensemble.states, s.weights)(0) - k.mean(0)));
  }
  EXPECT_LT(worst, 0.08);
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-12);
}

TEST(Kushner, PredictionConservesMass) {
  const SdeModel m = linear1d();
  GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 1.0, 0.25);
  for (int n = 0; n < 50; ++n) {
    g = kushner_predict(g, m, 0.02);
    EXPECT_NEAR(g.mass(), 1.0, 1e-12);
    EXPECT_GE(g.values.minCoeff(), 0.0);
  }
}

TEST(Kushner, PredictionMatchesOrnsteinUhlenbeckMoments) {
  GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 1.0, 0.25);
  for (int n = 0; n < 100; ++n) g = kushner_predict(g, linear1d(), 0.01);
  const double e2 = std::exp(-2.0);
  EXPECT_NEAR(g.mean(), std::exp(-1.0), 2e-3);
  EXPECT_NEAR(g.variance(), 0.25 * e2 + 0.5 * (1.0 - e2), 2e-3);
}

TEST(Kushner, UpdateIsGaussianBayesProduct) {
  // N(0, 1) times exp(x dz - x^2 dt / 2) is N(dz / (1 + dt), 1 / (1 + dt)).
  const GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 0.0, 1.0);
  const double dt = 0.05, dz = 0.4;
  const GridDensity post = kushner_update(g, linear1d(), dt, dz);
  EXPECT_NEAR(post.mass(), 1.0, 1e-12);
  EXPECT_NEAR(post.mean(), dz / (1.0 + dt), 1e-9);
  EXPECT_NEAR(post.variance(), 1.0 / (1.0 + dt), 1e-9);
}

TEST(Kushner, RejectsHigherDimension) {
  Mat F = -Mat::Identity(2, 2);
  const SdeModel m = make_linear_model(F, Mat::Identity(2, 2), Vec::Ones(2));
  const GridDensity g = GridDensity::gaussian(-1.0, 1.0, 11, 0.0, 1.0);
  EXPECT_THROW(kushner_predict(g, m, 0.01), PreconditionError);
}

}  // namespace
}  // namespace fpf
