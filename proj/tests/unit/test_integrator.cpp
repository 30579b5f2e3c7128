#include "fpf/error.hpp"
#include "fpf/integrator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

namespace fpf {
namespace {

SdeModel linear1d() { return make_linear_model(Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), Vec::Ones(1)); }

TEST(EulerMaruyama, OuMomentsMatchDiscreteRecursion) {
  // X_{k+1} = (1 - dt) X_k + sqrt(dt) z_k, so after n steps
  //   E X_n = x0 (1-dt)^n,  Var X_n = dt (1 - (1-dt)^{2n}) / (1 - (1-dt)^2).
  const double dt = 0.01, x0 = 2.0;
  const int steps = 100, n = 40000;
  ParticleEnsemble e;
  e.states = Mat::Constant(n, 1, x0);
  e.seed = 99;
  const SdeModel m = linear1d();
  for (int k = 0; k < steps; ++k) e = euler_maruyama_step(e, m, dt);
  const double a = 1.0 - dt;
  const double mean = x0 * std::pow(a, steps);
  const double var = dt * (1.0 - std::pow(a, 2 * steps)) / (1.0 - a * a);
  const double sm = e.states.mean();
  const double sv = (e.states.array() - sm).square().sum() / (n - 1);
  EXPECT_NEAR(sm, mean, 4.0 * std::sqrt(var / n));
  EXPECT_NEAR(sv, var, 4.0 * var * std::sqrt(2.0 / n));
  EXPECT_NEAR(e.time, 1.0, 1e-12);
  EXPECT_EQ(e.rng_counter, static_cast<std::uint64_t>(steps));
}

TEST(EulerMaruyama, SerialAndParallelAgreeBitwise) {
  ParticleEnsemble e;
  e.states = Mat::Random(1000, 2);
  e.seed = 4;
  Mat F(2, 2);
  F << -1.0, 0.5, -0.5, -1.0;
  const SdeModel m = make_linear_model(F, Mat::Identity(2, 2), Vec::Ones(2));
  const auto a = euler_maruyama_step(e, m, 0.01, Exec::serial);
  const auto b = euler_maruyama_step(e, m, 0.01, Exec::parallel);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.rng_counter, b.rng_counter);
}

TEST(EulerMaruyama, RejectsNonPositiveStep) {
  ParticleEnsemble e;
  e.states = Mat::Zero(2, 1);
  EXPECT_THROW(euler_maruyama_step(e, linear1d(), 0.0), PreconditionError);
}

TEST(SimulateTruth, RowCountAndDeterminism) {
  const auto a = simulate_truth(linear1d(), Vec::Ones(1), 5.0, 0.01, 1);
  const auto b = simulate_truth(linear1d(), Vec::Ones(1), 5.0, 0.01, 1);
  ASSERT_EQ(a.times.size(), 501u);
  EXPECT_EQ(a.states, b.states);
  EXPECT_DOUBLE_EQ(a.states(0, 0), 1.0);
  EXPECT_NEAR(a.times.back(), 5.0, 1e-12);
  for (std::size_t n = 1; n < a.times.size(); ++n) EXPECT_NEAR(a.times[n] - a.times[n - 1], 0.01, 1e-12);
}

TEST(SimulateTruth, NonIntegerHorizonRejected) {
  try {
    simulate_truth(linear1d(), Vec::Ones(1), 1.005, 0.01, 1);
    FAIL();
  } catch (const PreconditionError& e) {
    EXPECT_STREQ(e.what(), "t_end / dt is not an integer");
  }
}

TEST(Observations, NoiselessGivesHOfTruth) {
  const auto path = simulate_truth(linear1d(), Vec::Ones(1), 1.0, 0.01, 2);
  const auto obs = synthesize_observations(path, linear1d(), 3, true);
  ASSERT_EQ(obs.size(), 100u);
  for (std::size_t n = 0; n < obs.size(); ++n) {
    EXPECT_DOUBLE_EQ(obs[n].y, path.states(static_cast<Eigen::Index>(n + 1), 0));
    EXPECT_DOUBLE_EQ(obs[n].dz, obs[n].y * 0.01);
    EXPECT_DOUBLE_EQ(obs[n].time, path.times[n + 1]);
  }
}

TEST(Observations, NoiseVarianceIsOneOverDt) {
  const double dt = 0.01;
  const auto path = simulate_truth(linear1d(), Vec::Zero(1), 200.0, dt, 5);
  const auto obs = synthesize_observations(path, linear1d(), 6);
  double s = 0.0, s2 = 0.0;
  for (std::size_t n = 0; n < obs.size(); ++n) {
    const double w = obs[n].y - path.states(static_cast<Eigen::Index>(n + 1), 0);
    s += w;
    s2 += w * w;
  }
  const double n = static_cast<double>(obs.size());
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var * dt, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(ObservationsCsv, RoundTripIsTextStable) {
  const auto path = simulate_truth(linear1d(), Vec::Ones(1), 1.0, 0.01, 7);
  const auto obs = synthesize_observations(path, linear1d(), 8);
  std::stringstream first;
  write_observations_csv(first, obs);
  std::istringstream in(first.str());
  const auto back = read_observations_csv(in);
  ASSERT_EQ(back.size(), obs.size());
  for (std::size_t n = 0; n < obs.size(); ++n) EXPECT_NEAR(back[n].y, obs[n].y, 1e-11 * std::abs(obs[n].y) + 1e-300);
  std::stringstream second;
  write_observations_csv(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(ObservationsCsv, MalformedInputRejected) {
  std::istringstream no_header("1,2,3\n");
  EXPECT_THROW(read_observations_csv(no_header), PreconditionError);
  std::istringstream bad("t,y,dz\n0.01,abc,0.1\n");
  EXPECT_THROW(read_observations_csv(bad), PreconditionError);
  std::istringstream short_row("t,y,dz\n0.01,2\n");
  EXPECT_THROW(read_observations_csv(short_row), PreconditionError);
}

}  // namespace
}  // namespace fpf
