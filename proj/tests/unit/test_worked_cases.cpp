// Small hand-checkable cases for each module, plus a few statistical properties.

#include "fpf/divergence.hpp"
#include "fpf/error.hpp"
#include "fpf/filter.hpp"
#include "fpf/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace fpf {
namespace {

SdeModel scalar_model(double f, double sigma, double H, double c = 0.0) {
  return make_linear_model(Mat::Constant(1, 1, f), Mat::Constant(1, 1, sigma), Vec::Constant(1, H), c);
}

ParticleEnsemble states_1d(std::initializer_list<double> xs) {
  ParticleEnsemble e;
  e.states.resize(static_cast<Eigen::Index>(xs.size()), 1);
  int i = 0;
  for (double x : xs) e.states(i++, 0) = x;
  return e;
}

// ---- model ---------------------------------------------------------------

TEST(Model, ZeroCovarianceEnsembleIsExact) {
  const auto e = sample_initial_ensemble(4, Vec::Zero(1), Mat::Zero(1, 1), 7);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(e.states(i, 0), 0.0);
}

TEST(Model, LargeEnsembleMeanWithinCltBound) {
  const auto e = sample_initial_ensemble(100000, Vec::Zero(1), Mat::Identity(1, 1), 1);
  EXPECT_LE(std::abs(e.states.col(0).mean()), 4.0 / std::sqrt(1e5));
}

TEST(Model, StatsOfSymmetricTriple) {
  const PosteriorStats s = ensemble_stats(states_1d({-1.0, 0.0, 1.0}), scalar_model(-1, 1, 1));
  EXPECT_EQ(s.mean(0), 0.0);
  EXPECT_EQ(s.cov(0, 0), 1.0);
  EXPECT_EQ(s.h_hat, 0.0);
}

TEST(Model, StatsOfDegenerateEnsemble) {
  const PosteriorStats s = ensemble_stats(states_1d({1.5, 1.5, 1.5}), scalar_model(-1, 1, 2.0, 0.5));
  EXPECT_EQ(s.mean(0), 1.5);
  EXPECT_EQ(s.cov(0, 0), 0.0);
  EXPECT_EQ(s.h_hat, 3.5);
}

TEST(Model, StatsWithQuadraticObservation) {
  SdeModel m = scalar_model(-1, 1, 1);
  m.obs = [](const Vec& x) { return x(0) * x(0); };
  m.affine_obs.reset();
  const PosteriorStats s = ensemble_stats(states_1d({0.0, 2.0}), m);
  EXPECT_EQ(s.mean(0), 1.0);
  EXPECT_EQ(s.cov(0, 0), 2.0);
  EXPECT_EQ(s.h_hat, 2.0);
}

TEST(Model, CovarianceIsExactlySymmetric) {
  Mat F = -Mat::Identity(3, 3);
  const SdeModel m = make_linear_model(F, Mat::Identity(3, 3), Vec::Ones(3));
  Mat cov(3, 3);
  cov << 2, 0.3, -0.2, 0.3, 1, 0.1, -0.2, 0.1, 0.5;
  const auto e = sample_initial_ensemble(777, Vec::Zero(3), cov, 4);
  const Mat c = ensemble_stats(e, m).cov;
  EXPECT_TRUE((c.array() == c.transpose().array()).all());
  EXPECT_GE(c.diagonal().minCoeff(), 0.0);
}

// ---- integrator ----------------------------------------------------------

TEST(Integrator, FrozenDynamicsLeaveStatesUnchanged) {
  ParticleEnsemble e = states_1d({0.3, -2.0});
  const auto out = euler_maruyama_step(e, scalar_model(0, 0, 1), 0.01);
  EXPECT_TRUE((out.states.array() == e.states.array()).all());
}

TEST(Integrator, DeterministicDecayStep) {
  const auto out = euler_maruyama_step(states_1d({1.0}), scalar_model(-1, 0, 1), 0.01);
  EXPECT_DOUBLE_EQ(out.states(0, 0), 0.99);
}

TEST(Integrator, IncrementVarianceIsDt) {
  ParticleEnsemble e;
  e.states = Mat::Zero(100000, 1);
  e.seed = 3;
  const auto out = euler_maruyama_step(e, scalar_model(0, 1, 1), 0.01);
  const double mean = out.states.col(0).mean();
  const double var = (out.states.col(0).array() - mean).square().sum() / (e.size() - 1);
  EXPECT_NEAR(var, 0.01, 0.05 * 0.01);
}

TEST(Integrator, EnsembleMeanDriftBound) {
  Mat F = Mat::Zero(2, 2);
  const SdeModel m = make_linear_model(F, Mat::Identity(2, 2), Vec::Ones(2));
  auto e = sample_initial_ensemble(10000, Vec::Zero(2), Mat::Identity(2, 2), 8);
  const Vec m0 = e.states.colwise().mean().transpose();
  const int k = 50;
  for (int n = 0; n < k; ++n) e = euler_maruyama_step(e, m, 0.01);
  const Vec m1 = e.states.colwise().mean().transpose();
  EXPECT_LE((m1 - m0).cwiseAbs().maxCoeff(), 5.0 * std::sqrt(k * 0.01 / 10000.0));
}

TEST(Integrator, NonFiniteDriftNamesParticle) {
  SdeModel m = scalar_model(-1, 1, 1);
  m.drift = [](const Vec& x) { return Vec::Constant(1, x(0) > 5.0 ? std::nan("") : -x(0)); };
  for (Exec ex : {Exec::serial, Exec::parallel}) {
    try {
      euler_maruyama_step(states_1d({0.0, 1.0, 7.0, 9.0}), m, 0.01, ex);
      FAIL();
    } catch (const NumericalError& e) {
      EXPECT_STREQ(e.what(), "non-finite drift at particle 2");
    }
  }
}

TEST(Integrator, HalfStepPathHasThreePoints) {
  const TruthPath p = simulate_truth(scalar_model(-1, 1, 1), Vec::Ones(1), 1.0, 0.5, 1);
  ASSERT_EQ(p.times.size(), 3u);
  EXPECT_EQ(p.times[1], 0.5);
  EXPECT_EQ(p.times[2], 1.0);
}

TEST(Integrator, FrozenPathIsConstant) {
  const TruthPath p = simulate_truth(scalar_model(0, 0, 1), Vec::Constant(1, 2.0), 1.0, 0.1, 1);
  EXPECT_TRUE((p.states.array() == 2.0).all());
}

TEST(Integrator, ObservationNoiseAndIncrementVariance) {
  const SdeModel m = scalar_model(0, 0, 0);  // h = 0
  const TruthPath p = simulate_truth(m, Vec::Zero(1), 1000.0, 0.1, 2);
  const auto obs = synthesize_observations(p, m, 9);
  ASSERT_EQ(obs.size(), 10000u);
  double sy = 0, syy = 0, szz = 0;
  for (const auto& o : obs) {
    sy += o.y;
    syy += o.y * o.y;
    szz += o.dz * o.dz;
    EXPECT_EQ(o.dz, o.y * 0.1);
  }
  const double n = 10000.0;
  EXPECT_NEAR((syy - sy * sy / n) / (n - 1), 10.0, 0.5);
  EXPECT_NEAR(szz / n, 0.1, 0.005);
}

// ---- gain ----------------------------------------------------------------

TEST(Gain, ExactGainOnGridSolvesWeakForm) {
  const SdeModel m = scalar_model(-1, 1, 1);
  const GridDensity g = GridDensity::gaussian(-8.0, 8.0, 2001, 0.0, 1.0);
  EXPECT_LE(gain_residual_on_grid(g, Vec::Ones(g.n), m), 1e-4);
  EXPECT_NEAR(gain_residual_on_grid(g, Vec::Zero(g.n), m), std::exp(-0.5) / std::sqrt(2 * std::numbers::pi), 1e-6);
  EXPECT_EQ(gain_residual_on_grid(g, Vec::Zero(g.n), scalar_model(-1, 1, 0, 2.0)), 0.0);
}

TEST(Gain, VanishingCovarianceGivesVanishingGain) {
  PosteriorStats s{Vec::Zero(1), Mat::Constant(1, 1, 1e-8), 0.0};
  const GainField g = solve_gain_exact_gaussian(states_1d({0.0, 1e-4}), s, scalar_model(-1, 1, 1));
  EXPECT_DOUBLE_EQ(g.k(0, 0), 1e-8);
}

TEST(Gain, ConstantGainHandArithmetic) {
  EXPECT_DOUBLE_EQ(solve_gain_constant(states_1d({-1.0, 0.0, 1.0}), scalar_model(-1, 1, 1)).k(0, 0), 2.0 / 3.0);
  EXPECT_EQ(solve_gain_constant(states_1d({-1.0, 0.0, 1.0}), scalar_model(-1, 1, 0, 4.0)).k(0, 0), 0.0);
}

TEST(Gain, ShiftingObservationLeavesGainUnchanged) {
  const auto e = sample_initial_ensemble(5000, Vec::Zero(1), Mat::Identity(1, 1), 31);
  const SdeModel a = scalar_model(-1, 1, 1), b = scalar_model(-1, 1, 1, 5.0);
  const GalerkinBasis basis(1, 3);
  EXPECT_NEAR(solve_gain_constant(e, a).k(0, 0), solve_gain_constant(e, b).k(0, 0), 1e-13);
  const GainField ga = solve_gain_galerkin(e, a, basis), gb = solve_gain_galerkin(e, b, basis);
  EXPECT_LE((ga.k - gb.k).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(Gain, LinearProblemHasNoHigherModes) {
  const auto e = sample_initial_ensemble(100000, Vec::Zero(1), Mat::Identity(1, 1), 5);
  const GainField g = solve_gain_galerkin(e, scalar_model(-1, 1, 1), GalerkinBasis(1, 3), 1e-6);
  EXPECT_NEAR(g.coefficients(0), 1.0, 0.05);  // K(0)
  EXPECT_LE(std::abs(g.coefficients(1)), 0.05);
  EXPECT_LE(std::abs(g.coefficients(2)), 0.05);
}

TEST(Gain, ControlHandArithmetic) {
  Vec h(1);
  h << 1.0;
  EXPECT_DOUBLE_EQ(compute_u(Mat::Constant(1, 1, 2.0 / 3.0), Mat::Zero(1, 1), h, 0.0)(0, 0), -1.0 / 3.0);
  EXPECT_EQ(compute_u(Mat::Zero(1, 1), Mat::Zero(1, 1), h, 0.3)(0, 0), 0.0);
  // K(x) = x at x = 2 with h = 0: only the correction term, 1/2 * 1 * 2.
  EXPECT_DOUBLE_EQ(compute_u(Mat::Constant(1, 1, 2.0), Mat::Ones(1, 1), Vec::Zero(1), 0.0)(0, 0), 1.0);
}

TEST(Gain, IdentityDisplacementIsAdmissible) {
  const auto r = check_admissible(Mat::Zero(5, 2), Mat::Zero(5, 4));
  EXPECT_TRUE(r.flagged.empty());
  EXPECT_TRUE((r.dets.array() == 1.0).all());
}

TEST(Gain, SmallConstantGainStepIsAdmissible) {
  const SdeModel m = scalar_model(-1, 1, 1);
  const auto e = sample_initial_ensemble(2000, Vec::Zero(1), Mat::Constant(1, 1, 9.0), 2);
  const GainField g = solve_gain_constant(e, m);
  const double dt = 0.01, dz = 0.05;
  const auto r = check_admissible(g.k * dz + g.u * dt, g.k_jac * dz + g.u_jac * dt);
  EXPECT_TRUE(r.flagged.empty());
}

// ---- filter --------------------------------------------------------------

TEST(Filter, NoInformationStepIsPurePropagation) {
  const SdeModel m = scalar_model(-1, 1, 0, 2.0);
  const auto e = sample_initial_ensemble(100, Vec::Zero(1), Mat::Identity(1, 1), 6);
  FilterConfig cfg;
  cfg.gain_method = GainMethod::constant;
  const auto step = fpf_step(e, m, cfg, {0.01, 2.0, 0.02});
  const auto prop = euler_maruyama_step(e, m, 0.01);
  EXPECT_LE((step.ensemble.states - prop.states).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Filter, NoiselessStepPullsMeanTowardTruth) {
  const SdeModel m = scalar_model(-1, 0, 1);
  const auto e = sample_initial_ensemble(500, Vec::Ones(1), Mat::Constant(1, 1, 0.25), 3);
  FilterConfig cfg;
  const double before = std::abs(ensemble_stats(e, m).mean(0));
  const auto r = fpf_step(e, m, cfg, {0.01, 0.0, 0.0});  // truth at 0, dz = h(0) dt
  EXPECT_LT(std::abs(r.stats.mean(0)), before);
}

TEST(Filter, NoObservationsGivesPriorRowOnly) {
  FilterConfig cfg;
  cfg.n_particles = 20;
  const auto run = run_filter(scalar_model(-1, 1, 1), {}, cfg, Vec::Zero(1), Mat::Identity(1, 1));
  ASSERT_EQ(run.trace.rows.size(), 1u);
  EXPECT_EQ(run.trace.rows[0].t, 0.0);
}

TEST(Filter, ConstantObservationMatchesUnconditionedDiffusion) {
  // 20 repetitions; the final FPF mean and variance against the OU law.
  const SdeModel m = scalar_model(-1, 1, 0, 1.0);
  const TruthPath path = simulate_truth(m, Vec::Zero(1), 1.0, 0.01, 4);
  const auto obs = synthesize_observations(path, m, 5);
  FilterConfig cfg;
  cfg.gain_method = GainMethod::constant;
  cfg.n_particles = 2000;
  const double m0 = 2.0, v0 = 0.5, decay = std::pow(0.99, 100);
  double z_sum = 0.0, v_sum = 0.0;
  for (int r = 0; r < 20; ++r) {
    cfg.seed = 100 + r;
    const auto run = run_filter(m, obs, cfg, Vec::Constant(1, m0), Mat::Constant(1, 1, v0));
    z_sum += run.trace.rows.back().mean(0);
    v_sum += run.trace.rows.back().cov(0, 0);
  }
  // Euler recursion: m_n = 0.99^n m0, v_{n+1} = 0.99^2 v_n + dt.
  double v = v0;
  for (int n = 0; n < 100; ++n) v = 0.99 * 0.99 * v + 0.01;
  EXPECT_NEAR(z_sum / 20.0, m0 * decay, 3.0 * std::sqrt(v / (2000.0 * 20.0)));
  EXPECT_NEAR(v_sum / 20.0, v, 0.03 * v);
}

// ---- reference filters ---------------------------------------------------

TEST(Reference, LyapunovSteadyStateWithoutObservation) {
  KalmanState s{Vec::Zero(1), Mat::Identity(1, 1)};
  for (int n = 0; n < 3000; ++n) s = kalman_bucy_step(s, scalar_model(-1, 1, 0), 0.01, 0.0);
  EXPECT_NEAR(s.cov(0, 0), 0.5, 1e-10);
}

TEST(Reference, ZeroInnovationLeavesOnlyDrift) {
  const double dt = 0.01, m0 = 0.7;
  KalmanState s{Vec::Constant(1, m0), Mat::Constant(1, 1, 2.0)};
  const KalmanState r = kalman_bucy_step(s, scalar_model(-1, 1, 1), dt, m0 * dt);
  EXPECT_DOUBLE_EQ(r.mean(0), m0 - m0 * dt);
}

TEST(Reference, UninformativeWeightsUnchanged) {
  BootstrapState s = bootstrap_init(50, Vec::Zero(1), Mat::Identity(1, 1), 3);
  const Vec w0 = s.weights;
  s = bootstrap_pf_step(s, scalar_model(-1, 1, 0), 0.01, 0.3);
  EXPECT_LE((s.weights - w0).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Reference, TwoParticleWeightRatio) {
  // Frozen dynamics so the particles stay at h = 0 and h = 1.
  BootstrapState s = bootstrap_init(2, Vec::Zero(1), Mat::Identity(1, 1), 3);
  s.ensemble.states << 0.0, 1.0;
  s = bootstrap_pf_step(s, scalar_model(0, 0, 1), 0.1, 0.1);
  // exp(h dz - h^2 dt / 2) with h = 1: exp(0.1 - 0.05).
  EXPECT_NEAR(s.weights(1) / s.weights(0), std::exp(0.05), 1e-12);
}

TEST(Reference, ResamplingRestoresUniformWeights) {
  BootstrapState s = bootstrap_init(200, Vec::Zero(1), Mat::Identity(1, 1), 3);
  s = bootstrap_pf_step(s, scalar_model(0, 0, 1), 0.1, 5.0);  // strong update forces a resample
  ASSERT_EQ(s.resample_count, 1u);
  EXPECT_NEAR(effective_sample_size(s.weights), 200.0, 1e-9);
}

TEST(Reference, GridFrozenModelUnchanged) {
  const GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 0.5, 2.0);
  const GridDensity r = kushner_grid_step(g, scalar_model(0, 0, 0), 0.01, 0.3);
  EXPECT_LE((r.values - g.values).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Reference, GridHeatStepGrowsVarianceByDt) {
  const GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 0.0, 1.0);
  const GridDensity r = kushner_predict(g, scalar_model(0, 1, 0), 0.01);
  EXPECT_NEAR(r.variance() - 1.0, 0.01, 0.02 * 0.01);
}

TEST(Reference, GridUpdateHandValue) {
  const GridDensity g = GridDensity::gaussian(-10.0, 10.0, 2001, 0.0, 1.0);
  EXPECT_NEAR(kushner_update(g, scalar_model(-1, 1, 1), 0.1, 0.1).mean(), 0.1 / 1.1, 1e-9);
}

TEST(Reference, BootstrapMeanWithinMonteCarloBound) {
  const SdeModel m = scalar_model(-1, 1, 1);
  const TruthPath path = simulate_truth(m, Vec::Ones(1), 5.0, 0.01, 21);
  const auto obs = synthesize_observations(path, m, 1021);
  BootstrapState s = bootstrap_init(10000, Vec::Zero(1), Mat::Identity(1, 1), 22);
  KalmanState k{Vec::Zero(1), Mat::Identity(1, 1)};
  for (const auto& o : obs) {
    s = bootstrap_pf_step(s, m, 0.01, o.dz);
    k = kalman_bucy_step(k, m, 0.01, o.dz);
  }
  const double tol = 5.0 * std::sqrt(std::sqrt(2.0) - 1.0) / std::sqrt(10000.0);
  EXPECT_NEAR(weighted_mean(s.ensemble.states, s.weights)(0), k.mean(0), tol);
}

// ---- divergence ----------------------------------------------------------

GridDensity gauss(double m, double v) { return GridDensity::gaussian(-12.0, 12.0, 4001, m, v); }

TEST(Divergences, UnitShiftKl) {
  EXPECT_NEAR(f_divergence(gauss(0, 1), gauss(1, 1), kl_generator()).value, 0.5, 1e-4);
}

TEST(Divergences, DisjointSupportsSmoothedTv) {
  EXPECT_NEAR(f_divergence(gauss(-5, 0.01), gauss(5, 0.01), smoothed_tv_generator()).value, 1.0, 1e-3);
}

TEST(Divergences, KlIsAsymmetric) {
  const double a = f_divergence(gauss(0, 1), gauss(1, 2), kl_generator()).value;
  const double b = f_divergence(gauss(1, 2), gauss(0, 1), kl_generator()).value;
  EXPECT_GT(std::abs(a - b), 1e-3);
}

TEST(Divergences, NonnegativeOnTestedPairs) {
  for (const auto& g : generator_registry())
    for (double m : {0.0, 0.5, 3.0})
      for (double v : {0.3, 1.0, 4.0}) EXPECT_GE(f_divergence(gauss(m, v), gauss(0.2, 1.3), g).value, -1e-10);
}

TEST(Divergences, VanishingReferenceUsesLimitSlope) {
  // p2 is zero on the right half, where p1 still has mass 1/2.  KL and TV have
  // infinite or unit limit slopes respectively; TV gives 1/2 from that region.
  GridDensity p1 = GridDensity::from_function(-1.0, 1.0, 2001, [](double) { return 1.0; });
  GridDensity p2 = GridDensity::from_function(-1.0, 1.0, 2001, [](double x) { return x <= 0.0 ? 1.0 : 0.0; });
  const double tv = f_divergence(p1, p2, smoothed_tv_generator(1e-12)).value;
  EXPECT_NEAR(tv, 0.5, 2e-3);
}

TEST(Kde, LargeSampleIsCloseToTruth) {
  const auto e = sample_initial_ensemble(100000, Vec::Zero(1), Mat::Identity(1, 1), 44);
  const GridDensity truth = GridDensity::gaussian(-10.0, 10.0, 2001, 0.0, 1.0);
  EXPECT_LE(f_divergence(kde_density(e, -10.0, 10.0, 2001), truth, kl_generator()).value, 0.01);
}

TEST(Kde, SinglePointGivesKernel) {
  const GridDensity k = kde_density(Vec::Constant(1, 0.5), -5.0, 5.0, 1001, 0.3);
  const GridDensity expect = GridDensity::gaussian(-5.0, 5.0, 1001, 0.5, 0.09);
  EXPECT_LE((k.values - expect.values).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(k.mass(), 1.0, 1e-8);
}

}  // namespace
}  // namespace fpf
