#include "fpf/reference.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"
#include "fpf/rng.hpp"

#include <cmath>
#include <limits>
#include <ostream>

namespace fpf {

namespace {

// Resampling draws come from a stream id no particle can use.
constexpr std::uint64_t kResampleStream = std::uint64_t{1} << 63;

}  // namespace

KalmanState kalman_bucy_step(const KalmanState& s, const SdeModel& model, double dt, double dz) {
  if (!model.linear_drift || !model.affine_obs)
    throw PreconditionError("Kalman-Bucy needs a linear drift and affine h");
  const Mat& F = *model.linear_drift;
  const Vec& H = model.affine_obs->H;
  const double c = model.affine_obs->c;
  const Mat Q = model.noise_covariance();

  KalmanState out;
  const Vec PH = s.cov * H;
  out.mean = s.mean + F * s.mean * dt + PH * (dz - (H.dot(s.mean) + c) * dt);
  out.cov = s.cov + (F * s.cov + s.cov * F.transpose() + Q - PH * PH.transpose()) * dt;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  if (!is_psd(out.cov)) throw NumericalError("Riccati step unstable; reduce dt");
  return out;
}

std::vector<KalmanState> run_kalman_bucy(const SdeModel& model, const std::vector<ObservationRecord>& obs,
                                         double dt, const Vec& mean0, const Mat& cov0) {
  std::vector<KalmanState> out{{mean0, cov0}};
  for (const auto& r : obs) out.push_back(kalman_bucy_step(out.back(), model, dt, r.dz));
  return out;
}

void write_kalman_csv(std::ostream& os, const std::vector<double>& times,
                      const std::vector<KalmanState>& states) {
  const int d = states.empty() ? 1 : static_cast<int>(states.front().mean.size());
  std::vector<std::string> header{"t"};
  if (d == 1) {
    header.emplace_back("mean");
    header.emplace_back("cov");
  } else {
    for (int j = 0; j < d; ++j) header.push_back("mean_" + std::to_string(j + 1));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) header.push_back("cov_" + std::to_string(a + 1) + std::to_string(b + 1));
  }
  csv::row(os, header);
  for (std::size_t n = 0; n < states.size() && n < times.size(); ++n) {
    std::vector<std::string> cells{csv::num(times[n])};
    for (int j = 0; j < d; ++j) cells.push_back(csv::num(states[n].mean(j)));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) cells.push_back(csv::num(states[n].cov(a, b)));
    csv::row(os, cells);
  }
}

BootstrapState bootstrap_init(int n, const Vec& mean, const Mat& cov, std::uint64_t seed) {
  BootstrapState s;
  s.ensemble = sample_initial_ensemble(n, mean, cov, seed);
  s.weights = Vec::Constant(n, 1.0 / n);
  return s;
}

double effective_sample_size(const Vec& w) {
  const double s = w.sum();
  return s * s / w.squaredNorm();
}

std::vector<int> systematic_resample(const Vec& w, double u0) {
  const int n = static_cast<int>(w.size());
  std::vector<int> idx(n);
  const double total = w.sum();
  double cum = w(0) / total;
  int j = 0;
  for (int i = 0; i < n; ++i) {
    const double u = (i + u0) / n;
    while (u > cum && j < n - 1) cum += w(++j) / total;
    idx[i] = j;
  }
  return idx;
}

BootstrapState bootstrap_pf_step(const BootstrapState& state, const SdeModel& model, double dt,
                                 double dz, Exec exec) {
  BootstrapState out = state;
  out.ensemble = euler_maruyama_step(state.ensemble, model, dt, exec);
  const int n = out.ensemble.size();
  const Vec h = kernels::eval_obs(exec, out.ensemble.states, model);

  Vec logw(n);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    logw(i) = std::log(state.weights(i)) + h(i) * dz - 0.5 * h(i) * h(i) * dt;
    if (logw(i) > top) top = logw(i);
  }
  if (!std::isfinite(top)) throw NumericalError("weight collapse");
  out.weights = (logw.array() - top).exp();
  const double total = out.weights.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("weight collapse");
  out.weights /= total;

  ++out.step;
  if (effective_sample_size(out.weights) < 0.5 * n) {
    StreamRng rng(out.ensemble.seed, kResampleStream, out.step);
    const auto idx = systematic_resample(out.weights, rng.uniform());
    Mat resampled(n, out.ensemble.dim());
    for (int i = 0; i < n; ++i) resampled.row(i) = out.ensemble.states.row(idx[i]);
    out.ensemble.states = std::move(resampled);
    out.weights = Vec::Constant(n, 1.0 / n);
    ++out.resample_count;
  }
  return out;
}

Vec weighted_mean(const Mat& particles, const Vec& w) {
  return (particles.transpose() * w) / w.sum();
}

Mat weighted_cov(const Mat& particles, const Vec& w) {
  const Vec m = weighted_mean(particles, w);
  const Mat c = particles.rowwise() - m.transpose();
  Mat cov = (c.transpose() * w.asDiagonal() * c) / w.sum();
  return 0.5 * (cov + cov.transpose());
}

GridDensity kushner_predict(const GridDensity& density, const SdeModel& model, double dt) {
  if (model.dim != 1) throw PreconditionError("grid solver is 1-D only");
  const int n = density.n;
  const double dx = density.dx();
  const double diff = 0.5 * model.noise_covariance()(0, 0);  // D = sigma^2 / 2

  // Drift at the n-1 interior faces.
  Vec a_face(n - 1);
  Vec x(1);
  for (int i = 0; i + 1 < n; ++i) {
    x(0) = density.lo + (i + 0.5) * dx;
    a_face(i) = model.drift(x)(0);
  }
  if (!a_face.allFinite()) throw NumericalError("non-finite drift on grid");
  const double amax = a_face.cwiseAbs().maxCoeff();
  if (diff == 0.0 && amax == 0.0) return density;

  double dt_max = std::numeric_limits<double>::infinity();
  if (diff > 0.0) dt_max = std::min(dt_max, 0.4 * dx * dx / (2.0 * diff));
  if (amax > 0.0) dt_max = std::min(dt_max, 0.4 * dx / amax);
  const int substeps = std::max(1, static_cast<int>(std::ceil(dt / dt_max)));
  const double h = dt / substeps;

  // Control volumes match the trapezoid weights, so the update conserves
  // trapezoid mass exactly.
  const Vec w = trapezoid_weights(n, dx);
  GridDensity out = density;
  Vec& p = out.values;
  Vec flux(n - 1);
  for (int s = 0; s < substeps; ++s) {
    for (int i = 0; i + 1 < n; ++i) {
      const double a = a_face(i);
      const bool central = diff > 0.0 && std::abs(a) * dx <= 2.0 * diff;
      const double pf = central ? 0.5 * (p(i) + p(i + 1)) : (a > 0.0 ? p(i) : p(i + 1));
      flux(i) = a * pf - diff * (p(i + 1) - p(i)) / dx;
    }
    for (int i = 0; i < n; ++i) {
      const double in = i > 0 ? flux(i - 1) : 0.0;
      const double outf = i + 1 < n ? flux(i) : 0.0;
      p(i) -= h * (outf - in) / w(i);
    }
    if (p.minCoeff() < -1e-12) throw NumericalError("instability");
    p = p.cwiseMax(0.0);
  }
  return out;
}

GridDensity kushner_update(const GridDensity& density, const SdeModel& model, double dt, double dz) {
  GridDensity out = density;
  Vec loglik(density.n);
  Vec x(1);
  for (int i = 0; i < density.n; ++i) {
    x(0) = density.x(i);
    const double h = model.obs(x);
    loglik(i) = h * dz - 0.5 * h * h * dt;
  }
  const double top = loglik.maxCoeff();
  if (!std::isfinite(top)) throw NumericalError("non-finite likelihood on grid");
  out.values = density.values.array() * (loglik.array() - top).exp();
  out.normalize();
  return out;
}

GridDensity kushner_grid_step(const GridDensity& density, const SdeModel& model, double dt, double dz) {
  return kushner_update(kushner_predict(density, model, dt), model, dt, dz);
}

}  // namespace fpf
