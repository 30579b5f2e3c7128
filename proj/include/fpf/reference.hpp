#pragma once

#include "fpf/grid.hpp"
#include "fpf/integrator.hpp"
#include "fpf/kernels.hpp"
#include "fpf/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace fpf {

// ---- Kalman-Bucy --------------------------------------------------------

struct KalmanState {
  Vec mean;
  Mat cov;
};

/// Euler step of the Kalman-Bucy filter for a(x) = F x, h(x) = H^T x + c:
///   m += F m dt + P H (dz - h(m) dt)
///   P += (F P + P F^T + Q - P H H^T P) dt
/// Throws NumericalError "Riccati step unstable; reduce dt" if P leaves the
/// PSD cone.
KalmanState kalman_bucy_step(const KalmanState& state, const SdeModel& model, double dt, double dz);

/// Prior followed by one state per observation.
std::vector<KalmanState> run_kalman_bucy(const SdeModel& model, const std::vector<ObservationRecord>& obs,
                                         double dt, const Vec& mean0, const Mat& cov0);

/// `t,mean,cov` in 1-D; `t,mean_1..,cov_11..` otherwise.
void write_kalman_csv(std::ostream& os, const std::vector<double>& times,
                      const std::vector<KalmanState>& states);

// ---- Bootstrap particle filter ------------------------------------------

struct BootstrapState {
  ParticleEnsemble ensemble;
  Vec weights;  // normalized
  std::uint64_t step = 0;
  std::size_t resample_count = 0;
};

BootstrapState bootstrap_init(int n, const Vec& mean, const Mat& cov, std::uint64_t seed);

/// Propagate, reweight by exp(h dz - h^2 dt / 2), resample systematically
/// when ESS < N/2.  Throws NumericalError "weight collapse".
BootstrapState bootstrap_pf_step(const BootstrapState& state, const SdeModel& model, double dt,
                                 double dz, Exec exec = Exec::parallel);

double effective_sample_size(const Vec& weights);
/// Systematic resampling indices for offset u0 in [0, 1).
std::vector<int> systematic_resample(const Vec& weights, double u0);
Vec weighted_mean(const Mat& particles, const Vec& weights);
Mat weighted_cov(const Mat& particles, const Vec& weights);

// ---- Kushner-Stratonovich on a 1-D grid ---------------------------------

/// Prediction with the forward operator over dt (finite volumes, zero-flux
/// boundaries, substepped for stability).
GridDensity kushner_predict(const GridDensity& density, const SdeModel& model, double dt);
/// p <- p exp(h dz - h^2 dt / 2), renormalized.
GridDensity kushner_update(const GridDensity& density, const SdeModel& model, double dt, double dz);
/// Prediction followed by update.
GridDensity kushner_grid_step(const GridDensity& density, const SdeModel& model, double dt, double dz);

}  // namespace fpf
