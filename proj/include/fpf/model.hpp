#pragma once

#include "fpf/polynomial.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fpf {

/// h(x) = H^T x + c.
struct AffineObservation {
  Vec H;
  double c = 0.0;
};

/// dX = a(X) dt + sigma_B dB,  dZ = h(X) dt + dW  (scalar observation).
struct SdeModel {
  int dim = 1;
  std::function<Vec(const Vec&)> drift;
  Mat diffusion;
  std::function<double(const Vec&)> obs;
  /// Optional; central differences are used when empty.
  std::function<Vec(const Vec&)> obs_grad;

  /// Set when a(x) = F x; lets the Kalman-Bucy oracle run.
  std::optional<Mat> linear_drift;
  /// Set when h is affine; required by the exact Gaussian gain.
  std::optional<AffineObservation> affine_obs;
  /// Overrides sigma_B sigma_B^T when present.  Only needed for models that
  /// are specified directly by their noise covariance.
  std::optional<Mat> noise_cov;

  Mat noise_covariance() const;
  Vec obs_gradient(const Vec& x) const;
};

/// Linear-Gaussian model a(x) = F x, h(x) = H^T x + c.
SdeModel make_linear_model(const Mat& F, const Mat& sigma, const Vec& H, double c = 0.0);

/// Copy of `model` whose noise covariance is Q instead of sigma_B sigma_B^T.
SdeModel with_noise_covariance(SdeModel model, const Mat& Q);

/// Invariant violations, empty when the model is usable.
std::vector<std::string> validate_model(const SdeModel& model);

struct ParticleEnsemble {
  Mat states;  // N x d, row i is particle i
  double time = 0.0;
  /// Particle i draws from the stream (seed, i); `rng_counter` is the next
  /// unused block shared by all streams.
  std::uint64_t seed = 0;
  std::uint64_t rng_counter = 0;

  int size() const noexcept { return static_cast<int>(states.rows()); }
  int dim() const noexcept { return static_cast<int>(states.cols()); }
};

struct PosteriorStats {
  Vec mean;
  Mat cov;
  double h_hat = 0.0;
};

ParticleEnsemble sample_initial_ensemble(int n, const Vec& mean, const Mat& cov, std::uint64_t seed);

/// Sample mean, unbiased covariance and mean of h.
PosteriorStats ensemble_stats(const ParticleEnsemble& ens, const SdeModel& model);

/// Factor L with L L^T = cov, via a clipped eigendecomposition.  Throws
/// PreconditionError "covariance not PSD" beyond a -1e-10 eigenvalue floor.
Mat psd_factor(const Mat& cov);

/// Symmetric-part eigenvalue floor check used by several invariants.
bool is_psd(const Mat& m, double floor = -1e-10);

}  // namespace fpf
