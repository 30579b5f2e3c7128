#include "fpf/model.hpp"

#include "fpf/error.hpp"
#include "fpf/rng.hpp"

#include <cmath>

namespace fpf {

Mat SdeModel::noise_covariance() const {
  if (noise_cov) return *noise_cov;
  return diffusion * diffusion.transpose();
}

Vec SdeModel::obs_gradient(const Vec& x) const {
  if (obs_grad) return obs_grad(x);
  Vec g(x.size());
  Vec xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = obs(xp);
    xp(i) = x(i) - step;
    const double fm = obs(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

SdeModel make_linear_model(const Mat& F, const Mat& sigma, const Vec& H, double c) {
  SdeModel m;
  m.dim = static_cast<int>(F.rows());
  m.drift = [F](const Vec& x) -> Vec { return F * x; };
  m.diffusion = sigma;
  m.obs = [H, c](const Vec& x) { return H.dot(x) + c; };
  m.obs_grad = [H](const Vec&) -> Vec { return H; };
  m.linear_drift = F;
  m.affine_obs = AffineObservation{H, c};
  return m;
}

SdeModel with_noise_covariance(SdeModel model, const Mat& Q) {
  model.noise_cov = Q;
  return model;
}

bool is_psd(const Mat& m, double floor) {
  if (!m.allFinite()) return false;
  if (m.size() == 0) return true;
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= floor;
}

std::vector<std::string> validate_model(const SdeModel& model) {
  std::vector<std::string> report;
  const int d = model.dim;
  if (d < 1) {
    report.emplace_back("dimension must be positive");
    return report;
  }
  if (!model.drift) report.emplace_back("drift missing");
  if (!model.obs) report.emplace_back("obs missing");
  if (model.diffusion.rows() != d || model.diffusion.cols() != d)
    report.emplace_back("diffusion shape mismatch");
  else if (!model.diffusion.allFinite())
    report.emplace_back("diffusion non-finite");
  else if (!is_psd(model.noise_covariance()))
    report.emplace_back("diffusion not PSD");

  // Spot checks at the origin and the unit corners.
  std::vector<Vec> probes{Vec::Zero(d), Vec::Ones(d), -Vec::Ones(d)};
  for (const auto& x : probes) {
    if (model.drift) {
      const Vec a = model.drift(x);
      if (a.size() != d || !a.allFinite()) {
        report.emplace_back("drift non-finite");
        break;
      }
    }
  }
  for (const auto& x : probes) {
    if (model.obs && !std::isfinite(model.obs(x))) {
      report.emplace_back("obs non-finite");
      break;
    }
  }
  return report;
}

Mat psd_factor(const Mat& cov) {
  if (!is_psd(cov)) throw PreconditionError("covariance not PSD");
  const Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

ParticleEnsemble sample_initial_ensemble(int n, const Vec& mean, const Mat& cov, std::uint64_t seed) {
  if (n < 2) throw PreconditionError("ensemble needs at least 2 particles");
  const int d = static_cast<int>(mean.size());
  if (cov.rows() != d || cov.cols() != d) throw PreconditionError("covariance shape mismatch");
  const Mat L = psd_factor(cov);

  ParticleEnsemble ens;
  ens.states.resize(n, d);
  ens.seed = seed;
  const std::uint64_t blocks = (static_cast<std::uint64_t>(d) + 1) / 2;
  std::vector<double> z(d);
  for (int i = 0; i < n; ++i) {
    StreamRng rng(seed, static_cast<std::uint64_t>(i));
    rng.fill_normal(z, d);
    const Vec zi = Eigen::Map<const Vec>(z.data(), d);
    ens.states.row(i) = (mean + L * zi).transpose();
  }
  ens.rng_counter = blocks;
  return ens;
}

PosteriorStats ensemble_stats(const ParticleEnsemble& ens, const SdeModel& model) {
  const int n = ens.size();
  const int d = ens.dim();
  PosteriorStats s;
  s.mean = ens.states.colwise().mean().transpose();
  const Mat centered = ens.states.rowwise() - s.mean.transpose();
  s.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  s.cov = 0.5 * (s.cov + s.cov.transpose());
  double hsum = 0.0;
  Vec x(d);
  for (int i = 0; i < n; ++i) {
    x = ens.states.row(i).transpose();
    hsum += model.obs(x);
  }
  s.h_hat = hsum / n;
  return s;
}

}  // namespace fpf
