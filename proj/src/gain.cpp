#include "fpf/gain.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"

#include <ostream>
#include <string>

namespace fpf {

namespace {

// Gain constant in x: k_jac = 0 and du_j/dx_i = -1/2 K_j dh/dx_i.
GainField constant_field(const Vec& K, const Mat& states, const Vec& h_vals, double h_hat,
                         const SdeModel& model, const char* method) {
  const int n = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());
  GainField g;
  g.method = method;
  g.h_hat = h_hat;
  g.k = K.transpose().replicate(n, 1);
  g.k_jac = Mat::Zero(n, d * d);
  g.u = compute_u(g.k, g.k_jac, h_vals, h_hat);
  g.u_jac.resize(n, d * d);
  for (int i = 0; i < n; ++i) {
    const Vec grad_h = model.obs_gradient(states.row(i).transpose());
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) g.u_jac(i, a * d + b) = -0.5 * K(b) * grad_h(a);
  }
  return g;
}

}  // namespace

GainField solve_gain_exact_gaussian(const ParticleEnsemble& ens, const PosteriorStats& stats,
                                    const SdeModel& model) {
  if (!model.affine_obs) throw PreconditionError("exact solver requires affine h");
  if (!is_psd(stats.cov)) throw PreconditionError("covariance not PSD");
  const Vec K = stats.cov * model.affine_obs->H;
  const Vec h = kernels::eval_obs(Exec::serial, ens.states, model);
  return constant_field(K, ens.states, h, stats.h_hat, model, "exact_gaussian");
}

GainField solve_gain_constant(const ParticleEnsemble& ens, const SdeModel& model, Exec exec) {
  const int n = ens.size();
  if (n < 2) throw PreconditionError("ensemble needs at least 2 particles");
  const Vec h = kernels::eval_obs(exec, ens.states, model);
  const double h_hat = h.mean();
  const Vec mean = ens.states.colwise().mean().transpose();
  Vec K = Vec::Zero(ens.dim());
  for (int i = 0; i < n; ++i) K += (h(i) - h_hat) * (ens.states.row(i).transpose() - mean);
  K /= n;
  return constant_field(K, ens.states, h, h_hat, model, "constant");
}

GainField solve_gain_galerkin(const ParticleEnsemble& ens, const SdeModel& model,
                              const GalerkinBasis& basis, std::optional<double> ridge, Exec exec) {
  const int n = ens.size();
  if (basis.dim() != ens.dim()) throw PreconditionError("basis dimension mismatch");
  if (2L * basis.size() > n)
    throw PreconditionError("basis size " + std::to_string(basis.size()) +
                            " exceeds N/2; use more particles or a lower degree");
  const Vec h = kernels::eval_obs(exec, ens.states, model);
  const double h_hat = h.mean();
  const Vec centered = h.array() - h_hat;

  Mat A;
  Vec b;
  kernels::assemble_gram(exec, basis, ens.states, centered, A, b);
  const double lambda = ridge.value_or(1e-6 * A.trace() / basis.size());
  if (lambda < 0.0) throw PreconditionError("ridge must be nonnegative");
  A.diagonal().array() += lambda;
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalError("Gram matrix singular; increase λ or N");
  const Vec c = llt.solve(b);
  if (!c.allFinite()) throw NumericalError("Gram matrix singular; increase λ or N");

  GainField g;
  g.method = "galerkin";
  g.h_hat = h_hat;
  g.coefficients = c;
  kernels::galerkin_field(exec, basis, c, ens.states, h, h_hat, model, g);
  return g;
}

Mat compute_u(const Mat& k, const Mat& k_jac, const Vec& h_vals, double h_hat) {
  const auto n = k.rows();
  const auto d = k.cols();
  Mat u(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double omega = 0.0;
      for (Eigen::Index m = 0; m < d; ++m) omega += k_jac(i, m * d + j) * k(i, m);
      u(i, j) = -0.5 * k(i, j) * (h_vals(i) + h_hat) + 0.5 * omega;
    }
  }
  return u;
}

AdmissibilityReport check_admissible(const Mat& v, const Mat& v_jac, double eps, Exec exec) {
  const int d = static_cast<int>(v.cols());
  if (v_jac.rows() != v.rows() || v_jac.cols() != d * d)
    throw PreconditionError("displacement Jacobian shape mismatch");
  AdmissibilityReport r;
  r.dets = kernels::admissibility_dets(exec, v_jac, d);
  for (Eigen::Index i = 0; i < r.dets.size(); ++i)
    if (!(r.dets(i) > eps)) r.flagged.push_back(static_cast<std::size_t>(i));
  return r;
}

double gain_residual_on_grid(const GridDensity& density, const Vec& k_on_grid, const SdeModel& model) {
  if (model.dim != 1) throw PreconditionError("grid residual is 1-D only");
  if (k_on_grid.size() != density.n) throw PreconditionError("gain grid size mismatch");
  const int n = density.n;
  const double dx = density.dx();
  Vec h(n);
  Vec x(1);
  for (int i = 0; i < n; ++i) {
    x(0) = density.x(i);
    h(i) = model.obs(x);
  }
  const Vec w = trapezoid_weights(n, dx);
  const double h_hat = (w.array() * h.array() * density.values.array()).sum() / density.mass();
  double worst = 0.0;
  for (int i = 1; i + 1 < n; ++i) {
    const double flux = (density.values(i + 1) * k_on_grid(i + 1) - density.values(i - 1) * k_on_grid(i - 1)) / (2 * dx);
    worst = std::max(worst, std::abs(flux + (h(i) - h_hat) * density.values(i)));
  }
  return worst;
}

void write_gain_csv(std::ostream& os, const Mat& states, const GainField& gain, const Vec& det_v) {
  const int d = gain.dim();
  std::vector<std::string> header{"i"};
  for (const char* p : {"x_", "K_", "u_"})
    for (int j = 0; j < d; ++j) header.push_back(p + std::to_string(j + 1));
  header.emplace_back("detV");
  csv::row(os, header);
  for (int i = 0; i < gain.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    for (int j = 0; j < d; ++j) cells.push_back(csv::num(states(i, j)));
    for (int j = 0; j < d; ++j) cells.push_back(csv::num(gain.k(i, j)));
    for (int j = 0; j < d; ++j) cells.push_back(csv::num(gain.u(i, j)));
    cells.push_back(csv::num(det_v(i)));
    csv::row(os, cells);
  }
}

}  // namespace fpf
