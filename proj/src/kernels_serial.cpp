#include "fpf/error.hpp"
#include "fpf/kernels.hpp"
#include "kernel_detail.hpp"

#include <string>

namespace fpf::kernels::serial {

std::uint64_t propagate_em(Mat& states, const SdeModel& model, double dt, std::uint64_t seed,
                           std::uint64_t counter) {
  const int n = static_cast<int>(states.rows());
  const int d = static_cast<int>(states.cols());
  const Mat L = detail::noise_factor(model);
  const double sqdt = std::sqrt(dt);
  std::vector<double> z(d);
  for (int i = 0; i < n; ++i) {
    if (!detail::em_particle(states, i, model, L, sqdt, dt, seed, counter, z))
      throw NumericalError("non-finite drift at particle " + std::to_string(i));
  }
  return counter + (static_cast<std::uint64_t>(d) + 1) / 2;
}

Vec eval_obs(const Mat& states, const SdeModel& model) {
  Vec h(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) h(i) = model.obs(states.row(i).transpose());
  return h;
}

void assemble_gram(const GalerkinBasis& basis, const Mat& states, const Vec& centered_h, Mat& A,
                   Vec& b) {
  const int n = static_cast<int>(states.rows());
  const int d = basis.dim();
  const int m = basis.size();
  A = Mat::Zero(m, m);
  b = Vec::Zero(m);
  Vec psi_mean = Vec::Zero(m);
  std::vector<double> g(static_cast<std::size_t>(m) * d), v(m);
  for (int i = 0; i < n; ++i) {
    const Vec x = states.row(i).transpose();
    basis.values(x.data(), v.data());
    for (int k = 0; k < m; ++k) psi_mean(k) += v[k];
  }
  psi_mean /= n;
  for (int i = 0; i < n; ++i) {
    const Vec x = states.row(i).transpose();
    basis.gradients(x.data(), g.data());
    basis.values(x.data(), v.data());
    for (int k = 0; k < m; ++k) {
      for (int l = 0; l <= k; ++l) {
        double dot = 0.0;
        for (int a = 0; a < d; ++a) dot += g[k * d + a] * g[l * d + a];
        A(k, l) += dot;
      }
      b(k) += centered_h(i) * (v[k] - psi_mean(k));
    }
  }
  A /= n;
  b /= n;
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
}

void galerkin_field(const GalerkinBasis& basis, const Vec& coef, const Mat& states,
                    const Vec& h_vals, double h_hat, const SdeModel& model, GainField& out) {
  const int n = static_cast<int>(states.rows());
  const int d = basis.dim();
  out.k.resize(n, d);
  out.k_jac.resize(n, d * d);
  out.u.resize(n, d);
  out.u_jac.resize(n, d * d);
  std::vector<double> k(d), kj(d * d), u(d), uj(d * d), t;
  for (int i = 0; i < n; ++i) {
    const Vec x = states.row(i).transpose();
    detail::galerkin_particle(basis, coef, x, h_vals(i), h_hat, model.obs_gradient(x), k.data(),
                              kj.data(), u.data(), uj.data(), t);
    for (int a = 0; a < d; ++a) {
      out.k(i, a) = k[a];
      out.u(i, a) = u[a];
    }
    for (int a = 0; a < d * d; ++a) {
      out.k_jac(i, a) = kj[a];
      out.u_jac(i, a) = uj[a];
    }
  }
}

void apply_control(Mat& states, const Mat& k, const Mat& u, double dz, double dt) {
  for (Eigen::Index i = 0; i < states.rows(); ++i)
    for (Eigen::Index j = 0; j < states.cols(); ++j) states(i, j) += k(i, j) * dz + u(i, j) * dt;
}

Vec admissibility_dets(const Mat& v_jac, int d) {
  Vec dets(v_jac.rows());
  for (Eigen::Index i = 0; i < v_jac.rows(); ++i)
    dets(i) = detail::det_identity_plus(v_jac, static_cast<int>(i), d);
  return dets;
}

// Reference version: every sample contributes to every grid point.
Vec kde_on_grid(const Vec& sorted, double bandwidth, double lo, double dx, int n) {
  Vec out = Vec::Zero(n);
  const double scale = 1.0 / (static_cast<double>(sorted.size()) * bandwidth);
  for (int g = 0; g < n; ++g) {
    const double x = lo + g * dx;
    double acc = 0.0;
    for (Eigen::Index s = 0; s < sorted.size(); ++s) acc += detail::gauss_kernel((x - sorted(s)) / bandwidth);
    out(g) = acc * scale;
  }
  return out;
}

}  // namespace fpf::kernels::serial
