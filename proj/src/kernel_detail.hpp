#pragma once

// Per-particle pieces shared by the serial and OpenMP kernels, so the two
// implementations differ only in loop structure and reduction order.

#include "fpf/basis.hpp"
#include "fpf/model.hpp"
#include "fpf/rng.hpp"

#include <cmath>
#include <vector>

namespace fpf::kernels::detail {

inline Mat noise_factor(const SdeModel& model) {
  return model.noise_cov ? psd_factor(*model.noise_cov) : model.diffusion;
}

/// One Euler-Maruyama step of particle i.  Returns false when the drift is
/// not finite (the state is left untouched in that case).
inline bool em_particle(Mat& states, int i, const SdeModel& model, const Mat& L, double sqdt,
                        double dt, std::uint64_t seed, std::uint64_t counter, std::vector<double>& z) {
  const int d = static_cast<int>(states.cols());
  const Vec x = states.row(i).transpose();
  const Vec a = model.drift(x);
  if (a.size() != d || !a.allFinite()) return false;
  StreamRng rng(seed, static_cast<std::uint64_t>(i), counter);
  rng.fill_normal(z, d);
  const Vec dB = sqdt * Eigen::Map<const Vec>(z.data(), d);
  states.row(i) = (x + a * dt + L * dB).transpose();
  return true;
}

/// Gain, control and their Jacobians at one particle for phi = sum c_k psi_k.
///   u_j        = -1/2 K_j (h + h_hat) + 1/2 sum_m J_mj K_m
///   du_j/dx_i  = -1/2 J_ij (h + h_hat) - 1/2 K_j dh/dx_i
///                + 1/2 sum_m (T_imj K_m + J_mj J_im)
inline void galerkin_particle(const GalerkinBasis& basis, const Vec& coef, const Vec& x, double h,
                              double h_hat, const Vec& grad_h, double* k, double* kj, double* u,
                              double* uj, std::vector<double>& t) {
  const int d = basis.dim();
  t.resize(static_cast<std::size_t>(d) * d * d);
  basis.potential_derivatives(coef.data(), x.data(), k, kj, t.data());
  const double s = h + h_hat;
  for (int j = 0; j < d; ++j) {
    double omega = 0.0;
    for (int m = 0; m < d; ++m) omega += kj[m * d + j] * k[m];
    u[j] = -0.5 * k[j] * s + 0.5 * omega;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double acc = 0.0;
      for (int m = 0; m < d; ++m) acc += t[(i * d + m) * d + j] * k[m] + kj[m * d + j] * kj[i * d + m];
      uj[i * d + j] = -0.5 * kj[i * d + j] * s - 0.5 * k[j] * grad_h(i) + 0.5 * acc;
    }
  }
}

inline double det_identity_plus(const Mat& v_jac, int n, int d) {
  if (d == 1) return 1.0 + v_jac(n, 0);
  if (d == 2) {
    const double a = 1.0 + v_jac(n, 0), b = v_jac(n, 1), c = v_jac(n, 2), e = 1.0 + v_jac(n, 3);
    return a * e - b * c;
  }
  Mat m = Mat::Identity(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) m(a, b) += v_jac(n, a * d + b);
  return m.determinant();
}

inline double gauss_kernel(double u) { return std::exp(-0.5 * u * u) * 0.3989422804014327; }

}  // namespace fpf::kernels::detail
