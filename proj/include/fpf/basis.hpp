#pragma once

#include "fpf/polynomial.hpp"

#include <vector>

namespace fpf {

/// Monomials of total degree 1..D in d variables.  The constant is left out
/// because its gradient vanishes.
class GalerkinBasis {
 public:
  GalerkinBasis(int dim, int degree);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  int size() const noexcept { return static_cast<int>(exps_.size()); }
  const std::vector<std::vector<int>>& exponents() const noexcept { return exps_; }

  /// C(d + D, D) - 1.
  static long expected_size(int dim, int degree);

  /// out[k] = psi_k(x).
  void values(const double* x, double* out) const;
  /// out[k * d + i] = d psi_k / dx_i.
  void gradients(const double* x, double* out) const;

  /// Derivatives of phi = sum_k c_k psi_k at x.
  ///   grad[i]              = d phi / dx_i                (this is K)
  ///   hess[i * d + j]      = d2 phi / dx_i dx_j          (this is grad K^T)
  ///   third[(i*d + j)*d+m] = d3 phi / dx_i dx_j dx_m
  /// `third` may be null.
  void potential_derivatives(const double* coef, const double* x, double* grad, double* hess,
                             double* third) const;

 private:
  // Fills pw[v * (D + 1) + e] = x_v^e.
  void powers(const double* x, double* pw) const;

  int dim_;
  int degree_;
  std::vector<std::vector<int>> exps_;
};

}  // namespace fpf
