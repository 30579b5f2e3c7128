#pragma once

#include "fpf/polynomial.hpp"

#include <string>

namespace fpf {

/// Per-particle gain K, its gradient-transpose J = grad K^T, control drift u
/// and grad u^T.  Jacobian rows are flattened: column i*d + j of particle n
/// holds dK_j/dx_i (resp. du_j/dx_i).
struct GainField {
  Mat k;      // N x d
  Mat k_jac;  // N x d*d
  Mat u;      // N x d
  Mat u_jac;  // N x d*d
  double h_hat = 0.0;
  std::string method;
  /// Galerkin coefficients (empty for the closed-form solvers).
  Vec coefficients;

  int size() const noexcept { return static_cast<int>(k.rows()); }
  int dim() const noexcept { return static_cast<int>(k.cols()); }

  /// Unflatten row n of a Jacobian block.
  static Mat jac_at(const Mat& flat, int n, int d) {
    Mat j(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) j(a, b) = flat(n, a * d + b);
    return j;
  }
};

}  // namespace fpf
