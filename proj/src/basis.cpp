#include "fpf/basis.hpp"

#include "fpf/error.hpp"

#include <array>

namespace fpf {

namespace {

constexpr int kMaxDim = 8;

// alpha!/(alpha-beta)!, zero when beta > alpha.
inline double falling(int alpha, int beta) {
  if (beta > alpha) return 0.0;
  double f = 1.0;
  for (int k = 0; k < beta; ++k) f *= alpha - k;
  return f;
}

// d^beta x^alpha evaluated from a power table.
inline double mono_derivative(const std::vector<int>& alpha, const std::array<int, kMaxDim>& beta,
                              const double* pw, int dim, int stride) {
  double v = 1.0;
  for (int k = 0; k < dim; ++k) {
    if (beta[k] > alpha[k]) return 0.0;
    v *= falling(alpha[k], beta[k]) * pw[k * stride + alpha[k] - beta[k]];
  }
  return v;
}

}  // namespace

GalerkinBasis::GalerkinBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > kMaxDim) throw PreconditionError("basis dimension out of range");
  if (degree < 1) throw PreconditionError("basis degree must be at least 1");
  exps_ = monomial_exponents(dim, 1, degree);
}

long GalerkinBasis::expected_size(int dim, int degree) {
  long c = 1;  // C(d + D, D) computed incrementally
  for (int k = 1; k <= degree; ++k) c = c * (dim + k) / k;
  return c - 1;
}

void GalerkinBasis::powers(const double* x, double* pw) const {
  const int stride = degree_ + 1;
  for (int v = 0; v < dim_; ++v) {
    pw[v * stride] = 1.0;
    for (int e = 1; e <= degree_; ++e) pw[v * stride + e] = pw[v * stride + e - 1] * x[v];
  }
}

void GalerkinBasis::values(const double* x, double* out) const {
  std::vector<double> pw(static_cast<std::size_t>(dim_) * (degree_ + 1));
  powers(x, pw.data());
  const std::array<int, kMaxDim> zero{};
  for (int k = 0; k < size(); ++k) out[k] = mono_derivative(exps_[k], zero, pw.data(), dim_, degree_ + 1);
}

void GalerkinBasis::gradients(const double* x, double* out) const {
  std::vector<double> pw(static_cast<std::size_t>(dim_) * (degree_ + 1));
  powers(x, pw.data());
  std::array<int, kMaxDim> beta{};
  for (int k = 0; k < size(); ++k) {
    for (int i = 0; i < dim_; ++i) {
      beta[i] = 1;
      out[k * dim_ + i] = mono_derivative(exps_[k], beta, pw.data(), dim_, degree_ + 1);
      beta[i] = 0;
    }
  }
}

void GalerkinBasis::potential_derivatives(const double* coef, const double* x, double* grad,
                                          double* hess, double* third) const {
  const int d = dim_;
  const int stride = degree_ + 1;
  std::vector<double> pw(static_cast<std::size_t>(d) * stride);
  powers(x, pw.data());
  for (int i = 0; i < d; ++i) grad[i] = 0.0;
  for (int i = 0; i < d * d; ++i) hess[i] = 0.0;
  if (third)
    for (int i = 0; i < d * d * d; ++i) third[i] = 0.0;

  std::array<int, kMaxDim> beta{};
  for (int k = 0; k < size(); ++k) {
    const double c = coef[k];
    if (c == 0.0) continue;
    const auto& a = exps_[k];
    for (int i = 0; i < d; ++i) {
      ++beta[i];
      grad[i] += c * mono_derivative(a, beta, pw.data(), d, stride);
      for (int j = i; j < d; ++j) {
        ++beta[j];
        const double hij = c * mono_derivative(a, beta, pw.data(), d, stride);
        hess[i * d + j] += hij;
        if (j != i) hess[j * d + i] += hij;
        if (third) {
          for (int m = 0; m < d; ++m) {
            ++beta[m];
            const double t = c * mono_derivative(a, beta, pw.data(), d, stride);
            third[(i * d + j) * d + m] += t;
            if (j != i) third[(j * d + i) * d + m] += t;
            --beta[m];
          }
        }
        --beta[j];
      }
      --beta[i];
    }
  }
}

}  // namespace fpf
