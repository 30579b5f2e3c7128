#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace fpf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense d x d x d array, row-major in (i, j, k).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const noexcept { return d_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  /// Slice with the first index fixed.
  Mat slice(int i) const {
    Mat out(d_, d_);
    for (int j = 0; j < d_; ++j)
      for (int k = 0; k < d_; ++k) out(j, k) = (*this)(i, j, k);
    return out;
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * d_ + j) * d_ + k;
  }
  int d_ = 0;
  std::vector<double> data_;
};

struct Monomial {
  std::vector<int> powers;
  double coef = 0.0;
};

/// Multivariate polynomial with exact symbolic differentiation.  Evaluation is
/// templated on the scalar so the same object can be evaluated at complex
/// points (complex-step differentiation).
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int dim) : dim_(dim) {}

  static Polynomial constant(int dim, double c);
  /// The coordinate function x_var.
  static Polynomial coordinate(int dim, int var);
  /// 1-D polynomial c[0] + c[1] x + c[2] x^2 + ...
  static Polynomial univariate(std::span<const double> coefs);
  /// Affine function g^T x + c.
  static Polynomial affine(const Vec& g, double c);
  /// Quadratic form 0.5 (x-m)^T A (x-m) + c.
  static Polynomial quadratic(const Mat& a, const Vec& m, double c);
  /// Every monomial of total degree 0..degree with coefficient scale * N(0,1).
  static Polynomial random(int dim, int degree, double scale, std::mt19937_64& gen);

  /// Adds coef * x^powers, merging with an existing identical monomial.
  void add_term(const std::vector<int>& powers, double coef);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept;
  bool is_zero() const noexcept { return terms_.empty(); }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  template <class T>
  T evaluate(std::span<const T> x) const {
    T sum{0.0};
    for (const auto& m : terms_) {
      T prod{m.coef};
      for (int v = 0; v < dim_; ++v)
        for (int e = 0; e < m.powers[v]; ++e) prod *= x[v];
      sum += prod;
    }
    return sum;
  }

  double operator()(const Vec& x) const {
    return evaluate<double>(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  Polynomial derivative(int var) const;

  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator-(const Polynomial& rhs) const;
  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator*(double s) const;

 private:
  void prune();

  int dim_ = 0;
  std::vector<Monomial> terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// Polynomial vector field R^d -> R^d with cached derivative polynomials up to
/// second order.  Derivative layout follows the gradient-transpose convention:
/// jacobian_t(x)(i, j) = dF_j / dx_i.
class PolyField {
 public:
  PolyField() = default;
  explicit PolyField(std::vector<Polynomial> components);

  static PolyField constant(const Vec& c);
  static PolyField random(int dim, int degree, double scale, std::mt19937_64& gen);

  int dim() const noexcept { return static_cast<int>(comp_.size()); }
  const Polynomial& component(int j) const { return comp_[j]; }

  Vec value(const Vec& x) const;
  /// (i, j) = dF_j / dx_i.
  Mat jacobian_t(const Vec& x) const;
  /// (i, a, b) = d/dx_i of jacobian_t(a, b) = d^2 F_b / dx_i dx_a.
  Tensor3 jacobian_t_derivative(const Vec& x) const;
  /// The scalar divergence sum_j dF_j/dx_j.
  const Polynomial& divergence() const noexcept { return div_; }

  template <class T>
  std::vector<T> evaluate(std::span<const T> x) const {
    std::vector<T> out(comp_.size());
    for (std::size_t j = 0; j < comp_.size(); ++j) out[j] = comp_[j].template evaluate<T>(x);
    return out;
  }
  /// Complex-capable version of jacobian_t.
  template <class T>
  std::vector<T> jacobian_t_values(std::span<const T> x) const {
    const int d = dim();
    std::vector<T> out(static_cast<std::size_t>(d) * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i * d + j] = d1_[j][i].template evaluate<T>(x);
    return out;
  }

  PolyField operator+(const PolyField& rhs) const;
  PolyField operator*(double s) const;

 private:
  void build_cache();

  std::vector<Polynomial> comp_;
  std::vector<std::vector<Polynomial>> d1_;               // d1_[j][i] = dF_j/dx_i
  std::vector<std::vector<std::vector<Polynomial>>> d2_;  // d2_[j][i][a]
  Polynomial div_;
};

/// Exponent vectors of every monomial with total degree in [min_degree, max_degree],
/// ordered by degree.
std::vector<std::vector<int>> monomial_exponents(int dim, int min_degree, int max_degree);

/// Gradient of a scalar polynomial.
Vec gradient(const Polynomial& p, const Vec& x);
/// Hessian of a scalar polynomial.
Mat hessian(const Polynomial& p, const Vec& x);

}  // namespace fpf
