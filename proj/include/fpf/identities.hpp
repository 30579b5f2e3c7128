#pragma once

#include "fpf/divergence.hpp"
#include "fpf/grid.hpp"
#include "fpf/polynomial.hpp"

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fpf {

/// Density p = exp(L) with polynomial L.  Derivatives of L are exact; those
/// of p follow from the product rule.
class LogPolyDensity {
 public:
  LogPolyDensity() = default;
  explicit LogPolyDensity(Polynomial log_p);
  /// Normalized N(mean, cov).
  static LogPolyDensity gaussian(const Vec& mean, const Mat& cov);

  int dim() const noexcept { return log_p_.dim(); }
  const Polynomial& log_p() const noexcept { return log_p_; }

  double value(const Vec& x) const;
  Vec grad_log(const Vec& x) const;
  Mat hess_log(const Vec& x) const;
  Tensor3 third_log(const Vec& x) const;
  Vec grad(const Vec& x) const;
  Mat hess(const Vec& x) const;
  Tensor3 third(const Vec& x) const;

 private:
  Polynomial log_p_;
  std::vector<Polynomial> d1_;
  std::vector<std::vector<Polynomial>> d2_;
  std::vector<std::vector<std::vector<Polynomial>>> d3_;
};

/// Cofactor matrix det(M) M^{-T}, computed from minors so it stays defined
/// for singular M.
Mat cofactor(const Mat& m);

/// Column divergences of the cofactor of I + grad v^T at x, by central
/// differences.  Throws PreconditionError when I + grad v^T is singular at x.
Vec piola_residual(const PolyField& v, const Vec& x, double fd_step = 1e-4);

/// Prior p, observation function h and one sampled observation y over dt.
/// p_y is the evidence normalizer; it only rescales the density ratio.
struct BayesProbe {
  LogPolyDensity prior;
  Polynomial h;
  double y = 0.0;
  double dt = 0.01;
  double p_y = 1.0;
};

/// xi(x) = p(x+v) p(y | x+v) det(I + grad v^T) / (p_y p(x)).
double density_ratio(const BayesProbe& probe, const PolyField& v, const Vec& x);

/// Three-term bracket of the Euler-Lagrange condition (row vector):
///   grad^T[q] p + q [tr((I+grad v^T)^{-1} d_i grad v^T)]_i p - q grad^T p
/// with q(x) = p(x+v) p(y | x+v).
Vec el_bracket_residual(const BayesProbe& probe, const PolyField& v, const Vec& x);

struct FInvarianceResult {
  double xi = 0.0;
  Vec bracket;
  std::vector<std::string> names;
  std::vector<Vec> residual;    // grad^T[f'(xi)] det(M) M^{-T}
  std::vector<Vec> normalized;  // residual / f''(xi)
  /// det(M) / (p_y p^2) * bracket * cofactor(M): the common value every
  /// normalized residual should equal.
  Vec predicted;
  /// Largest pairwise relative difference between normalized residuals.
  double max_pairwise_rel = 0.0;
};

/// Full E-L residual for each generator.  grad f'(xi) is taken by complex-step
/// differentiation of f'(xi(x)).  Throws PreconditionError "density ratio
/// nonpositive" when xi <= 0.
FInvarianceResult el_f_invariance(const std::vector<FGenerator>& generators, const BayesProbe& probe,
                                  const PolyField& v, const Vec& x, double cs_step = 1e-20);

/// O(dz) equation (row vector):
///   p K^T grad^2 p + p grad^T p (grad K^T)^T + p^2 grad^T h
///   + p^2 [tr d_i(grad K^T)]_i - (grad^T p K) grad^T p
Vec oz_equation_residual(const LogPolyDensity& p, const PolyField& K, const Polynomial& h, const Vec& x);

/// O(dt) equation (row vector), all twelve terms; Kronecker products are
/// expanded as index loops.
Vec ot_equation_residual(const LogPolyDensity& p, const PolyField& K, const PolyField& u,
                         const Polynomial& h, const Vec& x);

struct IdentityCheck {
  Vec lhs;
  Vec rhs;
  double gap = 0.0;  // max |lhs - rhs|
};

/// Second-order identity `id` in 1..8.  The IV terms are evaluated analytically;
/// identities 6-8 take the outer gradient of their right side by central
/// differences of the analytic inner scalar.  Throws PreconditionError for an
/// unknown id.
IdentityCheck appendixB_identity_check(int id, const LogPolyDensity& p, const PolyField& K, const Vec& x,
                                       double fd_step = 1e-4);

/// Trace term of the expansion: tr(J J) (index form) or tr(J J^T) (matrix form),
/// J = grad K^T.  They differ when J is not symmetric.
enum class TraceForm { index, matrix };

/// sum_ij d_i d_j (p K_i K_j) against its six-term expansion.  The left side
/// takes the outer divergence by central differences.
IdentityCheck lm2_identity_check(const LogPolyDensity& p, const PolyField& K, const Vec& x,
                                 double fd_step = 1e-4, TraceForm form = TraceForm::index);

/// Density for the Poincare counterexample, given by log p and its gradient.
struct PoincareDensity {
  std::string name;
  int dim = 1;
  std::function<double(const Vec&)> log_p;
  std::function<Vec(const Vec&)> grad_log_p;
};

/// p ~ exp(-sqrt(1 + |x|^2)), so |grad log p| < 1.
PoincareDensity soft_laplace_density(int dim);
/// Standard Gaussian (unbounded grad log p).
PoincareDensity gaussian_poincare_density(int dim);

struct PoincareOptions {
  double eps = 0.1;               // hypothesis |grad log p| <= q (1 - eps)
  double probe_halfwidth = 50.0;  // hypothesis checked on [-w, w]^d
  int probe_points = 2001;        // per dimension (d = 1) ; sqrt for d = 2
  int quad_points = 4001;         // per dimension
  Vec center;                     // ball centre x_n; 100 e_1 when empty
};

/// ||u_r||_{L^q(p)} / ||grad u_r||_{L^q(p)} for u_r = gamma((x - x_n)/r) p^{-1/q},
/// gamma the standard mollifier, by tensor-grid trapezoid quadrature.  The
/// hypothesis is checked on the probe box and on every quadrature node.
/// Throws PreconditionError "∇log p too large for q" when it fails.
std::vector<double> poincare_counterexample(int q, const PoincareDensity& density,
                                            const std::vector<double>& radii,
                                            const PoincareOptions& opts = {});

struct LemmaDResult {
  double residual = 0.0;          // max |-(p phi'')' - G1 p|
  double flipped_residual = 0.0;  // same with -G1, for diagnosis
  Vec phi;
  Vec phi_prime;                  // central differences at nodes
};

/// Solves -(p phi')' = (h - h_hat) p on the grid (zero flux at both ends,
/// phi = 0 at the left node, tridiagonal solve) and checks the differentiated
/// equation -(p phi'')' = G1 p with G1 = (log p)'' phi' + h'.
LemmaDResult lemmaD_base_check(const GridDensity& p, const std::function<double(double)>& h,
                               const std::function<double(double)>& dh = nullptr);

/// K(x) = (1/p) int_x^inf (h - h_hat) p, cumulative trapezoid from the right.
Vec gain_quadrature_oracle(const GridDensity& p, const std::function<double(double)>& h);

}  // namespace fpf
