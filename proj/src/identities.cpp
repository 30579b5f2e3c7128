#include "fpf/identities.hpp"

#include "fpf/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <numbers>

namespace fpf {

using cplx = std::complex<double>;

// ---- LogPolyDensity -----------------------------------------------------

LogPolyDensity::LogPolyDensity(Polynomial log_p) : log_p_(std::move(log_p)) {
  const int d = log_p_.dim();
  d1_.resize(d);
  d2_.assign(d, std::vector<Polynomial>(d));
  d3_.assign(d, std::vector<std::vector<Polynomial>>(d, std::vector<Polynomial>(d)));
  for (int i = 0; i < d; ++i) {
    d1_[i] = log_p_.derivative(i);
    for (int j = 0; j < d; ++j) {
      d2_[i][j] = d1_[i].derivative(j);
      for (int k = 0; k < d; ++k) d3_[i][j][k] = d2_[i][j].derivative(k);
    }
  }
}

LogPolyDensity LogPolyDensity::gaussian(const Vec& mean, const Mat& cov) {
  const int d = static_cast<int>(mean.size());
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw PreconditionError("covariance not positive definite");
  const Mat prec = llt.solve(Mat::Identity(d, d));
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double c = -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet);
  return LogPolyDensity(Polynomial::quadratic(-prec, mean, c));
}

double LogPolyDensity::value(const Vec& x) const { return std::exp(log_p_(x)); }

Vec LogPolyDensity::grad_log(const Vec& x) const {
  Vec g(dim());
  for (int i = 0; i < dim(); ++i) g(i) = d1_[i](x);
  return g;
}

Mat LogPolyDensity::hess_log(const Vec& x) const {
  Mat h(dim(), dim());
  for (int i = 0; i < dim(); ++i)
    for (int j = 0; j < dim(); ++j) h(i, j) = d2_[i][j](x);
  return h;
}

Tensor3 LogPolyDensity::third_log(const Vec& x) const {
  Tensor3 t(dim());
  for (int i = 0; i < dim(); ++i)
    for (int j = 0; j < dim(); ++j)
      for (int k = 0; k < dim(); ++k) t(i, j, k) = d3_[i][j][k](x);
  return t;
}

Vec LogPolyDensity::grad(const Vec& x) const { return value(x) * grad_log(x); }

Mat LogPolyDensity::hess(const Vec& x) const {
  const Vec g = grad_log(x);
  return value(x) * (hess_log(x) + g * g.transpose());
}

Tensor3 LogPolyDensity::third(const Vec& x) const {
  const int d = dim();
  const double p = value(x);
  const Vec g = grad_log(x);
  const Mat h = hess_log(x);
  const Tensor3 t = third_log(x);
  Tensor3 out(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        out(i, j, k) = p * (g(k) * (h(i, j) + g(i) * g(j)) + t(i, j, k) + h(i, k) * g(j) + g(i) * h(j, k));
  return out;
}

// ---- Piola --------------------------------------------------------------

namespace {

template <class T>
T det_small(const std::vector<T>& a, int d) {
  if (d == 1) return a[0];
  if (d == 2) return a[0] * a[3] - a[1] * a[2];
  T sum{0.0};
  std::vector<T> minor(static_cast<std::size_t>(d - 1) * (d - 1));
  for (int c = 0; c < d; ++c) {
    for (int r = 1; r < d; ++r) {
      int mc = 0;
      for (int k = 0; k < d; ++k) {
        if (k == c) continue;
        minor[(r - 1) * (d - 1) + mc++] = a[r * d + k];
      }
    }
    const T term = a[c] * det_small(minor, d - 1);
    sum += (c % 2 == 0) ? term : -term;
  }
  return sum;
}

Mat deformation(const PolyField& v, const Vec& x) {
  const int d = v.dim();
  return Mat::Identity(d, d) + v.jacobian_t(x);
}

}  // namespace

Mat cofactor(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  if (d == 1) return Mat::Ones(1, 1);
  Mat c(d, d);
  Mat minor(d - 1, d - 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      for (int r = 0, mr = 0; r < d; ++r) {
        if (r == i) continue;
        for (int k = 0, mk = 0; k < d; ++k) {
          if (k == j) continue;
          minor(mr, mk++) = m(r, k);
        }
        ++mr;
      }
      c(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
    }
  return c;
}

Vec piola_residual(const PolyField& v, const Vec& x, double fd_step) {
  const int d = v.dim();
  if (std::abs(deformation(v, x).determinant()) < 1e-12)
    throw PreconditionError("I + grad v^T is singular at the probe point");
  Vec r = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    Vec xp = x, xm = x;
    xp(i) += fd_step;
    xm(i) -= fd_step;
    const Mat cp = cofactor(deformation(v, xp));
    const Mat cm = cofactor(deformation(v, xm));
    for (int j = 0; j < d; ++j) r(j) += (cp(i, j) - cm(i, j)) / (2.0 * fd_step);
  }
  return r;
}

// ---- Euler-Lagrange bracket and f-invariance -----------------------------

namespace {

template <class T>
T xi_t(const BayesProbe& probe, const PolyField& v, std::span<const T> x) {
  const int d = v.dim();
  const std::vector<T> vv = v.evaluate<T>(x);
  std::vector<T> m = v.jacobian_t_values<T>(x);
  std::vector<T> s(d);
  for (int i = 0; i < d; ++i) {
    s[i] = x[i] + vv[i];
    m[i * d + i] += 1.0;
  }
  const std::span<const T> ss(s.data(), s.size());
  const T r = probe.y - probe.h.evaluate<T>(ss);
  const T log_ratio = probe.prior.log_p().evaluate<T>(ss) - probe.prior.log_p().evaluate<T>(x) -
                      0.5 * probe.dt * r * r + 0.5 * std::log(probe.dt / (2.0 * std::numbers::pi)) -
                      std::log(probe.p_y);
  return std::exp(log_ratio) * det_small(m, d);
}

struct BracketParts {
  Mat M;
  double q = 0.0;
  Vec bracket;
};

BracketParts bracket_parts(const BayesProbe& probe, const PolyField& v, const Vec& x) {
  const int d = v.dim();
  if (probe.prior.dim() != d || probe.h.dim() != d) throw PreconditionError("dimension mismatch");
  BracketParts out;
  out.M = deformation(v, x);
  Eigen::PartialPivLU<Mat> lu(out.M);
  if (std::abs(out.M.determinant()) < 1e-12) throw PreconditionError("I + grad v^T is singular");
  const Mat minv = lu.inverse();

  const Vec s = x + v.value(x);
  const double px = probe.prior.value(x);
  if (!(px > 0.0)) throw PreconditionError("p(x) must be positive");
  const double resid = probe.y - probe.h(s);
  const double py = std::sqrt(probe.dt / (2.0 * std::numbers::pi)) * std::exp(-0.5 * probe.dt * resid * resid);
  out.q = probe.prior.value(s) * py;

  const Vec grad_s = out.q * (probe.prior.grad_log(s) + probe.dt * resid * gradient(probe.h, s));
  const Vec grad_q = out.M * grad_s;  // chain rule through s = x + v(x)

  const Tensor3 dj = v.jacobian_t_derivative(x);
  Vec t(d);
  for (int i = 0; i < d; ++i) t(i) = (minv * dj.slice(i)).trace();

  out.bracket = grad_q * px + out.q * t * px - out.q * probe.prior.grad(x);
  return out;
}

}  // namespace

double density_ratio(const BayesProbe& probe, const PolyField& v, const Vec& x) {
  return xi_t<double>(probe, v, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Vec el_bracket_residual(const BayesProbe& probe, const PolyField& v, const Vec& x) {
  return bracket_parts(probe, v, x).bracket;
}

FInvarianceResult el_f_invariance(const std::vector<FGenerator>& generators, const BayesProbe& probe,
                                  const PolyField& v, const Vec& x, double cs_step) {
  const int d = v.dim();
  const BracketParts parts = bracket_parts(probe, v, x);
  FInvarianceResult out;
  out.xi = density_ratio(probe, v, x);
  if (!(out.xi > 0.0)) throw PreconditionError("density ratio nonpositive");
  out.bracket = parts.bracket;

  const Mat C = cofactor(parts.M);
  const double px = probe.prior.value(x);
  const double detm = parts.M.determinant();
  out.predicted = (detm / (probe.p_y * px * px)) * (C.transpose() * parts.bracket);

  for (const auto& gen : generators) {
    Vec dfp(d);
    for (int i = 0; i < d; ++i) {
      std::vector<cplx> xc(x.data(), x.data() + d);
      xc[i] += cplx(0.0, cs_step);
      const cplx xi = xi_t<cplx>(probe, v, std::span<const cplx>(xc.data(), xc.size()));
      dfp(i) = gen.fp_complex(xi).imag() / cs_step;
    }
    const Vec res = C.transpose() * dfp;
    out.names.push_back(gen.name);
    out.residual.push_back(res);
    out.normalized.push_back(res / gen.fpp(out.xi));
  }

  for (std::size_t a = 0; a < out.normalized.size(); ++a)
    for (std::size_t b = a + 1; b < out.normalized.size(); ++b) {
      const double scale = std::max({out.normalized[a].cwiseAbs().maxCoeff(),
                                     out.normalized[b].cwiseAbs().maxCoeff(), 1e-300});
      const double rel = (out.normalized[a] - out.normalized[b]).cwiseAbs().maxCoeff() / scale;
      out.max_pairwise_rel = std::max(out.max_pairwise_rel, rel);
    }
  return out;
}

// ---- Taylor-expansion equations ------------------------------------------

Vec oz_equation_residual(const LogPolyDensity& pd, const PolyField& K, const Polynomial& h, const Vec& x) {
  const int d = pd.dim();
  const double p = pd.value(x);
  const Vec gp = pd.grad(x);
  const Mat hp = pd.hess(x);
  const Vec k = K.value(x);
  const Mat jk = K.jacobian_t(x);
  const Vec gh = gradient(h, x);
  const Vec gdiv = gradient(K.divergence(), x);
  const double gpk = gp.dot(k);

  Vec r(d);
  for (int i = 0; i < d; ++i) {
    double t1 = 0.0, t2 = 0.0;
    for (int j = 0; j < d; ++j) {
      t1 += k(j) * hp(i, j);
      t2 += gp(j) * jk(i, j);
    }
    r(i) = p * t1 + p * t2 + p * p * gh(i) + p * p * gdiv(i) - gpk * gp(i);
  }
  return r;
}

Vec ot_equation_residual(const LogPolyDensity& pd, const PolyField& K, const PolyField& U,
                         const Polynomial& h, const Vec& x) {
  const int d = pd.dim();
  const double p = pd.value(x);
  const Vec gp = pd.grad(x);
  const Mat hp = pd.hess(x);
  const Tensor3 tp = pd.third(x);
  const Vec k = K.value(x);
  const Mat jk = K.jacobian_t(x);
  const Tensor3 djk = K.jacobian_t_derivative(x);
  const Vec u = U.value(x);
  const Mat ju = U.jacobian_t(x);
  const double hv = h(x);
  const Vec gh = gradient(h, x);
  const Mat hh = hessian(h, x);
  const Vec gdiv_k = gradient(K.divergence(), x);
  const Vec gdiv_u = gradient(U.divergence(), x);

  const double gpk = gp.dot(k);
  const double gpu = gp.dot(u);
  const double khk = k.dot(hp * k);

  Vec r(d);
  for (int i = 0; i < d; ++i) {
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a7 = 0.0, a8 = 0.0, tr = 0.0;
    for (int j = 0; j < d; ++j) {
      a1 += u(j) * hp(i, j);
      a3 += gp(j) * ju(i, j);
      a7 += k(j) * hh(i, j);
      a8 += gh(j) * jk(i, j);
      for (int m = 0; m < d; ++m) {
        a2 += k(j) * k(m) * tp(i, j, m);
        a4 += k(j) * hp(j, m) * jk(i, m);
        tr += jk(j, m) * djk(i, m, j);
      }
    }
    r(i) = p * a1 + 0.5 * p * a2 + p * a3 + p * a4 - p * p * hv * gh(i) + p * gpk * gh(i) + p * p * a7 +
           p * p * a8 + p * gpk * gdiv_k(i) + p * p * (gdiv_u(i) - tr) - gpu * gp(i) - 0.5 * khk * gp(i);
  }
  return r;
}

// ---- Second-order identities ---------------------------------------------

namespace {

// Local jet of log p and K at a point.
struct Jet {
  int d = 0;
  double p = 0.0;
  Vec g;        // grad log p
  Mat H;        // hess log p
  Tensor3 T;    // third derivatives of log p
  Vec K;
  Mat J;        // J(i, j) = d_i K_j
  Tensor3 dJ;   // dJ(i, a, b) = d_i J(a, b)
  double D = 0.0;
  Vec gD;
  Mat HD;
};

Jet make_jet(const LogPolyDensity& pd, const PolyField& K, const Vec& x) {
  Jet j;
  j.d = pd.dim();
  j.p = pd.value(x);
  j.g = pd.grad_log(x);
  j.H = pd.hess_log(x);
  j.T = pd.third_log(x);
  j.K = K.value(x);
  j.J = K.jacobian_t(x);
  j.dJ = K.jacobian_t_derivative(x);
  j.D = K.divergence()(x);
  j.gD = gradient(K.divergence(), x);
  j.HD = hessian(K.divergence(), x);
  return j;
}

// The IV terms as row vectors indexed by l.
struct Terms {
  Vec iv11, iv12, iv13, iv14, iv15;
  Vec iv21, iv22, iv23, iv24, iv25;
  Vec iv31, iv32;
  Vec iv41, iv42, iv43;
  Vec iv51, iv52, iv53;
  Vec iv6;
  Vec iv81, iv82;
};

Terms make_terms(const Jet& s) {
  const int d = s.d;
  Terms t;
  for (Vec* v : {&t.iv11, &t.iv12, &t.iv13, &t.iv14, &t.iv15, &t.iv21, &t.iv22, &t.iv23, &t.iv24, &t.iv25,
                 &t.iv31, &t.iv32, &t.iv41, &t.iv42, &t.iv43, &t.iv51, &t.iv52, &t.iv53, &t.iv6, &t.iv81,
                 &t.iv82})
    *v = Vec::Zero(d);

  const double gk = s.g.dot(s.K);
  const Vec hk = s.H * s.K;
  const double khk = s.K.dot(hk);

  for (int l = 0; l < d; ++l) {
    for (int m = 0; m < d; ++m)
      for (int j = 0; j < d; ++j) {
        t.iv11(l) -= s.K(m) * s.J(m, j) * s.H(j, l);
        t.iv12(l) -= s.K(m) * s.K(j) * s.T(m, j, l);
        t.iv13(l) -= s.K(m) * s.H(m, j) * s.J(l, j);
        t.iv14(l) -= s.K(m) * s.g(j) * s.dJ(m, l, j);
        t.iv23(l) += 0.5 * s.K(m) * s.K(j) * s.T(l, m, j);
        t.iv31(l) += s.K(m) * s.H(m, j) * s.J(l, j);
        t.iv52(l) -= s.J(l, m) * s.J(m, j) * s.g(j);
      }
    for (int m = 0; m < d; ++m) {
      t.iv15(l) -= s.K(m) * s.HD(m, l);
      t.iv32(l) += gk * s.g(m) * s.J(l, m);
      t.iv42(l) -= gk * s.g(m) * s.J(l, m);
      t.iv51(l) -= hk(m) * s.J(l, m);
      t.iv53(l) -= s.gD(m) * s.J(l, m);
    }
    t.iv24(l) = 0.5 * hk(l) * gk;

    double kh_l = 0.0;  // (K^T H)_l, summed in the other index order from hk
    for (int i = 0; i < d; ++i) kh_l += s.K(i) * s.H(i, l);
    t.iv25(l) = 0.5 * gk * kh_l;
    t.iv41(l) = -gk * kh_l;
    t.iv21(l) = 0.5 * khk * s.g(l);
    t.iv22(l) = 0.5 * gk * gk * s.g(l);
    t.iv43(l) = -gk * s.gD(l);
    t.iv6(l) = gk * s.gD(l);
    t.iv81(l) = -0.5 * khk * s.g(l);
    t.iv82(l) = -0.5 * gk * gk * s.g(l);
  }
  return t;
}

// Inner scalars whose gradients form the right sides of identities 6-8.
double inner6(const Jet& s) {
  const Mat hp_over_p = s.H + s.g * s.g.transpose();
  const double gk = s.g.dot(s.K);
  return -0.5 * s.K.dot(hp_over_p * s.K) + 0.5 * gk * gk;
}

double inner7(const Jet& s) { return -s.K.dot(s.J * s.g); }

double inner8(const Jet& s) { return -s.gD.dot(s.K); }

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (int l = 0; l < x.size(); ++l) {
    Vec xp = x, xm = x;
    xp(l) += h;
    xm(l) -= h;
    g(l) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

Vec stack(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

IdentityCheck appendixB_identity_check(int id, const LogPolyDensity& pd, const PolyField& K, const Vec& x,
                                       double fd_step) {
  if (id < 1 || id > 8) throw PreconditionError("unknown identity id " + std::to_string(id));
  if (pd.dim() != K.dim() || x.size() != pd.dim()) throw PreconditionError("dimension mismatch");
  const Terms t = make_terms(make_jet(pd, K, x));
  auto outer = [&](double (*inner)(const Jet&)) {
    return fd_gradient([&](const Vec& y) { return inner(make_jet(pd, K, y)); }, x, fd_step);
  };

  IdentityCheck c;
  switch (id) {
    case 1:
      c.lhs = t.iv13;
      c.rhs = -t.iv31;
      break;
    case 2:
      c.lhs = t.iv32;
      c.rhs = -t.iv42;
      break;
    case 3:
      c.lhs = t.iv43;
      c.rhs = -t.iv6;
      break;
    case 4:
      c.lhs = stack(t.iv21, t.iv22);
      c.rhs = stack(-t.iv81, -t.iv82);
      break;
    case 5:
      c.lhs = t.iv24 + t.iv25 + t.iv41;
      c.rhs = Vec::Zero(x.size());
      break;
    case 6:
      c.lhs = t.iv12 + t.iv23 + t.iv51;
      c.rhs = outer(inner6);
      break;
    case 7:
      c.lhs = t.iv11 + t.iv14 + t.iv52;
      c.rhs = outer(inner7);
      break;
    case 8:
      c.lhs = t.iv15 + t.iv53;
      c.rhs = outer(inner8);
      break;
  }
  c.gap = (c.lhs - c.rhs).cwiseAbs().maxCoeff();
  return c;
}

IdentityCheck lm2_identity_check(const LogPolyDensity& pd, const PolyField& K, const Vec& x, double fd_step,
                                 TraceForm form) {
  const int d = pd.dim();
  if (K.dim() != d || x.size() != d) throw PreconditionError("dimension mismatch");

  // w_i = sum_j d_j (p K_i K_j), analytic.
  auto w = [&](const Vec& y, int i) {
    const double p = pd.value(y);
    const Vec gp = pd.grad(y);
    const Vec k = K.value(y);
    const Mat j = K.jacobian_t(y);
    const double div = K.divergence()(y);
    double s = gp.dot(k) * k(i) + p * k(i) * div;
    for (int a = 0; a < d; ++a) s += p * j(a, i) * k(a);
    return s;
  };
  double lhs = 0.0;
  for (int i = 0; i < d; ++i) {
    Vec xp = x, xm = x;
    xp(i) += fd_step;
    xm(i) -= fd_step;
    lhs += (w(xp, i) - w(xm, i)) / (2.0 * fd_step);
  }

  const double p = pd.value(x);
  const Vec gp = pd.grad(x);
  const Mat hp = pd.hess(x);
  const Vec k = K.value(x);
  const Mat j = K.jacobian_t(x);
  const double div = K.divergence()(x);
  const Vec gdiv = gradient(K.divergence(), x);
  const double trace = form == TraceForm::index ? (j * j).trace() : (j * j.transpose()).trace();
  const double rhs = k.dot(hp * k) + 2.0 * gp.dot(k) * div + 2.0 * k.dot(j * gp) + p * div * div +
                     2.0 * p * gdiv.dot(k) + p * trace;

  IdentityCheck c;
  c.lhs = Vec::Constant(1, lhs);
  c.rhs = Vec::Constant(1, rhs);
  c.gap = std::abs(lhs - rhs);
  return c;
}

// ---- Poincare counterexample ---------------------------------------------

PoincareDensity soft_laplace_density(int dim) {
  PoincareDensity p;
  p.name = "soft-laplace";
  p.dim = dim;
  p.log_p = [](const Vec& x) { return -std::sqrt(1.0 + x.squaredNorm()); };
  p.grad_log_p = [](const Vec& x) -> Vec { return -x / std::sqrt(1.0 + x.squaredNorm()); };
  return p;
}

PoincareDensity gaussian_poincare_density(int dim) {
  PoincareDensity p;
  p.name = "gaussian";
  p.dim = dim;
  p.log_p = [](const Vec& x) { return -0.5 * x.squaredNorm(); };
  p.grad_log_p = [](const Vec& x) -> Vec { return -x; };
  return p;
}

namespace {

// Visits every node of the uniform tensor grid [lo, hi]^d with m points per
// axis, passing the node and its trapezoid weight.
template <class F>
void for_each_node(int d, int m, double lo, double hi, F&& f) {
  const double step = (hi - lo) / (m - 1);
  std::vector<int> idx(d, 0);
  Vec x(d);
  while (true) {
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      x(k) = lo + idx[k] * step;
      w *= (idx[k] == 0 || idx[k] == m - 1) ? 0.5 * step : step;
    }
    f(x, w);
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
}

}  // namespace

std::vector<double> poincare_counterexample(int q, const PoincareDensity& density,
                                            const std::vector<double>& radii, const PoincareOptions& opts) {
  if (q < 1) throw PreconditionError("q must be >= 1");
  const int d = density.dim;
  Vec center = Vec::Zero(d);
  if (opts.center.size() == d)
    center = opts.center;
  else
    center(0) = 100.0;
  const double bound = q * (1.0 - opts.eps);

  const int probe_m =
      d == 1 ? opts.probe_points : std::max(3, static_cast<int>(std::pow(opts.probe_points, 1.0 / d)));
  double sup = 0.0;
  for_each_node(d, probe_m, -opts.probe_halfwidth, opts.probe_halfwidth,
                [&](const Vec& x, double) { sup = std::max(sup, density.grad_log_p(x).norm()); });
  if (sup > bound) throw PreconditionError("∇log p too large for q");

  std::vector<double> ratios;
  for (double r : radii) {
    if (!(r > 0.0)) throw PreconditionError("radii must be positive");
    // In s = (x - center) / r the bump lives on the unit ball; the Jacobian
    // r^d cancels in the ratio.
    double num = 0.0, den = 0.0;
    for_each_node(d, opts.quad_points, -1.0, 1.0, [&](const Vec& s, double w) {
      const double s2 = s.squaredNorm();
      if (s2 >= 1.0) return;
      const double a = 1.0 - s2;
      const double gamma = std::exp(-1.0 / a);
      const Vec dgamma = gamma * (-2.0 * s / (a * a));
      const Vec x = center + r * s;
      const Vec gl = density.grad_log_p(x);
      sup = std::max(sup, gl.norm());
      const Vec grad = dgamma / r - gamma * gl / q;
      num += w * std::pow(gamma, q);
      den += w * std::pow(grad.norm(), q);
    });
    if (sup > bound) throw PreconditionError("∇log p too large for q");
    ratios.push_back(std::pow(num, 1.0 / q) / std::pow(den, 1.0 / q));
  }
  return ratios;
}

// ---- Gain recursion base case --------------------------------------------

namespace {

// Shifted by h at the left node so that a constant h gives its value exactly.
double h_mean(const GridDensity& p, const std::function<double(double)>& h) {
  const double h0 = h(p.x(0));
  return h0 + p.integrate([&](double x) { return h(x) - h0; }) / p.mass();
}

}  // namespace

Vec gain_quadrature_oracle(const GridDensity& p, const std::function<double(double)>& h) {
  const int n = p.n;
  const double dx = p.dx();
  const double hh = h_mean(p, h);
  Vec k(n);
  double tail = 0.0;
  k(n - 1) = 0.0;
  for (int i = n - 2; i >= 0; --i) {
    const double a = (h(p.x(i)) - hh) * p.values(i);
    const double b = (h(p.x(i + 1)) - hh) * p.values(i + 1);
    tail += 0.5 * dx * (a + b);
    k(i) = tail / p.values(i);
  }
  return k;
}

LemmaDResult lemmaD_base_check(const GridDensity& pg, const std::function<double(double)>& h,
                               const std::function<double(double)>& dh_in) {
  const int n = pg.n;
  if (n < 7) throw PreconditionError("grid too small");
  if (!(pg.values.minCoeff() > 0.0)) throw PreconditionError("p must be positive on the grid");
  const double dx = pg.dx();
  const Vec& p = pg.values;
  const Vec w = trapezoid_weights(n, dx);
  const double hh = h_mean(pg, h);
  auto dh = dh_in ? dh_in : [&h](double x) {
    const double e = 1e-5 * std::max(1.0, std::abs(x));
    return (h(x + e) - h(x - e)) / (2.0 * e);
  };

  // Cell i: -(F_i - F_{i-1}) / w_i = (h_i - h_hat) p_i with face flux
  // F_i = pf_i (phi_{i+1} - phi_i) / dx and F_{-1} = F_{n-1} = 0.
  Vec lower = Vec::Zero(n), diag = Vec::Zero(n), upper = Vec::Zero(n), rhs = Vec::Zero(n);
  auto face = [&](int i) { return (i < 0 || i >= n - 1) ? 0.0 : 0.5 * (p(i) + p(i + 1)); };
  diag(0) = 1.0;  // phi_0 = 0
  for (int i = 1; i < n; ++i) {
    const double s = dx * w(i);
    lower(i) = -face(i - 1) / s;
    upper(i) = -face(i) / s;
    diag(i) = (face(i) + face(i - 1)) / s;
    rhs(i) = (h(pg.x(i)) - hh) * p(i);
  }
  // Thomas algorithm.
  Vec c(n), r(n);
  c(0) = upper(0) / diag(0);
  r(0) = rhs(0) / diag(0);
  for (int i = 1; i < n; ++i) {
    const double piv = diag(i) - lower(i) * c(i - 1);
    if (piv == 0.0 || !std::isfinite(piv)) throw NumericalError("singular tridiagonal system");
    c(i) = upper(i) / piv;
    r(i) = (rhs(i) - lower(i) * r(i - 1)) / piv;
  }
  LemmaDResult out;
  out.phi = Vec(n);
  out.phi(n - 1) = r(n - 1);
  for (int i = n - 2; i >= 0; --i) out.phi(i) = r(i) - c(i) * out.phi(i + 1);

  const Vec& phi = out.phi;
  out.phi_prime = Vec::Zero(n);
  Vec phi2 = Vec::Zero(n);
  Vec lp2 = Vec::Zero(n);
  for (int i = 1; i + 1 < n; ++i) {
    out.phi_prime(i) = (phi(i + 1) - phi(i - 1)) / (2.0 * dx);
    phi2(i) = (phi(i + 1) - 2.0 * phi(i) + phi(i - 1)) / (dx * dx);
    lp2(i) = (std::log(p(i + 1)) - 2.0 * std::log(p(i)) + std::log(p(i - 1))) / (dx * dx);
  }
  for (int i = 2; i + 2 < n; ++i) {
    const double lhs = -(p(i + 1) * phi2(i + 1) - p(i - 1) * phi2(i - 1)) / (2.0 * dx);
    const double g1 = lp2(i) * out.phi_prime(i) + dh(pg.x(i));
    out.residual = std::max(out.residual, std::abs(lhs - g1 * p(i)));
    out.flipped_residual = std::max(out.flipped_residual, std::abs(lhs + g1 * p(i)));
  }
  if (out.residual > 1e-4 && out.flipped_residual < 0.5 * out.residual)
    std::clog << "lemmaD: sign-flipped G1 fits better (" << out.flipped_residual << " vs " << out.residual
              << ")\n";
  return out;
}

}  // namespace fpf
