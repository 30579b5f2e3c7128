#include "fpf/polynomial.hpp"

#include "fpf/error.hpp"

#include <algorithm>
#include <numeric>

namespace fpf {

namespace {

// All exponent vectors of total degree exactly `deg` in `dim` variables.
void enumerate_degree(int dim, int deg, std::vector<int>& cur, int var,
                      std::vector<std::vector<int>>& out) {
  if (var == dim - 1) {
    cur[var] = deg;
    out.push_back(cur);
    return;
  }
  for (int e = deg; e >= 0; --e) {
    cur[var] = e;
    enumerate_degree(dim, deg - e, cur, var + 1, out);
  }
}

}  // namespace

std::vector<std::vector<int>> monomial_exponents(int dim, int min_degree, int max_degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(dim, 0);
  for (int deg = min_degree; deg <= max_degree; ++deg) enumerate_degree(dim, deg, cur, 0, out);
  return out;
}

Polynomial Polynomial::constant(int dim, double c) {
  Polynomial p(dim);
  p.add_term(std::vector<int>(dim, 0), c);
  return p;
}

Polynomial Polynomial::coordinate(int dim, int var) {
  Polynomial p(dim);
  std::vector<int> e(dim, 0);
  e[var] = 1;
  p.add_term(e, 1.0);
  return p;
}

Polynomial Polynomial::univariate(std::span<const double> coefs) {
  Polynomial p(1);
  for (std::size_t k = 0; k < coefs.size(); ++k) p.add_term({static_cast<int>(k)}, coefs[k]);
  return p;
}

Polynomial Polynomial::affine(const Vec& g, double c) {
  const int d = static_cast<int>(g.size());
  Polynomial p = constant(d, c);
  for (int i = 0; i < d; ++i) p = p + coordinate(d, i) * g(i);
  return p;
}

Polynomial Polynomial::quadratic(const Mat& a, const Vec& m, double c) {
  const int d = static_cast<int>(m.size());
  Polynomial p = constant(d, c);
  std::vector<Polynomial> shifted;
  for (int i = 0; i < d; ++i) shifted.push_back(coordinate(d, i) - constant(d, m(i)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (a(i, j) != 0.0) p = p + shifted[i] * shifted[j] * (0.5 * a(i, j));
  return p;
}

Polynomial Polynomial::random(int dim, int degree, double scale, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Polynomial p(dim);
  for (const auto& e : monomial_exponents(dim, 0, degree)) p.add_term(e, scale * normal(gen));
  return p;
}

void Polynomial::add_term(const std::vector<int>& powers, double coef) {
  if (static_cast<int>(powers.size()) != dim_)
    throw PreconditionError("monomial dimension mismatch");
  for (auto& m : terms_) {
    if (m.powers == powers) {
      m.coef += coef;
      prune();
      return;
    }
  }
  if (coef != 0.0) terms_.push_back({powers, coef});
}

int Polynomial::degree() const noexcept {
  int deg = 0;
  for (const auto& m : terms_) deg = std::max(deg, std::accumulate(m.powers.begin(), m.powers.end(), 0));
  return deg;
}

Polynomial Polynomial::derivative(int var) const {
  Polynomial out(dim_);
  for (const auto& m : terms_) {
    if (m.powers[var] == 0) continue;
    auto e = m.powers;
    const double c = m.coef * e[var];
    --e[var];
    out.add_term(e, c);
  }
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  Polynomial out = *this;
  if (out.dim_ == 0) out.dim_ = rhs.dim_;
  for (const auto& m : rhs.terms_) out.add_term(m.powers, m.coef);
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const { return *this + rhs * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  Polynomial out(std::max(dim_, rhs.dim_));
  for (const auto& a : terms_) {
    for (const auto& b : rhs.terms_) {
      std::vector<int> e(a.powers.size());
      for (std::size_t v = 0; v < e.size(); ++v) e[v] = a.powers[v] + b.powers[v];
      out.add_term(e, a.coef * b.coef);
    }
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(dim_);
  if (s == 0.0) return out;
  out.terms_ = terms_;
  for (auto& m : out.terms_) m.coef *= s;
  return out;
}

void Polynomial::prune() {
  std::erase_if(terms_, [](const Monomial& m) { return m.coef == 0.0; });
}

PolyField::PolyField(std::vector<Polynomial> components) : comp_(std::move(components)) {
  for (const auto& c : comp_)
    if (c.dim() != dim() && !c.is_zero())
      throw PreconditionError("field component dimension mismatch");
  for (auto& c : comp_)
    if (c.dim() != dim()) c = Polynomial(dim());
  build_cache();
}

PolyField PolyField::constant(const Vec& c) {
  const int d = static_cast<int>(c.size());
  std::vector<Polynomial> comp;
  for (int j = 0; j < d; ++j) comp.push_back(Polynomial::constant(d, c(j)));
  return PolyField(std::move(comp));
}

PolyField PolyField::random(int dim, int degree, double scale, std::mt19937_64& gen) {
  std::vector<Polynomial> comp;
  for (int j = 0; j < dim; ++j) comp.push_back(Polynomial::random(dim, degree, scale, gen));
  return PolyField(std::move(comp));
}

void PolyField::build_cache() {
  const int d = dim();
  d1_.assign(d, {});
  d2_.assign(d, {});
  div_ = Polynomial(d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) d1_[j].push_back(comp_[j].derivative(i));
    d2_[j].assign(d, {});
    for (int i = 0; i < d; ++i)
      for (int a = 0; a < d; ++a) d2_[j][i].push_back(d1_[j][a].derivative(i));
    div_ = div_ + d1_[j][j];
  }
}

Vec PolyField::value(const Vec& x) const {
  Vec out(dim());
  for (int j = 0; j < dim(); ++j) out(j) = comp_[j](x);
  return out;
}

Mat PolyField::jacobian_t(const Vec& x) const {
  const int d = dim();
  Mat out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = d1_[j][i](x);
  return out;
}

Tensor3 PolyField::jacobian_t_derivative(const Vec& x) const {
  const int d = dim();
  Tensor3 out(d);
  for (int i = 0; i < d; ++i)
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) out(i, a, b) = d2_[b][i][a](x);
  return out;
}

PolyField PolyField::operator+(const PolyField& rhs) const {
  std::vector<Polynomial> comp;
  for (int j = 0; j < dim(); ++j) comp.push_back(comp_[j] + rhs.comp_[j]);
  return PolyField(std::move(comp));
}

PolyField PolyField::operator*(double s) const {
  std::vector<Polynomial> comp;
  for (const auto& c : comp_) comp.push_back(c * s);
  return PolyField(std::move(comp));
}

Vec gradient(const Polynomial& p, const Vec& x) {
  Vec g(p.dim());
  for (int i = 0; i < p.dim(); ++i) g(i) = p.derivative(i)(x);
  return g;
}

Mat hessian(const Polynomial& p, const Vec& x) {
  const int d = p.dim();
  Mat h(d, d);
  for (int i = 0; i < d; ++i) {
    const Polynomial di = p.derivative(i);
    for (int j = i; j < d; ++j) h(i, j) = h(j, i) = di.derivative(j)(x);
  }
  return h;
}

}  // namespace fpf
