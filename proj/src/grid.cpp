#include "fpf/grid.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace fpf {

Vec trapezoid_weights(int n, double dx) {
  Vec w = Vec::Constant(n, dx);
  w(0) = w(n - 1) = 0.5 * dx;
  return w;
}

Vec GridDensity::nodes() const {
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = this->x(i);
  return x;
}

double GridDensity::integrate(const std::function<double(double)>& g) const {
  const Vec w = trapezoid_weights(n, dx());
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w(i) * values(i) * g(x(i));
  return s;
}

double GridDensity::mass() const { return trapezoid_weights(n, dx()).dot(values); }

double GridDensity::mean() const { return integrate([](double x) { return x; }) / mass(); }

double GridDensity::variance() const {
  const double m = mean();
  return integrate([m](double x) { return (x - m) * (x - m); }) / mass();
}

void GridDensity::normalize() {
  const double z = mass();
  if (!(z > 0.0) || !std::isfinite(z)) throw NumericalError("grid density has no mass");
  values /= z;
}

GridDensity GridDensity::from_function(double lo, double hi, int n,
                                       const std::function<double(double)>& p) {
  if (n < 3 || !(hi > lo)) throw PreconditionError("grid needs n >= 3 and hi > lo");
  GridDensity g{lo, hi, n, Vec(n)};
  for (int i = 0; i < n; ++i) g.values(i) = p(g.x(i));
  g.normalize();
  return g;
}

GridDensity GridDensity::gaussian(double lo, double hi, int n, double mean, double var) {
  const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  return from_function(lo, hi, n, [=](double x) { return c * std::exp(-0.5 * (x - mean) * (x - mean) / var); });
}

void write_grid_csv(std::ostream& os, const GridDensity& g) {
  csv::row(os, {"x", "p"});
  for (int i = 0; i < g.n; ++i) csv::row(os, {csv::num(g.x(i)), csv::num(g.values(i))});
}

}  // namespace fpf
