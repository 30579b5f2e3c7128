#pragma once

#include "fpf/polynomial.hpp"

#include <functional>
#include <iosfwd>

namespace fpf {

/// Density sampled on n uniform points spanning [lo, hi].
struct GridDensity {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;
  Vec values;

  double dx() const { return (hi - lo) / (n - 1); }
  double x(int i) const { return lo + i * dx(); }
  /// Node coordinates.
  Vec nodes() const;

  /// Trapezoid-rule integral of values * g(x).
  double integrate(const std::function<double(double)>& g) const;
  double mass() const;
  double mean() const;
  double variance() const;
  /// Rescales to unit trapezoid mass.
  void normalize();

  /// Samples an arbitrary density on the grid and normalizes it.
  static GridDensity from_function(double lo, double hi, int n, const std::function<double(double)>& p);
  static GridDensity gaussian(double lo, double hi, int n, double mean, double var);
};

/// Trapezoid weights for n uniform points with spacing dx.
Vec trapezoid_weights(int n, double dx);

void write_grid_csv(std::ostream& os, const GridDensity& g);

}  // namespace fpf
