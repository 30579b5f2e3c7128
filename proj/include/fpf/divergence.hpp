#pragma once

#include "fpf/grid.hpp"
#include "fpf/kernels.hpp"
#include "fpf/model.hpp"

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpf {

/// Convex generator with f(1) = 0.
struct FGenerator {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> fp;
  std::function<double(double)> fpp;
  /// f' continued to complex arguments, for complex-step derivatives.
  std::function<std::complex<double>(std::complex<double>)> fp_complex;
  /// lim_{s -> inf} f(s) / s; used where p2 vanishes.
  double limit_slope = 0.0;
};

FGenerator kl_generator();
FGenerator hellinger_generator();
/// f(s) = (sqrt((s-1)^2 + delta^2) - delta) / 2.
FGenerator smoothed_tv_generator(double delta = 1e-6);

/// KL, Hellinger and smoothed TV.  f(1) = 0 is checked when the registry is
/// first built.
const std::vector<FGenerator>& generator_registry();
const FGenerator& find_generator(const std::string& name);

struct DivergenceResult {
  std::string generator;
  double value = 0.0;
  double quad_error = 0.0;  // trapezoid step-doubling estimate
};

/// D_f(p1 || p2) = integral of p2 f(p1 / p2), trapezoid rule.
DivergenceResult f_divergence(const GridDensity& p1, const GridDensity& p2, const FGenerator& gen);

double silverman_bandwidth(const Vec& samples);

/// Gaussian KDE on the grid [lo, hi] with n points, renormalized.  Throws
/// PreconditionError "degenerate ensemble; specify bandwidth" when the
/// samples have zero spread and no bandwidth is given.
GridDensity kde_density(const Vec& samples, double lo, double hi, int n,
                        std::optional<double> bandwidth = std::nullopt, Exec exec = Exec::parallel);
GridDensity kde_density(const ParticleEnsemble& ens, double lo, double hi, int n,
                        std::optional<double> bandwidth = std::nullopt, Exec exec = Exec::parallel);

struct DivergenceRow {
  double t = 0.0;
  std::string generator;
  double value = 0.0;
};
void write_divergence_csv(std::ostream& os, const std::vector<DivergenceRow>& rows);

}  // namespace fpf
