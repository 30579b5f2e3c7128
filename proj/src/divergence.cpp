#include "fpf/divergence.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace fpf {

using cplx = std::complex<double>;

FGenerator kl_generator() {
  FGenerator g;
  g.name = "KL";
  g.f = [](double s) { return s > 0.0 ? s * std::log(s) : 0.0; };
  g.fp = [](double s) { return std::log(s) + 1.0; };
  g.fpp = [](double s) { return 1.0 / s; };
  g.fp_complex = [](cplx s) { return std::log(s) + 1.0; };
  g.limit_slope = std::numeric_limits<double>::infinity();
  return g;
}

FGenerator hellinger_generator() {
  FGenerator g;
  g.name = "Hellinger";
  g.f = [](double s) {
    const double r = std::sqrt(s) - 1.0;
    return r * r;
  };
  g.fp = [](double s) { return 1.0 - 1.0 / std::sqrt(s); };
  g.fpp = [](double s) { return 0.5 / (s * std::sqrt(s)); };
  g.fp_complex = [](cplx s) { return 1.0 - 1.0 / std::sqrt(s); };
  g.limit_slope = 1.0;
  return g;
}

FGenerator smoothed_tv_generator(double delta) {
  FGenerator g;
  g.name = "smoothed-TV";
  const double d2 = delta * delta;
  g.f = [=](double s) { return 0.5 * (std::hypot(s - 1.0, delta) - delta); };
  g.fp = [=](double s) { return 0.5 * (s - 1.0) / std::hypot(s - 1.0, delta); };
  g.fpp = [=](double s) {
    const double r = std::hypot(s - 1.0, delta);
    return 0.5 * d2 / (r * r * r);
  };
  // Away from s = 1 the form sign / sqrt(1 + delta^2/(s-1)^2) keeps the
  // imaginary part free of cancellation.
  g.fp_complex = [=](cplx s) {
    const cplx t = s - 1.0;
    if (std::abs(t.real()) < delta) return 0.5 * t / std::sqrt(t * t + d2);
    const double sign = t.real() > 0.0 ? 1.0 : -1.0;
    return 0.5 * sign / std::sqrt(1.0 + d2 / (t * t));
  };
  g.limit_slope = 0.5;
  return g;
}

const std::vector<FGenerator>& generator_registry() {
  static const std::vector<FGenerator> registry = [] {
    std::vector<FGenerator> r{kl_generator(), hellinger_generator(), smoothed_tv_generator()};
    for (const auto& g : r)
      if (g.f(1.0) != 0.0) throw NumericalError("generator " + g.name + " has f(1) != 0");
    return r;
  }();
  return registry;
}

const FGenerator& find_generator(const std::string& name) {
  for (const auto& g : generator_registry())
    if (g.name == name) return g;
  throw PreconditionError("unknown f-generator '" + name + "'");
}

namespace {

double integrand(double a, double b, const FGenerator& gen) {
  if (b < 1e-300) {
    if (a <= 0.0) return 0.0;
    return gen.limit_slope * a;
  }
  return b * gen.f(a / b);
}

}  // namespace

DivergenceResult f_divergence(const GridDensity& p1, const GridDensity& p2, const FGenerator& gen) {
  if (p1.n != p2.n || p1.lo != p2.lo || p1.hi != p2.hi) throw PreconditionError("grid mismatch");
  const int n = p1.n;
  Vec g(n);
  for (int i = 0; i < n; ++i) g(i) = integrand(p1.values(i), p2.values(i), gen);

  const double dx = p1.dx();
  const double fine = trapezoid_weights(n, dx).dot(g);
  DivergenceResult r;
  r.generator = gen.name;
  r.value = fine;
  if (n % 2 == 1 && n >= 5) {
    double coarse = 0.0;
    const int m = (n - 1) / 2;
    for (int k = 0; k <= m; ++k) coarse += (k == 0 || k == m ? 0.5 : 1.0) * g(2 * k);
    coarse *= 2.0 * dx;
    r.quad_error = std::abs(fine - coarse) / 3.0;
  }
  return r;
}

double silverman_bandwidth(const Vec& samples) {
  const double n = static_cast<double>(samples.size());
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / (n - 1.0));
  return 1.06 * sd * std::pow(n, -0.2);
}

GridDensity kde_density(const Vec& samples, double lo, double hi, int n, std::optional<double> bandwidth,
                        Exec exec) {
  if (samples.size() < 1) throw PreconditionError("no samples");
  double bw = 0.0;
  if (bandwidth) {
    bw = *bandwidth;
  } else {
    bw = samples.size() > 1 ? silverman_bandwidth(samples) : 0.0;
    if (!(bw > 0.0)) throw PreconditionError("degenerate ensemble; specify bandwidth");
  }
  if (!(bw > 0.0)) throw PreconditionError("bandwidth must be positive");
  Vec sorted = samples;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  GridDensity g{lo, hi, n, {}};
  g.values = kernels::kde_on_grid(exec, sorted, bw, lo, g.dx(), n);
  g.normalize();
  return g;
}

GridDensity kde_density(const ParticleEnsemble& ens, double lo, double hi, int n,
                        std::optional<double> bandwidth, Exec exec) {
  if (ens.dim() != 1) throw PreconditionError("KDE is 1-D only");
  return kde_density(Vec(ens.states.col(0)), lo, hi, n, bandwidth, exec);
}

void write_divergence_csv(std::ostream& os, const std::vector<DivergenceRow>& rows) {
  csv::row(os, {"t", "generator", "value"});
  for (const auto& r : rows) csv::row(os, {csv::num(r.t), r.generator, csv::num(r.value)});
}

}  // namespace fpf
