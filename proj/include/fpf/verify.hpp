#pragma once

#include "fpf/identities.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace fpf {

/// One line of `verify` output.
struct CheckRow {
  std::string check;
  std::string point;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Random configuration for the derivative identities: log p is a random
/// Gaussian log-density plus a small cubic perturbation, K a random cubic
/// field, x uniform in [-1, 1]^d.
struct IdentityProbe {
  LogPolyDensity p;
  PolyField K;
  Vec x;
};
IdentityProbe make_identity_probe(int dim, std::mt19937_64& gen);

/// Prior, observation function, observation and displacement for the
/// Euler-Lagrange checks.  v is kept small so I + grad v^T stays well
/// conditioned.
struct ElProbe {
  BayesProbe bayes;
  PolyField v;
  Vec x;
};
ElProbe make_el_probe(int dim, std::mt19937_64& gen);

/// Random SPD matrix with eigenvalues bounded below by 0.5.
Mat random_spd(int dim, std::mt19937_64& gen);

/// Passes when the gap shrinks by at least `factor` on halving the step, or
/// when the coarse gap is already at the roundoff floor.
bool converges(double coarse, double fine, double floor, double factor = 3.0);

const std::vector<std::string>& verify_suite_names();

/// Runs one named suite.  Throws ConfigError for an unknown name.
std::vector<CheckRow> run_verify_suite(const std::string& suite, std::uint64_t seed = 20240611);

void write_check_csv(std::ostream& os, const std::vector<CheckRow>& rows);

}  // namespace fpf
