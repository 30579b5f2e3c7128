#include "fpf/verify.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace fpf {

namespace {

constexpr double kStep = 1e-4;
constexpr double kFdFloor = 1e-9;

Vec uniform_point(int d, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = u(gen);
  return x;
}

Vec normal_vec(int d, double scale, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, scale);
  Vec x(d);
  for (int i = 0; i < d; ++i) x(i) = n(gen);
  return x;
}

std::string tag(int d, int k) { return "d=" + std::to_string(d) + "#" + std::to_string(k); }

std::string at(double x) { return "x=" + csv::num(x); }

CheckRow upper(std::string check, std::string point, double residual, double tol) {
  return {std::move(check), std::move(point), residual, tol, residual <= tol};
}

// ---- suites ------------------------------------------------------------

std::vector<CheckRow> piola_suite(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::mt19937_64 gen(seed);
  for (int k = 0; k < 100; ++k) {
    const int d = 2 + k % 2;
    PolyField v;
    Vec x;
    do {
      v = PolyField::random(d, 3, 0.5, gen);
      x = uniform_point(d, gen);
    } while (std::abs((Mat::Identity(d, d) + v.jacobian_t(x)).determinant()) < 1e-3);
    const double coarse = piola_residual(v, x, kStep).cwiseAbs().maxCoeff();
    const double fine = piola_residual(v, x, 0.5 * kStep).cwiseAbs().maxCoeff();
    rows.push_back(upper("piola", tag(d, k), coarse, 1e-6));
    CheckRow rate{"piola-rate", tag(d, k), coarse > kFdFloor ? fine / coarse : 0.0, 1.0 / 3.0, false};
    rate.pass = converges(coarse, fine, kFdFloor);
    rows.push_back(rate);
  }
  return rows;
}

std::vector<CheckRow> appendixB_suite(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::mt19937_64 gen(seed);
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + k % 3;
    const IdentityProbe pr = make_identity_probe(d, gen);
    for (int id = 1; id <= 8; ++id) {
      const double coarse = appendixB_identity_check(id, pr.p, pr.K, pr.x, kStep).gap;
      CheckRow row = upper("appendixB-" + std::to_string(id), tag(d, k), coarse, 1e-5);
      if (id >= 6) {
        const double fine = appendixB_identity_check(id, pr.p, pr.K, pr.x, 0.5 * kStep).gap;
        row.pass = row.pass && converges(coarse, fine, kFdFloor);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<CheckRow> lm2_suite(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::mt19937_64 gen(seed);
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + k % 3;
    const IdentityProbe pr = make_identity_probe(d, gen);
    const double coarse = lm2_identity_check(pr.p, pr.K, pr.x, kStep).gap;
    const double fine = lm2_identity_check(pr.p, pr.K, pr.x, 0.5 * kStep).gap;
    CheckRow row = upper("lm2", tag(d, k), coarse, 1e-5);
    row.pass = row.pass && converges(coarse, fine, kFdFloor);
    rows.push_back(row);
  }
  // Rotation field: grad K^T is antisymmetric, so the two trace readings
  // differ in sign.
  const Polynomial x1 = Polynomial::coordinate(2, 0), x2 = Polynomial::coordinate(2, 1);
  const PolyField rot({x2, -1.0 * x1});
  const LogPolyDensity p = LogPolyDensity::gaussian(Vec::Zero(2), Mat::Identity(2, 2));
  Vec x(2);
  x << 0.4, -0.9;
  rows.push_back(upper("lm2-rotation", "x=(0.4,-0.9)", lm2_identity_check(p, rot, x, kStep).gap, 1e-6));
  return rows;
}

std::vector<CheckRow> el_suite(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::mt19937_64 gen(seed);
  const auto& gens = generator_registry();
  for (int k = 0; k < 50; ++k) {
    const int d = 1 + k % 3;
    const ElProbe pr = make_el_probe(d, gen);
    const FInvarianceResult r = el_f_invariance(gens, pr.bayes, pr.v, pr.x);
    rows.push_back(upper("el-invariance", tag(d, k), r.max_pairwise_rel, 1e-6));
    const double scale = std::max(r.predicted.cwiseAbs().maxCoeff(), 1e-300);
    rows.push_back(upper("el-factorization", tag(d, k),
                         (r.normalized.front() - r.predicted).cwiseAbs().maxCoeff() / scale, 1e-6));
  }

  // No information and no displacement: the bracket vanishes identically.
  {
    BayesProbe b{LogPolyDensity::gaussian(Vec::Zero(1), Mat::Identity(1, 1)), Polynomial(1), 0.0, 0.01};
    const PolyField zero = PolyField::constant(Vec::Zero(1));
    Vec x(1);
    x << 0.7;
    rows.push_back(upper("el-bracket-trivial", at(0.7), el_bracket_residual(b, zero, x).norm(), 1e-15));
  }
  // Scalar Gaussian, h = x: v = K dz + u dt with K = 1, u = -x/2 is exact to
  // leading order.
  {
    const double dt = 0.01, dz = 0.01;
    BayesProbe b{LogPolyDensity::gaussian(Vec::Zero(1), Mat::Identity(1, 1)), Polynomial::coordinate(1, 0),
                 dz / dt, dt};
    const std::vector<double> c{dz, -0.5 * dt};
    const PolyField v({Polynomial::univariate(c)});
    for (double xv : {-1.5, 0.0, 0.8}) {
      Vec x(1);
      x << xv;
      rows.push_back(upper("el-bracket-gaussian", at(xv), el_bracket_residual(b, v, x).norm(), 1e-3));
    }
  }
  return rows;
}

std::vector<CheckRow> poincare_suite() {
  std::vector<CheckRow> rows;
  const std::vector<double> radii{1.0, 2.0, 4.0, 8.0};
  const auto ratios = poincare_counterexample(2, soft_laplace_density(1), radii);
  for (std::size_t i = 0; i < radii.size(); ++i)
    rows.push_back({"poincare-ratio", "r=" + csv::num(radii[i]), ratios[i], 0.0, std::isfinite(ratios[i])});
  for (std::size_t i = 1; i < radii.size(); ++i) {
    const double step = ratios[i] - ratios[i - 1];
    rows.push_back({"poincare-increasing", "r=" + csv::num(radii[i]), step, 0.0, step > 0.0});
  }
  const double growth = ratios.back() / ratios.front();
  rows.push_back({"poincare-growth", "r=8/r=1", growth, 3.0, growth >= 3.0});

  bool rejected = false;
  try {
    poincare_counterexample(2, gaussian_poincare_density(1), radii);
  } catch (const PreconditionError&) {
    rejected = true;
  }
  rows.push_back({"poincare-gaussian-rejected", "q=2", rejected ? 0.0 : 1.0, 0.0, rejected});
  return rows;
}

std::vector<CheckRow> lemmaD_suite() {
  std::vector<CheckRow> rows;
  const auto gauss = GridDensity::gaussian(-8.0, 8.0, 2001, 0.0, 1.0);
  const auto lin = [](double x) { return x; };
  const auto sq = [](double x) { return x * x; };
  const auto one = [](double) { return 1.0; };

  rows.push_back(upper("lemmaD", "h=x", lemmaD_base_check(gauss, lin).residual, 1e-3));
  rows.push_back(upper("lemmaD", "h=const", lemmaD_base_check(gauss, one).residual, 1e-12));
  const LemmaDResult sq_res = lemmaD_base_check(gauss, sq);
  rows.push_back(upper("lemmaD", "h=x^2", sq_res.residual, 1e-3));

  const Vec oracle = gain_quadrature_oracle(gauss, sq);
  double gain_err = 0.0;
  for (int i = 1; i + 1 < gauss.n; ++i)
    if (std::abs(gauss.x(i)) <= 4.0)
      gain_err = std::max(gain_err, std::abs(sq_res.phi_prime(i) - oracle(i)) / std::max(1.0, std::abs(oracle(i))));
  rows.push_back(upper("lemmaD-gain", "h=x^2", gain_err, 1e-3));

  const auto coarse_grid = GridDensity::gaussian(-8.0, 8.0, 1001, 0.0, 1.0);
  const double coarse = lemmaD_base_check(coarse_grid, sq).residual;
  rows.push_back({"lemmaD-refinement", "h=x^2", sq_res.residual / coarse, 1.0 / 3.0,
                  converges(coarse, sq_res.residual, 1e-12)});
  return rows;
}

std::vector<CheckRow> taylor_suite(std::uint64_t seed) {
  std::vector<CheckRow> rows;
  std::mt19937_64 gen(seed);
  // O(dz): Gaussian p, affine h, K = Sigma H.
  for (int k = 0; k < 12; ++k) {
    const int d = 1 + k % 3;
    const Vec m = normal_vec(d, 0.5, gen);
    const Mat cov = random_spd(d, gen);
    const Vec H = normal_vec(d, 1.0, gen);
    const LogPolyDensity p = LogPolyDensity::gaussian(m, cov);
    const Polynomial h = Polynomial::affine(H, 0.3);
    const PolyField K = PolyField::constant(cov * H);
    const Vec x = uniform_point(d, gen);
    rows.push_back(upper("oz-gaussian-affine", tag(d, k), oz_equation_residual(p, K, h, x).cwiseAbs().maxCoeff(),
                         1e-10));
  }
  // O(dt): N(0, 1), h = x, K = 1, u = -x/2.
  {
    const LogPolyDensity p = LogPolyDensity::gaussian(Vec::Zero(1), Mat::Identity(1, 1));
    const Polynomial h = Polynomial::coordinate(1, 0);
    const PolyField K = PolyField::constant(Vec::Ones(1));
    const PolyField u({-0.5 * h});
    for (double xv : {-2.0, -1.0, 0.0, 0.5, 1.5}) {
      Vec x(1);
      x << xv;
      rows.push_back(
          upper("ot-gaussian", at(xv), ot_equation_residual(p, K, u, h, x).cwiseAbs().maxCoeff(), 1e-10));
    }
  }
  return rows;
}

}  // namespace

Mat random_spd(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = n(gen);
  return a * a.transpose() / d + 0.5 * Mat::Identity(d, d);
}

IdentityProbe make_identity_probe(int d, std::mt19937_64& gen) {
  const Vec m = normal_vec(d, 0.5, gen);
  const Mat cov = random_spd(d, gen);
  Polynomial logp = LogPolyDensity::gaussian(m, cov).log_p() + Polynomial::random(d, 3, 0.05, gen);
  IdentityProbe pr;
  pr.p = LogPolyDensity(std::move(logp));
  pr.K = PolyField::random(d, 3, 0.5, gen);
  pr.x = uniform_point(d, gen);
  return pr;
}

ElProbe make_el_probe(int d, std::mt19937_64& gen) {
  ElProbe pr;
  const double dt = 0.01;
  pr.bayes.prior = LogPolyDensity::gaussian(normal_vec(d, 0.5, gen), random_spd(d, gen));
  pr.bayes.h = Polynomial::random(d, 2, 0.5, gen);
  pr.bayes.dt = dt;
  pr.x = uniform_point(d, gen);
  std::normal_distribution<double> n(0.0, 1.0);
  pr.bayes.y = pr.bayes.h(pr.x) + n(gen) / std::sqrt(dt);
  do {
    pr.v = PolyField::random(d, 3, 0.1, gen);
  } while ((Mat::Identity(d, d) + pr.v.jacobian_t(pr.x)).determinant() < 0.1);
  return pr;
}

bool converges(double coarse, double fine, double floor, double factor) {
  if (coarse <= floor) return fine <= floor;
  return fine <= coarse / factor;
}

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"piola",    "appendixB", "lm2",   "el-invariance",
                                              "poincare", "lemmaD",    "taylor"};
  return names;
}

std::vector<CheckRow> run_verify_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "piola") return piola_suite(seed);
  if (suite == "appendixB") return appendixB_suite(seed);
  if (suite == "lm2") return lm2_suite(seed);
  if (suite == "el-invariance") return el_suite(seed);
  if (suite == "poincare") return poincare_suite();
  if (suite == "lemmaD") return lemmaD_suite();
  if (suite == "taylor") return taylor_suite(seed);
  throw ConfigError("unknown verify suite '" + suite + "'");
}

void write_check_csv(std::ostream& os, const std::vector<CheckRow>& rows) {
  csv::row(os, {"check", "point", "residual", "tolerance", "pass"});
  for (const auto& r : rows)
    csv::row(os, {r.check, r.point, csv::num(r.residual), csv::num(r.tolerance), r.pass ? "1" : "0"});
}

}  // namespace fpf
