#include "config.hpp"

#include "fpf/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

namespace fpf::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

double to_double(const std::string& text, const std::string& field) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v))
    throw ConfigError(field + ": expected a number, got '" + text + "'");
  return v;
}

}  // namespace

IniFile IniFile::parse(std::istream& is) {
  IniFile ini;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    const std::string full = section + "." + key;
    if (ini.entries_.count(full)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
    ini.entries_[full] = {trim(line.substr(eq + 1)), lineno};
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse(in);
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  return entries_.count(section + "." + key) > 0;
}

const IniFile::Entry& IniFile::entry(const std::string& section, const std::string& key) const {
  const auto it = entries_.find(section + "." + key);
  if (it == entries_.end()) throw ConfigError("missing field '" + key + "' in [" + section + "]");
  return it->second;
}

std::string IniFile::str(const std::string& section, const std::string& key) const {
  return entry(section, key).value;
}

double IniFile::real(const std::string& section, const std::string& key) const {
  return to_double(str(section, key), where(section, key));
}

long long IniFile::integer(const std::string& section, const std::string& key) const {
  const std::string t = str(section, key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(where(section, key) + ": expected an integer, got '" + t + "'");
  return v;
}

bool IniFile::boolean(const std::string& section, const std::string& key) const {
  std::string t = str(section, key);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(where(section, key) + ": expected true or false, got '" + t + "'");
}

std::vector<double> IniFile::reals(const std::string& section, const std::string& key) const {
  std::vector<double> out;
  for (const auto& cell : csv::split(str(section, key))) out.push_back(to_double(cell, where(section, key)));
  return out;
}

std::vector<std::string> IniFile::unknown_keys(const std::vector<std::string>& known) const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_)
    if (std::find(known.begin(), known.end(), k) == known.end()) out.push_back(k);
  return out;
}

// ---- model registry -------------------------------------------------------

const std::vector<std::string>& model_registry() {
  static const std::vector<std::string> names{"linear1d", "linear2d", "cubic-sensor", "constant-signal", "poly1d"};
  return names;
}

namespace {

double horner(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
  return s;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  return d;
}

SdeModel make_poly1d(const IniFile& ini) {
  const auto drift = ini.reals("model", "drift_poly");
  const auto obs = ini.reals("model", "obs_poly");
  const double sigma = ini.has("model", "sigma") ? ini.real("model", "sigma") : 1.0;
  const auto dobs = poly_derivative(obs);

  SdeModel m;
  m.dim = 1;
  m.drift = [drift](const Vec& x) -> Vec { return Vec::Constant(1, horner(drift, x(0))); };
  m.diffusion = Mat::Constant(1, 1, sigma);
  m.obs = [obs](const Vec& x) { return horner(obs, x(0)); };
  m.obs_grad = [dobs](const Vec& x) -> Vec { return Vec::Constant(1, horner(dobs, x(0))); };

  auto higher_zero = [](const std::vector<double>& c) {
    return std::all_of(c.begin() + std::min<std::size_t>(2, c.size()), c.end(), [](double v) { return v == 0.0; });
  };
  if (higher_zero(drift) && (drift.empty() || drift[0] == 0.0))
    m.linear_drift = Mat::Constant(1, 1, drift.size() > 1 ? drift[1] : 0.0);
  if (higher_zero(obs))
    m.affine_obs = AffineObservation{Vec::Constant(1, obs.size() > 1 ? obs[1] : 0.0), obs.empty() ? 0.0 : obs[0]};
  return m;
}

}  // namespace

SdeModel make_model(const IniFile& ini) {
  const std::string name = ini.str("model", "name");
  if (name == "linear1d")
    return make_linear_model(Mat::Constant(1, 1, -1.0), Mat::Identity(1, 1), Vec::Ones(1));
  if (name == "linear2d") {
    Mat F(2, 2);
    F << -1.0, 0.5, -0.5, -1.0;
    Vec H(2);
    H << 1.0, 0.0;
    return make_linear_model(F, Mat::Identity(2, 2), H);
  }
  if (name == "constant-signal")
    return make_linear_model(Mat::Zero(1, 1), Mat::Zero(1, 1), Vec::Ones(1));
  if (name == "cubic-sensor") {
    SdeModel m;
    m.dim = 1;
    m.drift = [](const Vec& x) -> Vec { return -x; };
    m.diffusion = Mat::Identity(1, 1);
    m.obs = [](const Vec& x) { return x(0) * x(0) * x(0); };
    m.obs_grad = [](const Vec& x) -> Vec { return Vec::Constant(1, 3.0 * x(0) * x(0)); };
    m.linear_drift = Mat::Constant(1, 1, -1.0);
    return m;
  }
  if (name == "poly1d") return make_poly1d(ini);
  throw ConfigError("[model] name: unknown model '" + name + "'");
}

// ---- experiment -------------------------------------------------------------

namespace {

const std::vector<std::string> kKnownKeys{
    "model.name",          "model.drift_poly",     "model.obs_poly",     "model.sigma",
    "run.dt",              "run.t_end",            "run.x0",             "filter.n_particles",
    "filter.gain",         "filter.degree",        "filter.ridge",       "filter.init_mean",
    "filter.init_cov",     "filter.abort_on_inadmissible",               "filter.exec",
    "seeds.truth",         "seeds.obs",            "seeds.filter",       "output.dir",
    "compare.pf_particles", "compare.grid_lo",     "compare.grid_hi",    "compare.grid_n"};

Vec vector_field(const IniFile& ini, const std::string& s, const std::string& k, int d, double fill) {
  if (!ini.has(s, k)) return Vec::Constant(d, fill);
  const auto v = ini.reals(s, k);
  if (static_cast<int>(v.size()) != d)
    throw ConfigError(where(s, k) + ": expected " + std::to_string(d) + " values");
  return Eigen::Map<const Vec>(v.data(), d);
}

Mat matrix_field(const IniFile& ini, const std::string& s, const std::string& k, int d) {
  if (!ini.has(s, k)) return Mat::Identity(d, d);
  const auto v = ini.reals(s, k);
  const int n = static_cast<int>(v.size());
  if (n == 1) return v[0] * Mat::Identity(d, d);
  if (n == d) return Eigen::Map<const Vec>(v.data(), d).asDiagonal();
  if (n == d * d) return Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(v.data(), d, d);
  throw ConfigError(where(s, k) + ": expected 1, d or d*d values");
}

std::optional<std::uint64_t> seed_field(const IniFile& ini, const std::string& key) {
  if (!ini.has("seeds", key)) return std::nullopt;
  const long long v = ini.integer("seeds", key);
  if (v < 0) throw ConfigError(where("seeds", key) + ": must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

int positive_int(const IniFile& ini, const std::string& s, const std::string& k) {
  const long long v = ini.integer(s, k);
  if (v < 1 || v > 100000000) throw ConfigError(where(s, k) + ": out of range");
  return static_cast<int>(v);
}

}  // namespace

ExperimentConfig load_experiment(const IniFile& ini) {
  const auto unknown = ini.unknown_keys(kKnownKeys);
  if (!unknown.empty()) throw ConfigError("unknown field '" + unknown.front() + "'");

  ExperimentConfig c;
  c.model_name = ini.str("model", "name");
  c.model = make_model(ini);
  const int d = c.model.dim;

  if (ini.has("run", "dt")) c.dt = ini.real("run", "dt");
  if (ini.has("run", "t_end")) c.t_end = ini.real("run", "t_end");
  c.x0 = vector_field(ini, "run", "x0", d, 0.0);

  if (ini.has("filter", "n_particles")) c.n_particles = positive_int(ini, "filter", "n_particles");
  if (ini.has("filter", "gain")) {
    try {
      c.filter.gain_method = parse_gain_method(ini.str("filter", "gain"));
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("[filter] gain: ") + e.what());
    }
  }
  if (ini.has("filter", "degree")) c.filter.degree = positive_int(ini, "filter", "degree");
  if (ini.has("filter", "ridge")) c.filter.ridge = ini.real("filter", "ridge");
  if (ini.has("filter", "abort_on_inadmissible"))
    c.filter.abort_on_inadmissible = ini.boolean("filter", "abort_on_inadmissible");
  if (ini.has("filter", "exec")) {
    const std::string e = ini.str("filter", "exec");
    if (e == "serial")
      c.filter.exec = Exec::serial;
    else if (e == "parallel")
      c.filter.exec = Exec::parallel;
    else
      throw ConfigError("[filter] exec: expected serial or parallel, got '" + e + "'");
  }
  c.init_mean = vector_field(ini, "filter", "init_mean", d, 0.0);
  c.init_cov = matrix_field(ini, "filter", "init_cov", d);

  c.seed_truth = seed_field(ini, "truth");
  c.seed_obs = seed_field(ini, "obs");
  c.seed_filter = seed_field(ini, "filter");
  if (ini.has("output", "dir")) c.out_dir = ini.str("output", "dir");

  if (ini.has("compare", "pf_particles")) c.pf_particles = positive_int(ini, "compare", "pf_particles");
  if (ini.has("compare", "grid_lo")) c.grid_lo = ini.real("compare", "grid_lo");
  if (ini.has("compare", "grid_hi")) c.grid_hi = ini.real("compare", "grid_hi");
  if (ini.has("compare", "grid_n")) c.grid_n = positive_int(ini, "compare", "grid_n");
  if (!(c.grid_hi > c.grid_lo) || c.grid_n < 3) throw ConfigError("[compare] grid: need grid_lo < grid_hi, grid_n >= 3");
  return c;
}

}  // namespace fpf::cli
