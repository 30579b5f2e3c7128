#pragma once

#include "fpf/error.hpp"
#include "fpf/filter.hpp"
#include "fpf/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fpf::cli {

/// Flat `key = value` text with `[section]` headers.  `#` and `;` start
/// comments.  Every accessor throws ConfigError naming the offending field.
class IniFile {
 public:
  static IniFile parse(std::istream& is);
  static IniFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string str(const std::string& section, const std::string& key) const;
  double real(const std::string& section, const std::string& key) const;
  long long integer(const std::string& section, const std::string& key) const;
  bool boolean(const std::string& section, const std::string& key) const;
  std::vector<double> reals(const std::string& section, const std::string& key) const;

  /// Keys present in the file but absent from `known` ("section.key").
  std::vector<std::string> unknown_keys(const std::vector<std::string>& known) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  const Entry& entry(const std::string& section, const std::string& key) const;
  std::map<std::string, Entry> entries_;
};

/// Named model from the registry, or `poly1d` built from coefficient lists.
SdeModel make_model(const IniFile& ini);
const std::vector<std::string>& model_registry();

struct ExperimentConfig {
  std::string model_name;
  SdeModel model;
  std::optional<double> dt;
  std::optional<double> t_end;
  Vec x0;
  std::optional<int> n_particles;
  FilterConfig filter;
  Vec init_mean;
  Mat init_cov;
  std::optional<std::uint64_t> seed_truth;
  std::optional<std::uint64_t> seed_obs;
  std::optional<std::uint64_t> seed_filter;
  std::string out_dir = ".";
  int pf_particles = 0;  // 0: same as n_particles
  double grid_lo = -10.0;
  double grid_hi = 10.0;
  int grid_n = 2001;
};

ExperimentConfig load_experiment(const IniFile& ini);

/// Throws ConfigError "missing field '<key>' in [<section>]" when absent.
template <class T>
T require(const std::optional<T>& v, const std::string& section, const std::string& key) {
  if (!v) throw ConfigError("missing field '" + key + "' in [" + section + "]");
  return *v;
}

}  // namespace fpf::cli
