#include "fpf/integrator.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"
#include "fpf/rng.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace fpf {

ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ens, const SdeModel& model, double dt,
                                     Exec exec) {
  if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
  ParticleEnsemble out = ens;
  out.rng_counter = kernels::propagate_em(exec, out.states, model, dt, ens.seed, ens.rng_counter);
  out.time = ens.time + dt;
  return out;
}

TruthPath simulate_truth(const SdeModel& model, const Vec& x0, double t_end, double dt,
                         std::uint64_t seed) {
  if (!(t_end > 0.0) || !(dt > 0.0)) throw PreconditionError("t_end and dt must be positive");
  const double ratio = t_end / dt;
  const double steps_f = std::round(ratio);
  if (std::abs(ratio - steps_f) > 1e-9 * std::max(1.0, ratio))
    throw PreconditionError("t_end / dt is not an integer");
  if (x0.size() != model.dim) throw PreconditionError("x0 dimension mismatch");

  const auto steps = static_cast<long>(steps_f);
  TruthPath path;
  path.seed = seed;
  path.times.resize(steps + 1);
  path.states.resize(steps + 1, model.dim);
  path.states.row(0) = x0.transpose();
  path.times[0] = 0.0;

  // The path is a one-particle ensemble on stream 0.
  ParticleEnsemble walker;
  walker.states = x0.transpose();
  walker.seed = seed;
  for (long n = 1; n <= steps; ++n) {
    walker = euler_maruyama_step(walker, model, dt, Exec::serial);
    path.states.row(n) = walker.states.row(0);
    path.times[n] = static_cast<double>(n) * dt;
  }
  return path;
}

std::vector<ObservationRecord> synthesize_observations(const TruthPath& path, const SdeModel& model,
                                                       std::uint64_t seed, bool noiseless) {
  std::vector<ObservationRecord> out;
  if (path.times.size() < 2) return out;
  const double dt = path.dt();
  const double noise_sd = 1.0 / std::sqrt(dt);
  StreamRng rng(seed, 0);
  for (std::size_t n = 1; n < path.times.size(); ++n) {
    const double h = model.obs(path.states.row(static_cast<Eigen::Index>(n)).transpose());
    const double w = noiseless ? 0.0 : noise_sd * rng.normal_pair().first;
    ObservationRecord r;
    r.time = path.times[n];
    r.y = h + w;
    r.dz = r.y * dt;
    out.push_back(r);
  }
  return out;
}

void write_truth_csv(std::ostream& os, const TruthPath& path) {
  const auto d = path.states.cols();
  std::vector<std::string> header{"t"};
  for (Eigen::Index j = 0; j < d; ++j) header.push_back("x_" + std::to_string(j + 1));
  csv::row(os, header);
  for (std::size_t n = 0; n < path.times.size(); ++n) {
    std::vector<std::string> cells{csv::num(path.times[n])};
    for (Eigen::Index j = 0; j < d; ++j)
      cells.push_back(csv::num(path.states(static_cast<Eigen::Index>(n), j)));
    csv::row(os, cells);
  }
}

void write_observations_csv(std::ostream& os, const std::vector<ObservationRecord>& obs) {
  csv::row(os, {"t", "y", "dz"});
  for (const auto& r : obs) csv::row(os, {csv::num(r.time), csv::num(r.y), csv::num(r.dz)});
}

std::vector<ObservationRecord> read_observations_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || csv::split(line) != std::vector<std::string>{"t", "y", "dz"})
    throw PreconditionError("observation file must start with header t,y,dz");
  std::vector<ObservationRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = csv::split(line);
    if (cells.size() != 3)
      throw PreconditionError("observation file line " + std::to_string(lineno) + ": expected 3 fields");
    try {
      out.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2])});
    } catch (const std::exception&) {
      throw PreconditionError("observation file line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

}  // namespace fpf
