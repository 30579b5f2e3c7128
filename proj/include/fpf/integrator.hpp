#pragma once

#include "fpf/kernels.hpp"
#include "fpf/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace fpf {

struct TruthPath {
  std::vector<double> times;
  Mat states;  // one row per time
  std::uint64_t seed = 0;
  double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
};

/// Sampled observation Y_n = h(X_n) + W_n with W_n ~ N(0, 1/dt); the filter
/// consumes dz = y * dt.
struct ObservationRecord {
  double time = 0.0;
  double y = 0.0;
  double dz = 0.0;
};

/// One Euler-Maruyama step for every particle.  Consumes the per-particle
/// streams and advances ens.time by dt.
ParticleEnsemble euler_maruyama_step(const ParticleEnsemble& ens, const SdeModel& model, double dt,
                                     Exec exec = Exec::parallel);

/// Path at t = 0, dt, ..., t_end.  t_end / dt must be an integer within 1e-9.
TruthPath simulate_truth(const SdeModel& model, const Vec& x0, double t_end, double dt,
                         std::uint64_t seed);

/// One record per path time after t = 0.  `noiseless` sets y = h(X) exactly.
std::vector<ObservationRecord> synthesize_observations(const TruthPath& path, const SdeModel& model,
                                                       std::uint64_t seed, bool noiseless = false);

void write_truth_csv(std::ostream& os, const TruthPath& path);
void write_observations_csv(std::ostream& os, const std::vector<ObservationRecord>& obs);
/// Parses the `t,y,dz` format written above.  Throws PreconditionError on
/// malformed input.
std::vector<ObservationRecord> read_observations_csv(std::istream& is);

}  // namespace fpf
