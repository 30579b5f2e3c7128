#pragma once

#include "fpf/gain.hpp"
#include "fpf/integrator.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fpf {

enum class GainMethod { exact_gaussian, constant, galerkin };

std::string to_string(GainMethod m);
/// Accepts exact_gaussian, constant, galerkin.  Throws PreconditionError.
GainMethod parse_gain_method(const std::string& name);

struct FilterConfig {
  GainMethod gain_method = GainMethod::exact_gaussian;
  int degree = 3;                // galerkin only
  std::optional<double> ridge;   // galerkin only; solver default when empty
  double dt = 0.01;
  int n_particles = 1000;
  std::uint64_t seed = 0;
  bool abort_on_inadmissible = true;
  double det_floor = 1e-8;
  Exec exec = Exec::parallel;
};

struct FpfStepResult {
  ParticleEnsemble ensemble;
  PosteriorStats stats;  // of the updated ensemble
  std::size_t n_flagged = 0;
};

/// Gain from the configured solver on the given ensemble.
GainField compute_gain(const ParticleEnsemble& ens, const PosteriorStats& stats, const SdeModel& model,
                       const FilterConfig& cfg);

/// Propagate, recompute the gain, then X_i += K_i dz + u_i dt.
FpfStepResult fpf_step(const ParticleEnsemble& ens, const SdeModel& model, const FilterConfig& cfg,
                       const ObservationRecord& obs, std::size_t step_index = 0);

struct TraceRow {
  double t = 0.0;
  double dz = 0.0;
  Vec mean;
  Mat cov;
  double h_hat = 0.0;
  std::size_t n_flagged = 0;
};

struct FilterTrace {
  std::vector<TraceRow> rows;  // rows[0] is the prior at t = 0
};

struct FilterRun {
  FilterTrace trace;
  ParticleEnsemble final_ensemble;
};

FilterRun run_filter(const SdeModel& model, const std::vector<ObservationRecord>& observations,
                     const FilterConfig& cfg, const Vec& init_mean, const Mat& init_cov);

/// `t,dz,mean_1..mean_d,cov_11..cov_dd,h_hat,n_flagged`.
void write_trace_csv(std::ostream& os, const FilterTrace& trace);

}  // namespace fpf
