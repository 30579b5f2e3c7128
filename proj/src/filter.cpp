#include "fpf/filter.hpp"

#include "fpf/csv.hpp"
#include "fpf/error.hpp"

#include <cmath>
#include <ostream>

namespace fpf {

std::string to_string(GainMethod m) {
  switch (m) {
    case GainMethod::exact_gaussian: return "exact_gaussian";
    case GainMethod::constant: return "constant";
    case GainMethod::galerkin: return "galerkin";
  }
  return "?";
}

GainMethod parse_gain_method(const std::string& name) {
  if (name == "exact_gaussian") return GainMethod::exact_gaussian;
  if (name == "constant") return GainMethod::constant;
  if (name == "galerkin") return GainMethod::galerkin;
  throw PreconditionError("unknown gain method '" + name + "'");
}

GainField compute_gain(const ParticleEnsemble& ens, const PosteriorStats& stats, const SdeModel& model,
                       const FilterConfig& cfg) {
  switch (cfg.gain_method) {
    case GainMethod::exact_gaussian: return solve_gain_exact_gaussian(ens, stats, model);
    case GainMethod::constant: return solve_gain_constant(ens, model, cfg.exec);
    case GainMethod::galerkin:
      return solve_gain_galerkin(ens, model, GalerkinBasis(model.dim, cfg.degree), cfg.ridge, cfg.exec);
  }
  throw PreconditionError("unknown gain method");
}

FpfStepResult fpf_step(const ParticleEnsemble& ens, const SdeModel& model, const FilterConfig& cfg,
                       const ObservationRecord& obs, std::size_t step_index) {
  const double expected = ens.time + cfg.dt;
  if (std::abs(obs.time - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
    throw PreconditionError("observation time " + csv::num(obs.time) + " does not follow ensemble time " +
                            csv::num(ens.time) + " by dt");

  FpfStepResult out;
  out.ensemble = euler_maruyama_step(ens, model, cfg.dt, cfg.exec);
  out.ensemble.time = obs.time;

  const PosteriorStats prior = ensemble_stats(out.ensemble, model);
  const GainField gain = compute_gain(out.ensemble, prior, model, cfg);

  const Mat v_jac = gain.k_jac * obs.dz + gain.u_jac * cfg.dt;
  const Mat v = gain.k * obs.dz + gain.u * cfg.dt;
  const AdmissibilityReport adm = check_admissible(v, v_jac, cfg.det_floor, cfg.exec);
  out.n_flagged = adm.flagged.size();
  if (out.n_flagged > 0 && cfg.abort_on_inadmissible) throw AdmissibilityError(step_index, adm.flagged);

  kernels::apply_control(cfg.exec, out.ensemble.states, gain.k, gain.u, obs.dz, cfg.dt);
  if (!out.ensemble.states.allFinite())
    throw NumericalError("non-finite particle state after control at step " + std::to_string(step_index));
  out.stats = ensemble_stats(out.ensemble, model);
  return out;
}

namespace {

TraceRow make_row(double t, double dz, const PosteriorStats& s, std::size_t flagged) {
  return TraceRow{t, dz, s.mean, s.cov, s.h_hat, flagged};
}

}  // namespace

FilterRun run_filter(const SdeModel& model, const std::vector<ObservationRecord>& observations,
                     const FilterConfig& cfg, const Vec& init_mean, const Mat& init_cov) {
  if (!(cfg.dt > 0.0)) throw PreconditionError("dt must be positive");
  if (cfg.n_particles < 2) throw PreconditionError("n_particles must be at least 2");
  if (init_mean.size() != model.dim) throw PreconditionError("initial mean dimension mismatch");
  for (std::size_t n = 0; n < observations.size(); ++n) {
    const double t = static_cast<double>(n + 1) * cfg.dt;
    if (std::abs(observations[n].time - t) > 1e-9 * std::max(1.0, t))
      throw PreconditionError("observation " + std::to_string(n + 1) + " at t=" +
                              csv::num(observations[n].time) + " is off the dt grid");
  }

  FilterRun run;
  run.final_ensemble = sample_initial_ensemble(cfg.n_particles, init_mean, init_cov, cfg.seed);
  run.trace.rows.push_back(make_row(0.0, 0.0, ensemble_stats(run.final_ensemble, model), 0));
  for (std::size_t n = 0; n < observations.size(); ++n) {
    FpfStepResult step = fpf_step(run.final_ensemble, model, cfg, observations[n], n + 1);
    run.trace.rows.push_back(make_row(observations[n].time, observations[n].dz, step.stats, step.n_flagged));
    run.final_ensemble = std::move(step.ensemble);
  }
  return run;
}

void write_trace_csv(std::ostream& os, const FilterTrace& trace) {
  const int d = trace.rows.empty() ? 0 : static_cast<int>(trace.rows.front().mean.size());
  std::vector<std::string> header{"t", "dz"};
  for (int j = 0; j < d; ++j) header.push_back("mean_" + std::to_string(j + 1));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) header.push_back("cov_" + std::to_string(a + 1) + std::to_string(b + 1));
  header.emplace_back("h_hat");
  header.emplace_back("n_flagged");
  csv::row(os, header);
  for (const auto& r : trace.rows) {
    std::vector<std::string> cells{csv::num(r.t), csv::num(r.dz)};
    for (int j = 0; j < d; ++j) cells.push_back(csv::num(r.mean(j)));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) cells.push_back(csv::num(r.cov(a, b)));
    cells.push_back(csv::num(r.h_hat));
    cells.push_back(std::to_string(r.n_flagged));
    csv::row(os, cells);
  }
}

}  // namespace fpf
