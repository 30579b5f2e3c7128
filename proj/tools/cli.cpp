#include "cli.hpp"

#include "config.hpp"

#include "fpf/csv.hpp"
#include "fpf/divergence.hpp"
#include "fpf/error.hpp"
#include "fpf/filter.hpp"
#include "fpf/reference.hpp"
#include "fpf/verify.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace fpf::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string obs;
  std::string out;
  std::string suite;
  std::uint64_t verify_seed = 20240611;
};

struct Inputs {
  std::vector<ObservationRecord> obs;
  std::optional<TruthPath> truth;
};

struct Context {
  ExperimentConfig cfg;
  fs::path dir;
  std::ostream& out;
};

Context open_context(const Options& o, std::ostream& out) {
  Context c{load_experiment(IniFile::load(o.config)), {}, out};
  const auto issues = validate_model(c.cfg.model);
  if (!issues.empty()) throw PreconditionError("model '" + c.cfg.model_name + "': " + issues.front());
  c.dir = o.out.empty() ? fs::path(c.cfg.out_dir) : fs::path(o.out);
  fs::create_directories(c.dir);
  return c;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

TruthPath simulate(const ExperimentConfig& c) {
  return simulate_truth(c.model, c.x0, require(c.t_end, "run", "t_end"), require(c.dt, "run", "dt"),
                        require(c.seed_truth, "seeds", "truth"));
}

Inputs load_inputs(const ExperimentConfig& c, const std::string& obs_path) {
  Inputs in;
  require(c.dt, "run", "dt");
  if (!obs_path.empty()) {
    std::ifstream f(obs_path);
    if (!f) throw ConfigError("cannot open observation file '" + obs_path + "'");
    in.obs = read_observations_csv(f);
    return in;
  }
  in.truth = simulate(c);
  in.obs = synthesize_observations(*in.truth, c.model, require(c.seed_obs, "seeds", "obs"));
  return in;
}

FilterConfig filter_config(const ExperimentConfig& c) {
  FilterConfig f = c.filter;
  f.dt = *c.dt;
  f.n_particles = require(c.n_particles, "filter", "n_particles");
  f.seed = require(c.seed_filter, "seeds", "filter");
  return f;
}

std::vector<double> trace_times(const std::vector<ObservationRecord>& obs) {
  std::vector<double> t{0.0};
  for (const auto& r : obs) t.push_back(r.time);
  return t;
}

// ---- commands ----------------------------------------------------------------

int cmd_simulate(const Options& o, std::ostream& out) {
  Context ctx = open_context(o, out);
  const TruthPath truth = simulate(ctx.cfg);
  const auto obs = synthesize_observations(truth, ctx.cfg.model, require(ctx.cfg.seed_obs, "seeds", "obs"));
  auto tf = open_output(ctx.dir / "truth.csv");
  write_truth_csv(tf, truth);
  auto of = open_output(ctx.dir / "obs.csv");
  write_observations_csv(of, obs);
  out << "wrote " << (ctx.dir / "truth.csv").string() << " (" << truth.times.size() << " rows), "
      << (ctx.dir / "obs.csv").string() << " (" << obs.size() << " rows)\n";
  return kOk;
}

int cmd_filter(const Options& o, std::ostream& out) {
  Context ctx = open_context(o, out);
  const Inputs in = load_inputs(ctx.cfg, o.obs);
  const FilterRun run = run_filter(ctx.cfg.model, in.obs, filter_config(ctx.cfg), ctx.cfg.init_mean, ctx.cfg.init_cov);
  auto f = open_output(ctx.dir / "fpf_trace.csv");
  write_trace_csv(f, run.trace);
  std::size_t flagged = 0;
  for (const auto& r : run.trace.rows) flagged += r.n_flagged;
  out << "wrote " << (ctx.dir / "fpf_trace.csv").string() << " (" << run.trace.rows.size() << " rows, " << flagged
      << " flagged)\n";
  return kOk;
}

struct Track {
  std::string name;
  std::vector<Vec> mean;
  std::vector<Vec> var;  // diagonal of the covariance
};

double rmse(const Track& a, const Track& b) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 1; k < a.mean.size() && k < b.mean.size(); ++k, ++n) s += (a.mean[k] - b.mean[k]).squaredNorm();
  return n ? std::sqrt(s / n) : 0.0;
}

int cmd_compare(const Options& o, std::ostream& out) {
  Context ctx = open_context(o, out);
  const ExperimentConfig& c = ctx.cfg;
  const SdeModel& model = c.model;
  const int d = model.dim;
  const Inputs in = load_inputs(c, o.obs);
  const FilterConfig fc = filter_config(c);
  const double dt = fc.dt;
  const auto times = trace_times(in.obs);

  std::vector<Track> tracks;
  const FilterRun fpf = run_filter(model, in.obs, fc, c.init_mean, c.init_cov);
  Track ft{"fpf", {}, {}};
  std::size_t flagged = 0;
  for (const auto& r : fpf.trace.rows) {
    ft.mean.push_back(r.mean);
    ft.var.push_back(r.cov.diagonal());
    flagged += r.n_flagged;
  }
  tracks.push_back(ft);

  std::optional<std::size_t> kb_index;
  if (model.linear_drift && model.affine_obs) {
    const auto kb = run_kalman_bucy(model, in.obs, dt, c.init_mean, c.init_cov);
    Track t{"kb", {}, {}};
    for (const auto& s : kb) {
      t.mean.push_back(s.mean);
      t.var.push_back(s.cov.diagonal());
    }
    kb_index = tracks.size();
    tracks.push_back(t);
    auto f = open_output(ctx.dir / "kalman.csv");
    write_kalman_csv(f, times, kb);
  }

  // The bootstrap filter draws from the stream family seeded filter + 1.
  BootstrapState pf = bootstrap_init(c.pf_particles > 0 ? c.pf_particles : fc.n_particles, c.init_mean, c.init_cov,
                                     fc.seed + 1);
  Track pt{"pf", {weighted_mean(pf.ensemble.states, pf.weights)}, {weighted_cov(pf.ensemble.states, pf.weights).diagonal()}};
  for (const auto& r : in.obs) {
    pf = bootstrap_pf_step(pf, model, dt, r.dz, fc.exec);
    pt.mean.push_back(weighted_mean(pf.ensemble.states, pf.weights));
    pt.var.push_back(weighted_cov(pf.ensemble.states, pf.weights).diagonal());
  }
  tracks.push_back(pt);

  std::optional<std::size_t> grid_index;
  std::optional<GridDensity> grid;
  if (d == 1) {
    grid = GridDensity::gaussian(c.grid_lo, c.grid_hi, c.grid_n, c.init_mean(0), c.init_cov(0, 0));
    Track gt{"grid", {Vec::Constant(1, grid->mean())}, {Vec::Constant(1, grid->variance())}};
    for (const auto& r : in.obs) {
      grid = kushner_grid_step(*grid, model, dt, r.dz);
      gt.mean.push_back(Vec::Constant(1, grid->mean()));
      gt.var.push_back(Vec::Constant(1, grid->variance()));
    }
    grid_index = tracks.size();
    tracks.push_back(gt);
    auto f = open_output(ctx.dir / "grid_final.csv");
    write_grid_csv(f, *grid);
  }

  {
    auto f = open_output(ctx.dir / "compare.csv");
    auto suffix = [d](int j) { return d == 1 ? std::string() : "_" + std::to_string(j + 1); };
    std::vector<std::string> header{"t"};
    if (in.truth)
      for (int j = 0; j < d; ++j) header.push_back("truth" + suffix(j));
    for (const auto& t : tracks)
      for (int j = 0; j < d; ++j) {
        header.push_back(t.name + "_mean" + suffix(j));
        header.push_back(t.name + "_var" + suffix(j));
      }
    csv::row(f, header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::vector<std::string> cells{csv::num(times[k])};
      if (in.truth)
        for (int j = 0; j < d; ++j) cells.push_back(csv::num(in.truth->states(static_cast<Eigen::Index>(k), j)));
      for (const auto& t : tracks)
        for (int j = 0; j < d; ++j) {
          cells.push_back(csv::num(t.mean[k](j)));
          cells.push_back(csv::num(t.var[k](j)));
        }
      csv::row(f, cells);
    }
  }

  auto summary = open_output(ctx.dir / "summary.txt");
  summary << "model=" << c.model_name << "\n"
          << "gain=" << to_string(fc.gain_method) << "\n"
          << "n_particles=" << fc.n_particles << "\n"
          << "steps=" << in.obs.size() << "\n"
          << "fpf_flagged_total=" << flagged << "\n"
          << "pf_resample_count=" << pf.resample_count << "\n";
  const std::size_t fpf_i = 0, pf_i = kb_index ? 2 : 1;
  for (std::optional<std::size_t> ref : {kb_index, grid_index}) {
    if (!ref) continue;
    for (std::size_t i : {fpf_i, pf_i})
      summary << tracks[i].name << "_mean_rmse_vs_" << tracks[*ref].name << "=" << csv::num(rmse(tracks[i], tracks[*ref]))
              << "\n";
  }
  if (in.truth) {
    Track tt{"truth", {}, {}};
    for (Eigen::Index k = 0; k < in.truth->states.rows(); ++k) tt.mean.push_back(in.truth->states.row(k).transpose());
    for (std::size_t i = 0; i < tracks.size(); ++i)
      summary << tracks[i].name << "_mean_rmse_vs_truth=" << csv::num(rmse(tracks[i], tt)) << "\n";
  }
  if (grid) {
    const GridDensity kde = kde_density(fpf.final_ensemble, grid->lo, grid->hi, grid->n, std::nullopt, fc.exec);
    std::vector<DivergenceRow> rows;
    for (const auto& g : generator_registry()) {
      const double v = f_divergence(kde, *grid, g).value;
      rows.push_back({times.back(), g.name, v});
      summary << "div_" << g.name << "_fpf_vs_grid=" << csv::num(v) << "\n";
    }
    auto f = open_output(ctx.dir / "divergence.csv");
    write_divergence_csv(f, rows);
  }
  out << "wrote compare.csv and summary.txt to " << ctx.dir.string() << "\n";
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const auto rows = run_verify_suite(o.suite, o.verify_seed);
  write_check_csv(out, rows);
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    auto f = open_output(fs::path(o.out) / ("verify_" + o.suite + ".csv"));
    write_check_csv(f, rows);
  }
  for (const auto& r : rows)
    if (!r.pass) return kFailure;
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback particle filter lab"};
  app.name("fpf-lab");
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment configuration file")->required();
    sub->add_option("--obs", o.obs, "Observation CSV (t,y,dz); simulated from the config when omitted");
    sub->add_option("--out", o.out, "Output directory; overrides [output] dir");
  };
  CLI::App* simulate = app.add_subcommand("simulate", "Write truth.csv and obs.csv");
  simulate->add_option("--config", o.config, "Experiment configuration file")->required();
  simulate->add_option("--out", o.out, "Output directory; overrides [output] dir");
  CLI::App* filter = app.add_subcommand("filter", "Run the feedback particle filter, write fpf_trace.csv");
  add_common(filter);
  CLI::App* compare = app.add_subcommand("compare", "Run FPF against the reference filters");
  add_common(compare);
  CLI::App* verify = app.add_subcommand("verify", "Run an identity check suite, CSV to stdout");
  verify->add_option("suite,--suite", o.suite, "Suite name")->required();
  verify->add_option("--out", o.out, "Also write verify_<suite>.csv here");
  verify->add_option("--seed", o.verify_seed, "Probe seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(o, out);
    if (*filter) return cmd_filter(o, out);
    if (*compare) return cmd_compare(o, out);
    return cmd_verify(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kPrecondition;
  } catch (const AdmissibilityError& e) {
    err << "filter aborted: " << e.what() << "\n";
    return kRuntime;
  } catch (const NumericalError& e) {
    err << "filter aborted: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace fpf::cli
