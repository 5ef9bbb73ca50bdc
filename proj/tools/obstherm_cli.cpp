#include "obstherm/error.hpp"
#include "obstherm/experiment.hpp"
#include "obstherm/export.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace obstherm;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

struct Overrides {
  std::string config_path;
  std::string preset;
  std::optional<int> sites;
  std::string boundary;
  std::vector<int> theta_indices;
  std::vector<double> angles;
  std::vector<std::string> observables;
  std::optional<double> t_max;
  std::optional<int> steps;
  std::string transient;
  std::string entropy_base;
  std::string output_dir;
  std::optional<double> ote_threshold;
  std::optional<unsigned> threads;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--preset", o.preset, "Hamiltonian preset (kim-huse)");
  cmd->add_option("-L,--sites", o.sites, "number of sites");
  cmd->add_option("--boundary", o.boundary, "periodic or open");
  cmd->add_option("--theta", o.theta_indices, "theta grid indices 1..20");
  cmd->add_option("--angle", o.angles, "initial-state angles in radians");
  cmd->add_option("--observables", o.observables, "observable labels, e.g. X0 Y0 Z0");
  cmd->add_option("--t-max", o.t_max, "final time");
  cmd->add_option("--steps", o.steps, "number of time steps");
  cmd->add_option("--transient", o.transient, "auto or a fixed cut time");
  cmd->add_option("--entropy-base", o.entropy_base, "2 or e");
  cmd->add_option("-o,--output", o.output_dir, "output directory");
  cmd->add_option("--ote-threshold", o.ote_threshold, "flag records whose OTE distance exceeds this");
  cmd->add_option("-j,--threads", o.threads, "worker threads (overrides OBSTHERM_THREADS)");
}

ExperimentConfig build_config(const Overrides& o, ExperimentConfig c) {
  if (!o.config_path.empty()) c = load_config(o.config_path);
  const int sites = o.sites.value_or(c.ising.num_sites);
  if (!o.preset.empty()) c.ising = IsingParams::preset(o.preset, sites);
  c.ising.num_sites = sites;
  if (!o.boundary.empty()) c.ising.boundary = parse_boundary(o.boundary);
  if (!o.theta_indices.empty() || !o.angles.empty()) {
    c.theta_grid.clear();
    for (int m : o.theta_indices) c.theta_grid.push_back(InitialStateSpec::from_grid_index(m));
    for (double a : o.angles) c.theta_grid.push_back(InitialStateSpec::from_angle(a));
  }
  if (!o.observables.empty()) {
    c.observables.clear();
    for (const auto& s : o.observables) c.observables.push_back(ObservableId::parse(s));
  }
  if (o.t_max) c.time_grid.t_max = *o.t_max;
  if (o.steps) c.time_grid.num_steps = *o.steps;
  if (!o.transient.empty()) {
    if (o.transient == "auto") {
      c.transient = {TransientMode::automatic, 0.0};
    } else {
      try {
        c.transient = {TransientMode::fixed, std::stod(o.transient)};
      } catch (const std::exception&) {
        throw ConfigError("--transient must be 'auto' or a number, got '" + o.transient + "'");
      }
    }
  }
  if (!o.entropy_base.empty()) c.entropy_base = parse_entropy_base(o.entropy_base);
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  if (o.ote_threshold) c.ote_threshold = *o.ote_threshold;
  if (o.threads) {
    if (*o.threads == 0) throw ConfigError("--threads must be positive");
    setenv("OBSTHERM_THREADS", std::to_string(*o.threads).c_str(), 1);
  }
  c.validate();
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void print_records(const std::vector<ValidationRecord>& records) {
  std::printf("%-4s %-9s %-10s %-12s %-12s %-12s %-12s %-8s\n", "obs", "theta", "status", "max|gap|", "lambda_E",
              "S_eq", "cut", "orbit");
  for (const auto& r : records) {
    const double rel = std::max(r.orbit.residual_rms[0] / std::max(r.orbit.max_abs_r[0], 1e-300),
                                r.orbit.residual_rms[1] / std::max(r.orbit.max_abs_r[1], 1e-300));
    std::printf("%-4s %-9.6f %-10s %-12.3e %-12.5g %-12.6g %-12.4g %-8.3g\n", r.observable.c_str(), r.theta,
                r.status.c_str(), r.max_abs_gap, r.lambda_e, r.thermo.entropy, r.transient_cut, rel);
    if (!r.message.empty()) std::printf("     %s\n", r.message.c_str());
  }
}

int run_and_export(const ExperimentConfig& config, bool quiet) {
  const auto start = std::chrono::steady_clock::now();
  ValidationRun run = run_validation(config);
  const double wall = seconds_since(start);
  const ExportSummary summary = export_results(run.records, run.trajectories, config, config.output_dir, wall);
  if (!quiet) print_records(run.records);
  std::size_t infeasible = 0;
  for (const auto& r : run.records) {
    if (r.status != "ok") ++infeasible;
  }
  std::fprintf(stderr, "wrote %zu files to %s in %.2f s\n", summary.files.size(), config.output_dir.string().c_str(),
               wall);
  if (!run.records.empty() && infeasible == run.records.size()) {
    std::fprintf(stderr, "error: every record is infeasible or failed\n");
    return kNumerical;
  }
  return kOk;
}

int run_simulate(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Simulator sim(config.ising);
  std::vector<LocalObservable> obs;
  for (const auto& id : config.observables) obs.push_back(id.make(config.ising.num_sites));
  std::vector<TrajectorySeries> all;
  for (const auto& th : config.theta_grid) {
    const StateVector psi0 = prepare_initial_state(th, config.ising.num_sites);
    auto series = sim.run(psi0, obs, config.time_grid, config.entropy_base);
    for (auto& s : series) all.push_back(std::move(s));
  }
  std::vector<ValidationRecord> none;
  const ExportSummary summary = export_results(none, all, config, config.output_dir, seconds_since(start));
  std::fprintf(stderr, "wrote %zu files to %s\n", summary.files.size(), config.output_dir.string().c_str());
  return kOk;
}

int run_huo(const ExperimentConfig& config) {
  const Simulator sim(config.ising);
  const double d = static_cast<double>(sim.hamiltonian().dimension());
  std::printf("D = %.0f, 1/D = %.6e\n", d, 1.0 / d);
  for (const auto& id : config.observables) {
    const LocalObservable obs = id.make(config.ising.num_sites);
    std::printf("%-4s max |<E_n|j,s>|^2 - 1/D| = %.6e\n", obs.label().c_str(),
                huo_unbiasedness(obs, *sim.spectrum()));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observable thermalization of a non-integrable Ising chain"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress the per-record table");

  Overrides sim_o, val_o, sweep_o, huo_o, fig_o;
  auto* simulate = app.add_subcommand("simulate", "write trajectory CSVs");
  add_common_options(simulate, sim_o);
  auto* validate_cmd = app.add_subcommand("validate", "trajectories plus equilibrium validation");
  add_common_options(validate_cmd, val_o);
  auto* sweep = app.add_subcommand("sweep", "validate all 20 grid angles");
  add_common_options(sweep, sweep_o);
  auto* huo = app.add_subcommand("huo-check", "eigenbasis unbiasedness of the observables");
  add_common_options(huo, huo_o);
  auto* figures = app.add_subcommand("export-figures-data", "data behind the standard figures");
  add_common_options(figures, fig_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return run_simulate(build_config(sim_o, {}));
    if (*validate_cmd) return run_and_export(build_config(val_o, {}), quiet);
    if (*sweep) {
      ExperimentConfig base;
      base.theta_grid.clear();
      for (int m = 1; m <= kThetaGridSize; ++m) base.theta_grid.push_back(InitialStateSpec::from_grid_index(m));
      return run_and_export(build_config(sweep_o, base), quiet);
    }
    if (*huo) return run_huo(build_config(huo_o, {}));
    if (*figures) {
      ExperimentConfig base;
      base.output_dir = "obstherm-figures";
      return run_and_export(build_config(fig_o, base), quiet);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
