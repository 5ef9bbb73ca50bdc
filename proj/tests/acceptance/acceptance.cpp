// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance              run everything
//   acceptance --only <id>  run one criterion (exit status reflects it)
//   acceptance --list

#include "compare.hpp"

#include "obstherm/equilibrium.hpp"
#include "obstherm/error.hpp"
#include "obstherm/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace obstherm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig reference_config() {
  ExperimentConfig c;  // L=10, kim-huse, theta_1, X0 Y0 Z0, t_max 100, 5000 steps, auto transient
  return c;
}

ExperimentConfig sweep_config() {
  ExperimentConfig c = reference_config();
  c.theta_grid.clear();
  for (int m = 1; m <= kThetaGridSize; ++m) c.theta_grid.push_back(InitialStateSpec::from_grid_index(m));
  return c;
}

const ValidationRun& sweep_run() {
  static const ValidationRun run = run_validation(sweep_config());
  return run;
}

std::string record_name(const ValidationRecord& r) {
  return "theta_" + std::to_string(r.grid_index.value_or(0)) + "/" + r.observable;
}

Outcome prediction_accuracy() {
  const auto start = std::chrono::steady_clock::now();
  const ValidationRun run = run_validation(reference_config());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o{true, ""};
  double worst = 0.0;
  for (const auto& r : run.records) {
    if (r.status != "ok") o.pass = false;
    worst = std::max(worst, r.max_abs_gap);
    o.detail += r.observable + " " + fmt("%.2e", r.max_abs_gap) + "; ";
  }
  o.pass = o.pass && worst < 1e-7 && run.records.size() == 3;
  o.detail += "max " + fmt("%.2e", worst) + " (< 1e-7), " + fmt("%.1f", secs) + " s";
  return o;
}

Outcome sweep_robustness() {
  const auto& run = sweep_run();
  std::size_t bad_status = 0;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : run.records) {
    if (r.status != "ok") ++bad_status;
    if (r.max_abs_gap >= worst) {
      worst = r.max_abs_gap;
      worst_name = record_name(r);
    }
  }
  Outcome o;
  o.pass = run.records.size() == 60 && bad_status == 0 && worst < 1e-6;
  o.detail = std::to_string(run.records.size()) + " records, " + std::to_string(bad_status) +
             " infeasible/failed, max gap " + fmt("%.2e", worst) + " at " + worst_name + " (< 1e-6)";
  return o;
}

Outcome orbit_linearity() {
  const auto& run = sweep_run();
  std::size_t failing = 0;
  double worst_gap = 0.0, worst_rms = 0.0;
  std::string gap_at, rms_at;
  for (const auto& r : run.records) {
    bool ok = true;
    for (int j = 0; j < 2; ++j) {
      if (!r.orbit.slope[j] || !r.orbit.ratio[j]) continue;
      const double rms = r.orbit.residual_rms[j] / r.orbit.max_abs_r[j];
      if (r.orbit.relative_gap[j] > worst_gap) {
        worst_gap = r.orbit.relative_gap[j];
        gap_at = record_name(r);
      }
      if (rms > worst_rms) {
        worst_rms = rms;
        rms_at = record_name(r);
      }
      ok = ok && r.orbit.relative_gap[j] < 0.01 && rms < 0.02;
    }
    if (!ok) ++failing;
  }
  Outcome o;
  o.pass = failing == 0;
  o.detail = std::to_string(failing) + "/" + std::to_string(run.records.size()) +
             " records outside tolerance; worst slope gap " + fmt("%.3g", worst_gap) + " at " + gap_at +
             " (< 0.01), worst residual RMS/max|R| " + fmt("%.3g", worst_rms) + " at " + rms_at + " (< 0.02)";
  return o;
}

Outcome entropy_relaxation() {
  const ExperimentConfig c = reference_config();
  const TrajectorySeries t = run_trajectory(c, InitialStateSpec::from_grid_index(1), {Axis::z, 0});
  const TransientCut cut = detect_transient(t, c.transient);
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const auto& s : t.samples) {
    if (!(s.time > cut.time)) continue;
    sum += s.entropy;
    ++n;
  }
  const double mean = sum / double(n);
  for (const auto& s : t.samples) {
    if (s.time > cut.time) sq += (s.entropy - mean) * (s.entropy - mean);
  }
  const double ratio = std::sqrt(sq / double(n)) / mean;
  const double s0 = t.samples.front().entropy;
  Outcome o;
  o.pass = s0 == 0.0 && ratio < 0.05;
  o.detail = "S_A(0) = " + fmt("%g", s0) + ", cut " + fmt("%g", cut.time) + ", post-cut mean " + fmt("%.4f", mean) +
             " bits, std/mean " + fmt("%.4f", ratio) + " (< 0.05)";
  return o;
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  std::string where;
  std::size_t quantities = 0;
  for (const auto& c : oracle::standard_cases()) {
    for (const auto& [name, dev] : oracle::compare(c)) {
      ++quantities;
      if (dev >= worst) {
        worst = dev;
        where = "L=" + std::to_string(c.num_sites) + " " + name;
      }
    }
  }
  Outcome o;
  o.pass = worst < 1e-9;
  o.detail = std::to_string(quantities) + " quantity checks, max deviation " + fmt("%.2e", worst) + " (" + where +
             ", < 1e-9)";
  return o;
}

Outcome conservation() {
  ExperimentConfig c = reference_config();
  c.theta_grid = {InitialStateSpec::from_grid_index(1), InitialStateSpec::from_grid_index(10),
                  InitialStateSpec::from_grid_index(20)};
  const Simulator sim(c.ising);
  std::vector<LocalObservable> obs;
  for (const auto& id : c.observables) obs.push_back(id.make(c.ising.num_sites));
  ConservationReport worst;
  std::size_t samples = 0;
  for (const auto& th : c.theta_grid) {
    for (const auto& t : sim.run(prepare_initial_state(th, 10), obs, c.time_grid, c.entropy_base)) {
      const ConservationReport r = check_conservation(t);
      worst.max_probability_sum_error = std::max(worst.max_probability_sum_error, r.max_probability_sum_error);
      worst.max_r_sum_error = std::max(worst.max_r_sum_error, r.max_r_sum_error);
      worst.max_norm_error = std::max(worst.max_norm_error, r.max_norm_error);
      worst.max_energy_drift = std::max(worst.max_energy_drift, r.max_energy_drift);
      samples += t.size();
    }
  }
  Outcome o;
  o.pass = worst.max_probability_sum_error < 1e-10 && worst.max_r_sum_error < 1e-10 && worst.max_norm_error < 1e-10 &&
           worst.max_energy_drift < 1e-10;
  o.detail = std::to_string(samples) + " samples; |sum p - 1| " + fmt("%.1e", worst.max_probability_sum_error) +
             ", |sum R - E| " + fmt("%.1e", worst.max_r_sum_error) + ", |norm - 1| " +
             fmt("%.1e", worst.max_norm_error) + ", <H> drift " + fmt("%.1e", worst.max_energy_drift) +
             " (all < 1e-10)";
  return o;
}

Outcome huo_limit() {
  const int sites = 4;
  const Eigen::Index d = Eigen::Index{1} << sites;
  Eigen::MatrixXcd f(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      f(a, b) = std::polar(1.0 / std::sqrt(double(d)), 2 * std::numbers::pi * double(a * b) / double(d));
  Eigen::VectorXd e(d);
  for (Eigen::Index n = 0; n < d; ++n) e(n) = -4.0 + 0.55 * double(n) + 0.013 * double(n * n);
  Eigen::MatrixXcd h = f * e.cast<Complex>().asDiagonal() * f.adjoint();
  h = (0.5 * (h + h.adjoint())).eval();
  const HermitianOperator op(h);
  const auto spec = std::make_shared<const SpectralDecomposition>(diagonalize(op));

  double unbiased = 0.0, eps_dev = 0.0, flat_dev = 0.0;
  std::mt19937_64 g(77);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = {nd(g), nd(g)};
    const StateVector psi = StateVector::normalized(v, sites);
    const DiagonalEnsemble de = diagonal_weights(psi, spec);
    for (int site = 0; site < sites; ++site) {
      const LocalObservable z(Axis::z, site, sites);
      unbiased = std::max(unbiased, huo_unbiasedness(z, *spec));
      const ConditionalEnergy c = eps_conditional(de, z);
      for (int j = 0; j < 2; ++j) eps_dev = std::max(eps_dev, std::abs(*c.eps_de[j] - de.mean_energy()));
      const EquilibriumPrediction p = predict_equilibrium(std::span<const std::optional<double>>(c.eps_de),
                                                          de.mean_energy());
      for (int j = 0; j < 2; ++j) flat_dev = std::max(flat_dev, std::abs(p.p_eq[j] - 0.5));
    }
  }
  Outcome o;
  o.pass = unbiased < 1e-12 && eps_dev < 1e-10 && flat_dev < 1e-12;
  o.detail = "unbiasedness " + fmt("%.1e", unbiased) + " (< 1e-12), max |eps_DE - E| " + fmt("%.1e", eps_dev) +
             " (< 1e-10), max |p_eq - 1/2| " + fmt("%.1e", flat_dev) + " (< 1e-12)";
  return o;
}

Outcome exponential_family() {
  std::mt19937_64 g(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_identity = 0.0, worst_fd = 0.0;
  std::size_t infeasible = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 2 + static_cast<int>(u(g) * 5);
    std::vector<double> eps;
    for (int i = 0; i < n; ++i) eps.push_back(-10.0 + 20.0 * u(g));
    const auto [lo, hi] = std::minmax_element(eps.begin(), eps.end());
    if (*hi - *lo < 1e-3) eps.back() = *lo + 1.0;
    const auto [lo2, hi2] = std::minmax_element(eps.begin(), eps.end());
    const double energy = *lo2 + (*hi2 - *lo2) * (0.02 + 0.96 * u(g));
    try {
      const EquilibriumPrediction p = predict_equilibrium(std::span<const double>(eps), energy);
      double s = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < eps.size(); ++i) {
        if (p.p_eq[i] > 0) s -= p.p_eq[i] * std::log(p.p_eq[i]);
        mean += p.p_eq[i] * eps[i];
      }
      worst_identity = std::max(worst_identity, std::abs(s - (p.log_z + p.lambda_e * energy)));
      const double h = 1e-6;
      const double dlnz = (log_partition(eps, p.lambda_e + h) - log_partition(eps, p.lambda_e - h)) / (2 * h);
      worst_fd = std::max(worst_fd, std::abs(dlnz + mean));
    } catch (const InfeasibleError&) {
      ++infeasible;
    }
  }
  Outcome o;
  o.pass = infeasible == 0 && worst_identity < 1e-9 && worst_fd < 1e-6;
  o.detail = "1000 instances, " + std::to_string(infeasible) + " infeasible; max |S - (ln Z + lambda E)| " +
             fmt("%.1e", worst_identity) + " (< 1e-9), max |d ln Z/d lambda + sum p eps| " + fmt("%.1e", worst_fd) +
             " (< 1e-6)";
  return o;
}

Outcome shell_bound() {
  double worst = -1e300;
  std::size_t checked = 0, violations = 0, skipped = 0;
  for (int sites : {8, 10}) {
    ExperimentConfig c = reference_config();
    c.ising = IsingParams::kim_huse(sites);
    const Simulator sim(c.ising);
    std::vector<LocalObservable> obs;
    for (const auto& id : c.observables) obs.push_back(id.make(sites));
    for (int m : {1, 5, 10, 15, 20}) {
      const StateVector psi0 = prepare_initial_state(InitialStateSpec::from_grid_index(m), sites);
      const DiagonalEnsemble de = diagonal_weights(psi0, sim.spectrum());
      const double energy = de.mean_energy(), width = de.energy_spread();
      if (std::abs(energy) < 1e-12) {
        ++skipped;
        continue;
      }
      const MicrocanonicalWindow w = make_microcanonical_window(*sim.spectrum(), energy, width);
      const StateVector filtered = microcanonical_filter(psi0, *sim.spectrum(), w);
      const double eta = 1e-6 * std::abs(energy);
      for (const auto& t : sim.run(filtered, obs, c.time_grid, c.entropy_base)) {
        for (const auto& s : t.samples) {
          for (int j = 0; j < 2; ++j) {
            const double excess = shell_bound_excess(s.probabilities[j], s.r_values[j], energy, width, eta);
            worst = std::max(worst, excess + eta);
            ++checked;
            if (excess > 0.0) ++violations;
          }
        }
      }
    }
  }
  Outcome o;
  o.pass = violations == 0 && checked > 0;
  o.detail = std::to_string(checked) + " (time, j) checks at L=8,10, " + std::to_string(violations) +
             " violations, " + std::to_string(skipped) + " states skipped with E = 0; max excess before slack " +
             fmt("%.2e", worst) + " (<= eta = 1e-6|E|)";
  return o;
}

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {"prediction_accuracy", prediction_accuracy},
      {"sweep_robustness", sweep_robustness},
      {"orbit_linearity", orbit_linearity},
      {"entropy_relaxation", entropy_relaxation},
      {"oracle_equivalence", oracle_equivalence},
      {"conservation", conservation},
      {"huo_limit", huo_limit},
      {"exponential_family", exponential_family},
      {"shell_bound", shell_bound},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<std::string> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = argv[++i];
    } else if (std::strcmp(argv[i], "--list") == 0) {
      for (const auto& c : criteria()) std::printf("%s\n", c.id);
      return 0;
    } else {
      std::fprintf(stderr, "usage: acceptance [--only <id>] [--list]\n");
      return 2;
    }
  }
  int failures = 0, ran = 0;
  for (const auto& c : criteria()) {
    if (only && *only != c.id) continue;
    ++ran;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only->c_str());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
