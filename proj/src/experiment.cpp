#include "obstherm/experiment.hpp"

#include "obstherm/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace obstherm {

namespace {

constexpr Eigen::Index kTimeBlock = 256;

double window_std(const std::vector<ObservableSample>& samples, std::size_t first, std::size_t last) {
  const auto n = static_cast<double>(last - first + 1);
  double mean = 0.0;
  for (std::size_t k = first; k <= last; ++k) mean += samples[k].entropy;
  mean /= n;
  double var = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    const double d = samples[k].entropy - mean;
    var += d * d;
  }
  return std::sqrt(var / n);
}

}  // namespace

std::string ObservableId::label() const { return std::string(1, axis_letter(axis)) + std::to_string(site); }

ObservableId ObservableId::parse(std::string_view text) {
  if (text.size() < 2) throw ConfigError("observable '" + std::string(text) + "' must look like X0, Y3, z1");
  ObservableId id;
  id.axis = parse_axis(text[0]);
  const std::string digits(text.substr(1));
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw ConfigError("observable '" + std::string(text) + "' has a non-numeric site");
  }
  id.site = std::stoi(digits);
  return id;
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(static_cast<std::size_t>(num_steps) + 1);
  for (int k = 0; k <= num_steps; ++k) t[static_cast<std::size_t>(k)] = t_max * k / num_steps;
  return t;
}

void ExperimentConfig::validate() const {
  ising.validate();
  if (ising.num_sites % 2 != 0) {
    throw ConfigError("the antiferromagnetic initial state needs an even number of sites, got " +
                      std::to_string(ising.num_sites));
  }
  if (theta_grid.empty()) throw ConfigError("theta grid is empty");
  for (const auto& th : theta_grid) th.validate();
  if (observables.empty()) throw ConfigError("no observables configured");
  for (const auto& o : observables) {
    if (o.site < 0 || o.site >= ising.num_sites) {
      throw ConfigError("observable " + o.label() + " site outside the chain of length " +
                        std::to_string(ising.num_sites));
    }
  }
  if (!(time_grid.t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (time_grid.num_steps < 2) throw ConfigError("num_steps must be >= 2");
  if (transient.mode == TransientMode::fixed && !(transient.value >= 0.0 && transient.value < time_grid.t_max)) {
    throw ConfigError("fixed transient cut must lie in [0, t_max)");
  }
  if (ote_threshold && !(*ote_threshold > 0.0)) throw ConfigError("ote_threshold must be positive");
}

Simulator::Simulator(const IsingParams& params)
    : params_(params), hamiltonian_(build_hamiltonian(params)) {
  spectrum_ = std::make_shared<const SpectralDecomposition>(diagonalize(hamiltonian_));
}

std::vector<TrajectorySeries> Simulator::run(const StateVector& psi0, std::span<const LocalObservable> observables,
                                             const TimeGrid& grid, EntropyBase base) const {
  if (psi0.dimension() != hamiltonian_.dimension()) throw DimensionError("Simulator::run: dimension mismatch");
  const std::vector<double> times = grid.times();
  const Eigen::VectorXcd h_psi0 = hamiltonian_.apply(psi0.amplitudes());
  const double energy = psi0.amplitudes().dot(h_psi0).real();
  const double spread = std::sqrt(std::max(0.0, h_psi0.squaredNorm() - energy * energy));

  std::vector<TrajectorySeries> out;
  out.reserve(observables.size());
  for (const auto& obs : observables) {
    if (obs.dimension() != psi0.dimension()) throw DimensionError("Simulator::run: observable dimension mismatch");
    TrajectorySeries series{obs, times, {}, energy, spread, base};
    series.samples.reserve(times.size());
    out.push_back(std::move(series));
  }

  const Eigen::VectorXcd coeffs = energy_coefficients(psi0.amplitudes(), *spectrum_);
  const auto total = static_cast<Eigen::Index>(times.size());
  for (Eigen::Index start = 0; start < total; start += kTimeBlock) {
    const Eigen::Index len = std::min(kTimeBlock, total - start);
    const std::span<const double> chunk(times.data() + start, static_cast<std::size_t>(len));
    Eigen::MatrixXcd psi = evolve_block(coeffs, *spectrum_, chunk);
    // t = 0 is the prepared state itself, not its round trip through the eigenbasis
    for (Eigen::Index k = 0; k < len; ++k) {
      if (chunk[static_cast<std::size_t>(k)] == 0.0) psi.col(k) = psi0.amplitudes();
    }
    const Eigen::MatrixXcd h_psi = hamiltonian_.apply(psi);
    for (Eigen::Index k = 0; k < len; ++k) {
      const Eigen::VectorXcd v = psi.col(k);
      const Eigen::VectorXcd hv = h_psi.col(k);
      for (std::size_t o = 0; o < observables.size(); ++o) {
        out[o].samples.push_back(sample_from_vectors(observables[o], v, hv, base, chunk[static_cast<std::size_t>(k)]));
      }
    }
  }
  return out;
}

TrajectorySeries run_trajectory(const ExperimentConfig& config, const InitialStateSpec& theta,
                                const ObservableId& observable) {
  config.validate();
  const Simulator sim(config.ising);
  const StateVector psi0 = prepare_initial_state(theta, config.ising.num_sites);
  const std::vector<LocalObservable> obs{observable.make(config.ising.num_sites)};
  return std::move(sim.run(psi0, obs, config.time_grid, config.entropy_base).front());
}

TransientCut detect_transient(const TrajectorySeries& traj, const TransientSpec& spec) {
  if (traj.samples.empty()) throw ValidationError("detect_transient: empty trajectory");
  TransientCut cut;
  if (spec.mode == TransientMode::fixed) {
    cut.time = spec.value;
    return cut;
  }
  const std::size_t n = traj.samples.size();
  const double t_max = traj.times.back();
  const double dt = n > 1 ? traj.times[1] - traj.times[0] : t_max;
  const auto width = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(0.1 * t_max / dt)));
  const double half = 0.5 * t_max;

  auto fallback = [&](const std::string& why) {
    cut.time = half;
    cut.fallback = true;
    cut.warning = "transient detection fell back to t_max/2: " + why;
    return cut;
  };
  if (n <= width) return fallback("trajectory shorter than one window");

  const std::size_t last_start = n - 1 - width;
  const double threshold = 2.0 * window_std(traj.samples, last_start, n - 1) + 1e-14;
  std::size_t first_ok = last_start + 1;
  for (std::size_t k = last_start + 1; k-- > 0;) {
    if (window_std(traj.samples, k, k + width) <= threshold) {
      first_ok = k;
    } else {
      break;
    }
  }
  if (first_ok > last_start) return fallback("no stable window found");
  cut.time = traj.times[first_ok];
  if (!(cut.time < half)) return fallback("entropy did not stabilise before t_max/2");
  return cut;
}

OrbitFit orbit_fit(const TrajectorySeries& traj, double transient_cut) {
  OrbitFit fit;
  std::array<double, 2> spp{}, spr{}, sp{}, sr{};
  for (const auto& s : traj.samples) {
    if (!(s.time > transient_cut)) continue;
    ++fit.samples;
    for (std::size_t j = 0; j < 2; ++j) {
      const double p = s.probabilities[j];
      const double r = s.r_values[j];
      spp[j] += p * p;
      spr[j] += p * r;
      sp[j] += p;
      sr[j] += r;
      fit.max_abs_r[j] = std::max(fit.max_abs_r[j], std::abs(r));
    }
  }
  if (fit.samples < kMinOrbitSamples) {
    throw ValidationError("orbit_fit: " + std::to_string(fit.samples) + " post-transient samples, need at least " +
                          std::to_string(kMinOrbitSamples));
  }
  const auto count = static_cast<double>(fit.samples);
  for (std::size_t j = 0; j < 2; ++j) {
    fit.p_mean[j] = sp[j] / count;
    fit.r_mean[j] = sr[j] / count;
    if (spp[j] > 0.0) fit.slope[j] = spr[j] / spp[j];
    if (fit.p_mean[j] >= kUndefinedProbability) fit.ratio[j] = fit.r_mean[j] / fit.p_mean[j];
  }
  std::array<double, 2> sq{};
  for (const auto& s : traj.samples) {
    if (!(s.time > transient_cut)) continue;
    for (std::size_t j = 0; j < 2; ++j) {
      const double model = fit.slope[j] ? *fit.slope[j] * s.probabilities[j] : 0.0;
      const double d = s.r_values[j] - model;
      sq[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < 2; ++j) {
    fit.residual_rms[j] = std::sqrt(sq[j] / count);
    if (fit.slope[j] && fit.ratio[j]) {
      const double denom = std::abs(*fit.ratio[j]);
      fit.relative_gap[j] = denom > 0.0 ? std::abs(*fit.slope[j] - *fit.ratio[j]) / denom
                                        : std::abs(*fit.slope[j] - *fit.ratio[j]);
    }
  }
  return fit;
}

ValidationRecord validate_trajectory(const TrajectorySeries& traj, const InitialStateSpec& theta,
                                     const DiagonalEnsemble& de, const ExperimentConfig& config) {
  ValidationRecord rec;
  rec.observable = traj.observable.label();
  rec.theta = theta.theta;
  rec.grid_index = theta.grid_index;
  rec.energy = traj.energy;
  rec.energy_spread = traj.energy_spread;

  const TransientCut cut = detect_transient(traj, config.transient);
  rec.transient_cut = cut.time;
  rec.transient_fallback = cut.fallback;
  if (cut.fallback) rec.message = cut.warning;

  rec.orbit = orbit_fit(traj, cut.time);
  rec.p_time_avg = rec.orbit.p_mean;
  rec.r_time_avg = rec.orbit.r_mean;

  const SpectralDecomposition& spec = *de.spectrum;
  MicrocanonicalWindow window{traj.energy, traj.energy_spread, {}};
  try {
    window = make_microcanonical_window(spec, traj.energy, traj.energy_spread);
  } catch (const ValidationError& e) {
    // small chains: the shell can fall between levels
    if (!rec.message.empty()) rec.message += "; ";
    rec.message += e.what();
  }
  rec.window_count = window.count();
  rec.ote = ote_metrics(traj, de, window, cut.time);
  if (config.ote_threshold) {
    double worst = std::max(rec.ote.eps_de_timeavg[0], rec.ote.eps_de_timeavg[1]);
    for (double e : rec.ote.eps_mc) {
      if (std::isfinite(e)) worst = std::max(worst, e);
    }
    rec.ote_within_threshold = worst <= *config.ote_threshold;
  }
  const ConditionalEnergy cond = eps_conditional(de, traj.observable);
  rec.eps_de = cond.eps_de;

  for (std::size_t j = 0; j < 2; ++j) {
    if (rec.p_time_avg[j] >= kUndefinedProbability) rec.eps_eq[j] = rec.r_time_avg[j] / rec.p_time_avg[j];
  }
  for (std::size_t j = 0; j < 2; ++j) {
    if (rec.orbit.slope[j] && rec.eps_eq[j]) {
      rec.eps_estimator_gap = std::max(rec.eps_estimator_gap, std::abs(*rec.orbit.slope[j] - *rec.eps_eq[j]));
    }
  }

  try {
    const EquilibriumReport rep =
        equilibrium_report(rec.p_time_avg, rec.r_time_avg, traj.energy, cond, rec.ote, config.entropy_base);
    rec.p_eq = rep.p_eq;
    rec.lambda_e = rep.lambda_e;
    rec.lambda_n = rep.lambda_n;
    rec.partition_z = rep.partition_z;
    rec.degenerate = rep.degenerate;
    rec.thermo = rep.thermo;
    rec.entropy_identity_residual = rep.entropy_identity_residual;
    rec.max_abs_gap = std::max(std::abs(rec.p_time_avg[0] - rec.p_eq[0]), std::abs(rec.p_time_avg[1] - rec.p_eq[1]));
  } catch (const InfeasibleError& e) {
    rec.status = "infeasible";
    rec.message = e.what();
  }
  return rec;
}

unsigned worker_count() {
  if (const char* env = std::getenv("OBSTHERM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ValidationRun run_validation(const ExperimentConfig& config) {
  config.validate();
  const Simulator sim(config.ising);
  const int sites = config.ising.num_sites;
  std::vector<LocalObservable> observables;
  for (const auto& id : config.observables) observables.push_back(id.make(sites));

  const std::size_t jobs = config.theta_grid.size();
  const std::size_t per_job = observables.size();
  ValidationRun run;
  run.spectrum = sim.spectrum();
  run.records.resize(jobs * per_job);
  run.trajectories.reserve(jobs * per_job);
  std::vector<std::vector<TrajectorySeries>> series(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t job = next++; job < jobs; job = next++) {
      try {
        const InitialStateSpec& theta = config.theta_grid[job];
        const StateVector psi0 = prepare_initial_state(theta, sites);
        const DiagonalEnsemble de = diagonal_weights(psi0, sim.spectrum());
        series[job] = sim.run(psi0, observables, config.time_grid, config.entropy_base);
        for (std::size_t o = 0; o < per_job; ++o) {
          run.records[job * per_job + o] = validate_trajectory(series[job][o], theta, de, config);
        }
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };

  const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(worker_count(), jobs));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (auto& s : series) {
    for (auto& t : s) run.trajectories.push_back(std::move(t));
  }
  return run;
}

std::vector<ValidationRecord> validate(const ExperimentConfig& config) { return run_validation(config).records; }

}  // namespace obstherm
