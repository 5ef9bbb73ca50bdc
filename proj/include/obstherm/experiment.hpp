// experiment.hpp: configuration and the end-to-end pipeline:
// trajectory -> transient cut -> time averages / orbit fit -> equilibrium
// prediction -> OTE metrics -> thermodynamics.

#pragma once

#include "obstherm/equilibrium.hpp"
#include "obstherm/model.hpp"
#include "obstherm/observables.hpp"
#include "obstherm/quantum_core.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace obstherm {

struct ObservableId {
  Axis axis = Axis::z;
  int site = 0;

  std::string label() const;
  // "X0", "z3", ...
  static ObservableId parse(std::string_view text);
  LocalObservable make(int num_sites) const { return LocalObservable(axis, site, num_sites); }

  friend bool operator==(const ObservableId&, const ObservableId&) = default;
};

struct TimeGrid {
  double t_max = 100.0;
  int num_steps = 5000;  // intervals; num_steps + 1 samples including t = 0 and t = t_max

  std::vector<double> times() const;
  double step() const { return t_max / num_steps; }
};

enum class TransientMode { fixed, automatic };

struct TransientSpec {
  TransientMode mode = TransientMode::automatic;
  double value = 0.0;  // cut time in fixed mode
};

struct ExperimentConfig {
  IsingParams ising = IsingParams::kim_huse(10);
  std::vector<InitialStateSpec> theta_grid{InitialStateSpec::from_grid_index(1)};
  std::vector<ObservableId> observables{{Axis::x, 0}, {Axis::y, 0}, {Axis::z, 0}};
  TimeGrid time_grid;
  TransientSpec transient;
  EntropyBase entropy_base = EntropyBase::bits;
  std::filesystem::path output_dir = "obstherm-out";
  std::optional<double> ote_threshold;

  // Throws ConfigError.
  void validate() const;
};

// Owns the Hamiltonian and its spectrum; immutable after construction and
// safe to share between threads.
class Simulator {
 public:
  explicit Simulator(const IsingParams& params);

  const IsingParams& params() const noexcept { return params_; }
  const HermitianOperator& hamiltonian() const noexcept { return hamiltonian_; }
  const std::shared_ptr<const SpectralDecomposition>& spectrum() const noexcept { return spectrum_; }

  // One series per observable over the same grid.
  std::vector<TrajectorySeries> run(const StateVector& psi0, std::span<const LocalObservable> observables,
                                    const TimeGrid& grid, EntropyBase base) const;

 private:
  IsingParams params_;
  HermitianOperator hamiltonian_;
  std::shared_ptr<const SpectralDecomposition> spectrum_;
};

TrajectorySeries run_trajectory(const ExperimentConfig& config, const InitialStateSpec& theta,
                                const ObservableId& observable);

struct TransientCut {
  double time = 0.0;
  bool fallback = false;
  std::string warning;
};

// Fixed mode returns the value. Auto mode: W = 10% of t_max; the reference is
// the standard deviation of S_A over the final window; the cut is the earliest
// t* such that every window [t', t'+W] with t' >= t* has a standard deviation
// at most twice the reference. Cuts at or beyond t_max/2 fall back to t_max/2.
TransientCut detect_transient(const TrajectorySeries& traj, const TransientSpec& spec);

inline constexpr std::size_t kMinOrbitSamples = 10;

struct OrbitFit {
  std::array<std::optional<double>, 2> slope;   // through-origin least squares R = slope * p
  std::array<std::optional<double>, 2> ratio;   // Rbar / pbar
  std::array<double, 2> residual_rms{};
  std::array<double, 2> relative_gap{};         // |slope - ratio| / |ratio|
  std::array<double, 2> max_abs_r{};
  std::array<double, 2> p_mean{};
  std::array<double, 2> r_mean{};
  std::size_t samples = 0;
};

// Uses samples with t > cut. Throws ValidationError with fewer than 10.
OrbitFit orbit_fit(const TrajectorySeries& traj, double transient_cut);

struct ValidationRecord {
  std::string observable;
  double theta = 0.0;
  std::optional<int> grid_index;
  std::string status = "ok";  // ok | infeasible | failed
  std::string message;

  double energy = 0.0;
  double energy_spread = 0.0;
  double transient_cut = 0.0;
  bool transient_fallback = false;

  std::array<double, 2> p_time_avg{};
  std::array<double, 2> r_time_avg{};
  std::array<double, 2> p_eq{};
  double max_abs_gap = 0.0;

  std::array<std::optional<double>, 2> eps_eq;
  std::array<std::optional<double>, 2> eps_de;
  double eps_estimator_gap = 0.0;  // max_j |slope_j - eps_eq_j|
  OrbitFit orbit;

  OteMetrics ote;
  std::size_t window_count = 0;
  std::optional<bool> ote_within_threshold;

  double lambda_e = 0.0;
  double lambda_n = 0.0;
  double partition_z = 0.0;
  bool degenerate = false;
  ObservableThermo thermo;
  double entropy_identity_residual = 0.0;

  std::string trajectory_file;
};

// Full per-trajectory pipeline against a fixed ensemble context.
ValidationRecord validate_trajectory(const TrajectorySeries& traj, const InitialStateSpec& theta,
                                     const DiagonalEnsemble& de, const ExperimentConfig& config);

struct ValidationRun {
  std::vector<ValidationRecord> records;
  std::vector<TrajectorySeries> trajectories;  // parallel to records
  std::shared_ptr<const SpectralDecomposition> spectrum;
};

// Runs every (theta, observable) pair. Work is spread over the worker count
// from OBSTHERM_THREADS (default: hardware concurrency); results do not
// depend on it. Infeasible multipliers are recorded per record.
ValidationRun run_validation(const ExperimentConfig& config);
std::vector<ValidationRecord> validate(const ExperimentConfig& config);

// Worker count from OBSTHERM_THREADS, at least 1.
unsigned worker_count();

}  // namespace obstherm
