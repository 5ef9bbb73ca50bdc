// equilibrium.hpp: diagonal and microcanonical ensembles, conditional
// energies, the maximum-observable-entropy solution p_j ∝ exp(-lambda_E eps_j)
// and the derived observable thermodynamics.
//
// All entropies and log Z are natural-log internally; the configured base is
// applied only on output.

#pragma once

#include "obstherm/observables.hpp"
#include "obstherm/quantum_core.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace obstherm {

struct DiagonalEnsemble {
  Eigen::VectorXd weights;  // |c_n|^2, ordered like spectrum->eigenvalues
  std::shared_ptr<const SpectralDecomposition> spectrum;

  // sum_n |c_n|^2 E_n
  double mean_energy() const;
  // sqrt(sum_n |c_n|^2 E_n^2 - E^2)
  double energy_spread() const;
};

DiagonalEnsemble diagonal_weights(const StateVector& psi0, std::shared_ptr<const SpectralDecomposition> spec);

struct MicrocanonicalWindow {
  double center_energy = 0.0;
  double width = 0.0;
  std::vector<Eigen::Index> member_indices;

  std::size_t count() const noexcept { return member_indices.size(); }
};

// Members are exactly the n with E_n in [E - dE/2, E + dE/2]. Throws
// ValidationError if the window is empty.
MicrocanonicalWindow make_microcanonical_window(const SpectralDecomposition& spec, double center, double width);

// <E_n|A_0|E_n> for every eigenstate; <E_n|A_1|E_n> = 1 - that.
Eigen::VectorXd eigenstate_probabilities(const LocalObservable& obs, const SpectralDecomposition& spec);

// p_j^DE = sum_n |c_n|^2 <E_n|A_j|E_n>
std::array<double, 2> diagonal_probabilities(const DiagonalEnsemble& de, const LocalObservable& obs);

// p_j^mc = (1/N) sum_{n in window} <E_n|A_j|E_n>
std::array<double, 2> microcanonical_pj(const MicrocanonicalWindow& window, const LocalObservable& obs,
                                        const SpectralDecomposition& spec);

// Projects psi onto the window eigenstates and renormalises.
StateVector microcanonical_filter(const StateVector& psi, const SpectralDecomposition& spec,
                                  const MicrocanonicalWindow& window);

inline constexpr double kUndefinedProbability = 1e-12;

struct ConditionalEnergy {
  std::array<double, 2> p_de{};
  std::array<double, 2> r_de{};                  // sum_n |c_n|^2 p_j(E_n) E_n
  std::array<std::optional<double>, 2> eps_de;   // empty when p_j^DE < 1e-12
  Eigen::MatrixXd q;                             // q(n, j) = q_{n|j}; column zero when undefined
  double max_normalization_error = 0.0;          // max_j |sum_n q_{n|j} - 1|
  double energy_sum_error = 0.0;                 // |sum_j p_j^DE eps_j^DE - E|
};

ConditionalEnergy eps_conditional(const DiagonalEnsemble& de, const LocalObservable& obs);

struct LagrangeSolution {
  double lambda_e = 0.0;
  bool degenerate = false;  // all eps equal: flat distribution, lambda_E = 0
  double residual = 0.0;    // mean energy at lambda_e minus target E
  int iterations = 0;
};

// ln sum_j exp(-lambda eps_j), evaluated with a log-sum-exp shift.
double log_partition(std::span<const double> eps, double lambda);
// sum_j eps_j exp(-lambda eps_j) / sum_j exp(-lambda eps_j)
double mean_energy(std::span<const double> eps, double lambda);
// p_j = exp(-lambda eps_j) / Z
std::vector<double> exponential_family(std::span<const double> eps, double lambda);

// Closed form lambda_E = ln((eps1 - E)/(E - eps0)) / (eps1 - eps0).
// InfeasibleError unless E lies strictly between eps0 and eps1.
LagrangeSolution lambda_binary(double eps0, double eps1, double energy);

// Safeguarded Newton/bisection on the strictly decreasing mean-energy
// function. InfeasibleError names the feasible open interval.
LagrangeSolution lambda_general(std::span<const double> eps, double energy);

struct EquilibriumPrediction {
  std::vector<double> p_eq;    // zero outside the support
  std::vector<bool> support;   // false where eps_j was undefined
  double lambda_e = 0.0;
  double partition_z = 0.0;
  double log_z = 0.0;
  bool degenerate = false;
  double constraint_residual = 0.0;  // sum_j p_j eps_j - E over the support
};

EquilibriumPrediction predict_equilibrium(std::span<const double> eps, double energy);
EquilibriumPrediction predict_equilibrium(std::span<const std::optional<double>> eps, double energy);

struct OteMetrics {
  std::array<double, 2> eps_de_timeavg{};  // mean_{t > cut} |p_j(t) - p_j^DE|
  std::array<double, 2> eps_mc{};          // |p_j^DE - p_j^mc|
  std::array<double, 2> p_de{};
  std::array<double, 2> p_mc{};
  std::size_t samples_used = 0;
};

// Throws ValidationError if no sample lies after the cut. An empty window
// leaves p_mc and eps_mc as NaN.
OteMetrics ote_metrics(const TrajectorySeries& traj, const DiagonalEnsemble& de, const MicrocanonicalWindow& window,
                       double transient_cut);

// max_{n,j,s} | |<E_n|j,s>|^2 - 1/D |; zero for an exactly unbiased pair of bases.
double huo_unbiasedness(const LocalObservable& obs, const SpectralDecomposition& spec);

struct ObservableThermo {
  double entropy = 0.0;       // S_eq in the configured base
  double entropy_nats = 0.0;  // ln Z + lambda_E E
  double temperature = 0.0;   // 1/lambda_E, +inf when |lambda_E| < 1e-14
  double free_energy = 0.0;   // E - T S (nats); NaN when T is infinite
  bool temperature_infinite = false;
  bool free_energy_defined = true;
};

ObservableThermo observable_thermo(double lambda_e, double log_z, double energy, EntropyBase base);

struct EquilibriumReport {
  std::array<std::optional<double>, 2> eps_eq;
  double lambda_e = 0.0;
  double lambda_n = 0.0;  // ln Z = 1 + lambda_N
  double partition_z = 0.0;
  std::array<double, 2> p_eq{};
  std::array<double, 2> p_time_avg{};
  std::array<std::optional<double>, 2> eps_de;
  std::array<double, 2> ote_eps_de_timeavg{};
  std::array<double, 2> ote_eps_mc{};
  ObservableThermo thermo;
  double entropy_identity_residual = 0.0;  // |-sum p ln p - (ln Z + lambda E)|
  double constraint_residual = 0.0;        // sum_j p_eq_j eps_eq_j - E
  bool degenerate = false;
};

// eps_eq_j = Rbar_j / pbar_j (undefined when pbar_j < 1e-12), then the
// exponential-family prediction, the entropy identity and thermodynamics.
// Propagates InfeasibleError from the multiplier solvers.
EquilibriumReport equilibrium_report(const std::array<double, 2>& p_time_avg, const std::array<double, 2>& r_time_avg,
                                     double energy, const ConditionalEnergy& conditional, const OteMetrics& ote,
                                     EntropyBase base);

}  // namespace obstherm
