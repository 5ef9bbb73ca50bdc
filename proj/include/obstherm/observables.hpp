// observables.hpp: single-site Pauli observables, their coarse-grained
// projectors A_j = (I + (-1)^j sigma)/2, and per-sample statistics
// p_j = <A_j>, R_j = Re <psi|A_j H|psi>, S_A = -sum p_j log p_j.

#pragma once

#include "obstherm/quantum_core.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace obstherm {

enum class Axis { x, y, z };

char axis_letter(Axis a) noexcept;
Axis parse_axis(char c);

enum class EntropyBase { bits, nats };

std::string_view to_string(EntropyBase b) noexcept;
EntropyBase parse_entropy_base(std::string_view text);
// ln 2 for bits, 1 for nats
double log_base_factor(EntropyBase b) noexcept;

class LocalObservable {
 public:
  static constexpr std::size_t kOutcomes = 2;
  static constexpr std::array<double, kOutcomes> kEigenvalues{+1.0, -1.0};

  // Throws DimensionError if site is not in [0, num_sites).
  LocalObservable(Axis axis, int site, int num_sites);

  Axis axis() const noexcept { return axis_; }
  int site() const noexcept { return site_; }
  int num_sites() const noexcept { return num_sites_; }
  Eigen::Index dimension() const noexcept { return Eigen::Index{1} << num_sites_; }
  // d_j = Tr A_j = 2^{L-1}
  std::size_t degeneracy() const noexcept { return std::size_t{1} << (num_sites_ - 1); }
  // "X0", "Y3", ...
  std::string label() const;

  // Dense operators, built on demand from kron_chain.
  HermitianOperator pauli_operator() const;
  HermitianOperator projector(int j) const;

  // sigma_{axis,site} applied by bit manipulation, O(D) per vector.
  Eigen::VectorXcd apply_pauli(const Eigen::VectorXcd& v) const;
  Eigen::MatrixXcd apply_pauli(const Eigen::MatrixXcd& block) const;
  Eigen::VectorXcd apply_projector(int j, const Eigen::VectorXcd& v) const;

  // Columns of the observable's computational eigenbasis |j,s>: the single
  // site is rotated into the sigma eigenbasis, other sites stay in Z basis.
  // Column index = basis index with the site bit read as j.
  Eigen::MatrixXcd eigenbasis() const;

 private:
  Axis axis_;
  int site_;
  int num_sites_;
};

LocalObservable make_local_observable(Axis axis, int site, int num_sites);

struct ObservableSample {
  double time = 0.0;
  std::array<double, 2> probabilities{};
  std::array<double, 2> r_values{};
  double entropy = 0.0;  // in the configured base
  double energy = 0.0;   // Re <psi|H|psi> at this sample
  double norm = 1.0;
};

struct TrajectorySeries {
  LocalObservable observable;
  std::vector<double> times;
  std::vector<ObservableSample> samples;
  double energy = 0.0;         // <psi0|H|psi0>
  double energy_spread = 0.0;  // sqrt(<H^2> - <H>^2) in psi0
  EntropyBase entropy_base = EntropyBase::bits;

  std::size_t size() const noexcept { return samples.size(); }
  double t_max() const { return times.empty() ? 0.0 : times.back(); }
};

// Max deviations used by the conservation checks.
struct ConservationReport {
  double max_probability_sum_error = 0.0;  // |p0 + p1 - 1|
  double max_r_sum_error = 0.0;            // |R0 + R1 - E|
  double max_norm_error = 0.0;             // | |psi| - 1 |
  double max_energy_drift = 0.0;           // |E(t) - E(0)|
  double max_grid_irregularity = 0.0;      // |dt_k - dt_0|
};

ConservationReport check_conservation(const TrajectorySeries& traj);

// 0 log 0 := 0. Throws ValidationError for an entry below -1e-12 or a sum
// off by more than 1e-10.
double shannon_entropy(std::span<const double> p, EntropyBase base = EntropyBase::bits);

// Sample from already-computed psi and H psi. Throws DimensionError on size
// mismatch and NumericalError if a probability leaves [-1e-12, 1 + 1e-12].
ObservableSample sample_from_vectors(const LocalObservable& obs, const Eigen::VectorXcd& psi,
                                     const Eigen::VectorXcd& h_psi, EntropyBase base, double time = 0.0);

ObservableSample sample_statistics(const LocalObservable& obs, const StateVector& psi, const HermitianOperator& h,
                                   EntropyBase base = EntropyBase::bits);

// <A o H> - <A><H> through the Jordan product, evaluated as
// (<psi|A (H psi)> + <psi|H (A psi)>)/2 - <A><H>.
double jordan_covariance(const HermitianOperator& a, const HermitianOperator& h, const StateVector& psi);

// Cov(A_j, H) = R_j - p_j E, cross-checked against jordan_covariance within
// 1e-10 (NumericalError otherwise).
double covariance(const HermitianOperator& projector, const HermitianOperator& h, const StateVector& psi);

// Energy-shell bound |R_j/E - p_j| <= (dE / 2|E|) p_j + eta. Returns the
// amount by which the left side exceeds the right side (<= 0 means it holds).
double shell_bound_excess(double p, double r, double energy, double energy_width, double eta);

}  // namespace obstherm
