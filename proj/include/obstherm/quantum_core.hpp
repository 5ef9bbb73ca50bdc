// quantum_core.hpp: dense state vectors, Hermitian operators, spectral
// decomposition and exact time evolution on a 2^L dimensional spin basis.
//
// Basis convention: |b_0 b_1 ... b_{L-1}>, b_0 is the most significant bit of
// the basis index, b = 0 is the +1 eigenstate of sigma_z. Units: hbar = 1.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace obstherm {

using Complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermiticityTolerance = 1e-12;

// Returns L such that 2^L == dim, or -1 if dim is not a power of two.
int sites_for_dimension(Eigen::Index dim) noexcept;

class StateVector {
 public:
  // Throws DimensionError unless amplitudes.size() == 2^num_sites, and
  // ValidationError unless the norm is 1 within kNormTolerance.
  StateVector(Eigen::VectorXcd amplitudes, int num_sites);

  // Rescales a nonzero vector to unit norm.
  static StateVector normalized(Eigen::VectorXcd amplitudes, int num_sites);
  static StateVector basis_state(std::size_t index, int num_sites);

  const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
  int num_sites() const noexcept { return num_sites_; }
  Eigen::Index dimension() const noexcept { return amplitudes_.size(); }
  double norm() const { return amplitudes_.norm(); }

 private:
  Eigen::VectorXcd amplitudes_;
  int num_sites_;
};

class HermitianOperator {
 public:
  // Throws DimensionError for a non-square matrix and ValidationError when
  // max |M - M^dagger| >= kHermiticityTolerance.
  explicit HermitianOperator(Eigen::MatrixXcd entries);

  const Eigen::MatrixXcd& matrix() const noexcept { return entries_; }
  Eigen::Index dimension() const noexcept { return entries_.rows(); }
  // True when every entry has an exactly zero imaginary part.
  bool is_real() const noexcept { return real_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& block) const;

 private:
  Eigen::MatrixXcd entries_;
  bool real_;
};

double hermiticity_defect(const Eigen::MatrixXcd& m);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXcd eigenvectors;  // columns are eigenstates
  bool real_eigenvectors = false;

  Eigen::Index dimension() const noexcept { return eigenvalues.size(); }

  // max_n |(H V - V Lambda)_{:,n}| / spectral radius
  double residual(const HermitianOperator& op) const;
  // max |V^dagger V - I|
  double unitarity_defect() const;
  // max |V Lambda V^dagger - H| / max |H|
  double reconstruction_error(const HermitianOperator& op) const;
};

// Tensor product of 2x2 factors, site 0 = leftmost factor = most significant
// bit. The raw form accepts any 2x2 complex factors.
Eigen::MatrixXcd kron_chain_matrix(std::span<const Eigen::MatrixXcd> factors);
HermitianOperator kron_chain(std::span<const Eigen::MatrixXcd> factors);

namespace pauli {
Eigen::MatrixXcd identity();
Eigen::MatrixXcd x();
Eigen::MatrixXcd y();
Eigen::MatrixXcd z();
}  // namespace pauli

// Deterministic for a fixed input. Throws ValidationError for non-Hermitian
// input (already excluded by HermitianOperator) and NumericalError if the
// solver does not converge.
SpectralDecomposition diagonalize(const HermitianOperator& op);

// Energy-basis coefficients c_n = <E_n|psi>.
Eigen::VectorXcd energy_coefficients(const Eigen::VectorXcd& psi, const SpectralDecomposition& spec);

// Linear kernel: sum_n c_n e^{-i E_n t} |E_n> without renormalisation.
Eigen::VectorXcd evolve_amplitudes(const Eigen::VectorXcd& psi0, const SpectralDecomposition& spec, double t);

StateVector evolve(const StateVector& psi0, const SpectralDecomposition& spec, double t);

// Evolved states for several times at once, one column per time. The
// coefficients are taken in the energy basis so the batch is a single
// matrix product.
Eigen::MatrixXcd evolve_block(const Eigen::VectorXcd& coefficients, const SpectralDecomposition& spec,
                              std::span<const double> times);

// Re <psi|M|psi>. Throws NumericalError if |Im| >= 1e-10.
double expectation(const HermitianOperator& op, const StateVector& psi);

struct GapDiagnostic {
  std::size_t levels = 0;
  std::size_t degenerate_level_pairs = 0;  // pairs n<k with |E_n - E_k| < tol
  std::size_t repeated_gap_pairs = 0;      // pairs of distinct gaps closer than tol
  double smallest_level_spacing = 0.0;

  bool gaps_unique() const noexcept { return degenerate_level_pairs == 0 && repeated_gap_pairs == 0; }
};

// Purely diagnostic; never throws for finite input.
GapDiagnostic check_nondegenerate_gaps(std::span<const double> eigenvalues, double tol);
GapDiagnostic check_nondegenerate_gaps(const SpectralDecomposition& spec, double tol);

}  // namespace obstherm
