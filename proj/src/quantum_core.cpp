#include "obstherm/quantum_core.hpp"

#include "obstherm/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace obstherm {

int sites_for_dimension(Eigen::Index dim) noexcept {
  if (dim <= 0) return -1;
  int sites = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++sites;
  }
  return d == dim ? sites : -1;
}

StateVector::StateVector(Eigen::VectorXcd amplitudes, int num_sites)
    : amplitudes_(std::move(amplitudes)), num_sites_(num_sites) {
  if (num_sites < 0 || num_sites > 30 || amplitudes_.size() != (Eigen::Index{1} << num_sites)) {
    throw DimensionError("StateVector: length " + std::to_string(amplitudes_.size()) + " is not 2^" +
                         std::to_string(num_sites));
  }
  const double n = amplitudes_.norm();
  if (std::abs(n - 1.0) >= kNormTolerance) {
    throw ValidationError("StateVector: norm " + std::to_string(n) + " differs from 1");
  }
}

StateVector StateVector::normalized(Eigen::VectorXcd amplitudes, int num_sites) {
  const double n = amplitudes.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ValidationError("StateVector::normalized: zero or non-finite vector");
  }
  amplitudes /= n;
  return StateVector(std::move(amplitudes), num_sites);
}

StateVector StateVector::basis_state(std::size_t index, int num_sites) {
  if (num_sites < 0 || num_sites > 30) throw DimensionError("StateVector::basis_state: bad site count");
  const Eigen::Index dim = Eigen::Index{1} << num_sites;
  if (static_cast<Eigen::Index>(index) >= dim) {
    throw DimensionError("StateVector::basis_state: index out of range");
  }
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v), num_sites);
}

double hermiticity_defect(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw DimensionError("hermiticity_defect: matrix is not square");
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

HermitianOperator::HermitianOperator(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw DimensionError("HermitianOperator: matrix must be square and non-empty");
  }
  const double defect = hermiticity_defect(entries_);
  if (!(defect < kHermiticityTolerance)) {
    throw ValidationError("HermitianOperator: max |M - M^dagger| = " + std::to_string(defect));
  }
  real_ = (entries_.imag().array() == 0.0).all();
}

Eigen::VectorXcd HermitianOperator::apply(const Eigen::VectorXcd& v) const {
  if (v.size() != dimension()) throw DimensionError("HermitianOperator::apply: dimension mismatch");
  if (real_) {
    const Eigen::MatrixXd re = entries_.real();
    Eigen::VectorXcd out(v.size());
    out.real() = re * v.real();
    out.imag() = re * v.imag();
    return out;
  }
  return entries_ * v;
}

Eigen::MatrixXcd HermitianOperator::apply(const Eigen::MatrixXcd& block) const {
  if (block.rows() != dimension()) throw DimensionError("HermitianOperator::apply: dimension mismatch");
  if (real_) {
    const Eigen::MatrixXd re = entries_.real();
    Eigen::MatrixXcd out(block.rows(), block.cols());
    out.real() = re * block.real();
    out.imag() = re * block.imag();
    return out;
  }
  return entries_ * block;
}

double SpectralDecomposition::residual(const HermitianOperator& op) const {
  if (op.dimension() != dimension()) throw DimensionError("residual: dimension mismatch");
  const Eigen::MatrixXcd r = op.matrix() * eigenvectors - eigenvectors * eigenvalues.asDiagonal();
  const double radius = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  return r.colwise().norm().maxCoeff() / radius;
}

double SpectralDecomposition::unitarity_defect() const {
  const Eigen::MatrixXcd g = eigenvectors.adjoint() * eigenvectors;
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double SpectralDecomposition::reconstruction_error(const HermitianOperator& op) const {
  if (op.dimension() != dimension()) throw DimensionError("reconstruction_error: dimension mismatch");
  const Eigen::MatrixXcd rebuilt = eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
  const double scale = op.matrix().cwiseAbs().maxCoeff();
  const double diff = (rebuilt - op.matrix()).cwiseAbs().maxCoeff();
  return scale > 0.0 ? diff / scale : diff;
}

Eigen::MatrixXcd kron_chain_matrix(std::span<const Eigen::MatrixXcd> factors) {
  if (factors.empty()) throw DimensionError("kron_chain: empty factor list");
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Ones(1, 1);
  for (const auto& f : factors) {
    if (f.rows() != 2 || f.cols() != 2) {
      throw DimensionError("kron_chain: factor is " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                           ", expected 2x2");
    }
    const Eigen::Index n = acc.rows();
    Eigen::MatrixXcd next(2 * n, 2 * n);
    // acc (x) f: the new factor is the least significant bit
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        next.block(2 * a, 2 * b, 2, 2) = acc(a, b) * f;
      }
    }
    acc = std::move(next);
  }
  return acc;
}

HermitianOperator kron_chain(std::span<const Eigen::MatrixXcd> factors) {
  return HermitianOperator(kron_chain_matrix(factors));
}

namespace pauli {
Eigen::MatrixXcd identity() { return Eigen::MatrixXcd::Identity(2, 2); }
Eigen::MatrixXcd x() {
  Eigen::MatrixXcd m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Eigen::MatrixXcd y() {
  Eigen::MatrixXcd m(2, 2);
  m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
  return m;
}
Eigen::MatrixXcd z() {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

SpectralDecomposition diagonalize(const HermitianOperator& op) {
  if (!(hermiticity_defect(op.matrix()) < kHermiticityTolerance)) {
    throw ValidationError("diagonalize: operator is not Hermitian");
  }
  SpectralDecomposition out;
  if (op.is_real()) {
    const Eigen::MatrixXd sym = op.matrix().real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors().cast<Complex>();
    out.real_eigenvectors = true;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(op.matrix(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
    out.eigenvalues = solver.eigenvalues();
    out.eigenvectors = solver.eigenvectors();
  }
  return out;
}

Eigen::VectorXcd energy_coefficients(const Eigen::VectorXcd& psi, const SpectralDecomposition& spec) {
  if (psi.size() != spec.dimension()) throw DimensionError("energy_coefficients: dimension mismatch");
  return spec.eigenvectors.adjoint() * psi;
}

Eigen::VectorXcd evolve_amplitudes(const Eigen::VectorXcd& psi0, const SpectralDecomposition& spec, double t) {
  Eigen::VectorXcd c = energy_coefficients(psi0, spec);
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    c(n) *= std::polar(1.0, -spec.eigenvalues(n) * t);
  }
  return spec.eigenvectors * c;
}

StateVector evolve(const StateVector& psi0, const SpectralDecomposition& spec, double t) {
  if (psi0.dimension() != spec.dimension()) throw DimensionError("evolve: dimension mismatch");
  return StateVector(evolve_amplitudes(psi0.amplitudes(), spec, t), psi0.num_sites());
}

Eigen::MatrixXcd evolve_block(const Eigen::VectorXcd& coefficients, const SpectralDecomposition& spec,
                              std::span<const double> times) {
  if (coefficients.size() != spec.dimension()) throw DimensionError("evolve_block: dimension mismatch");
  const Eigen::Index dim = spec.dimension();
  const auto cols = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXcd phased(dim, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    for (Eigen::Index n = 0; n < dim; ++n) {
      phased(n, k) = coefficients(n) * std::polar(1.0, -spec.eigenvalues(n) * t);
    }
  }
  if (spec.real_eigenvectors) {
    const Eigen::MatrixXd v = spec.eigenvectors.real();
    Eigen::MatrixXcd out(dim, cols);
    out.real() = v * phased.real();
    out.imag() = v * phased.imag();
    return out;
  }
  return spec.eigenvectors * phased;
}

double expectation(const HermitianOperator& op, const StateVector& psi) {
  if (op.dimension() != psi.dimension()) throw DimensionError("expectation: dimension mismatch");
  const Complex value = psi.amplitudes().dot(op.apply(psi.amplitudes()));
  if (!(std::abs(value.imag()) < 1e-10)) {
    throw NumericalError("expectation: imaginary part " + std::to_string(value.imag()));
  }
  return value.real();
}

GapDiagnostic check_nondegenerate_gaps(std::span<const double> eigenvalues, double tol) {
  GapDiagnostic report;
  std::vector<double> levels(eigenvalues.begin(), eigenvalues.end());
  std::sort(levels.begin(), levels.end());
  report.levels = levels.size();
  report.smallest_level_spacing = levels.size() > 1 ? levels[1] - levels[0] : 0.0;

  auto count_close_pairs = [tol](const std::vector<double>& sorted) {
    std::size_t pairs = 0;
    std::size_t lo = 0;
    for (std::size_t hi = 1; hi < sorted.size(); ++hi) {
      while (lo < hi && sorted[hi] - sorted[lo] >= tol) ++lo;
      pairs += hi - lo;
    }
    return pairs;
  };

  for (std::size_t i = 1; i < levels.size(); ++i) {
    report.smallest_level_spacing = std::min(report.smallest_level_spacing, levels[i] - levels[i - 1]);
  }
  report.degenerate_level_pairs = count_close_pairs(levels);

  std::vector<double> gaps;
  gaps.reserve(levels.size() * (levels.size() - (levels.empty() ? 0 : 1)) / 2);
  for (std::size_t n = 0; n < levels.size(); ++n) {
    for (std::size_t k = 0; k < n; ++k) gaps.push_back(levels[n] - levels[k]);
  }
  std::sort(gaps.begin(), gaps.end());
  report.repeated_gap_pairs = count_close_pairs(gaps);
  return report;
}

GapDiagnostic check_nondegenerate_gaps(const SpectralDecomposition& spec, double tol) {
  return check_nondegenerate_gaps(std::span<const double>(spec.eigenvalues.data(), spec.eigenvalues.size()), tol);
}

}  // namespace obstherm
