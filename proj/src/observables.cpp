#include "obstherm/observables.hpp"

#include "obstherm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace obstherm {

char axis_letter(Axis a) noexcept {
  switch (a) {
    case Axis::x:
      return 'X';
    case Axis::y:
      return 'Y';
    case Axis::z:
      return 'Z';
  }
  return '?';
}

Axis parse_axis(char c) {
  switch (c) {
    case 'x':
    case 'X':
      return Axis::x;
    case 'y':
    case 'Y':
      return Axis::y;
    case 'z':
    case 'Z':
      return Axis::z;
    default:
      throw ConfigError(std::string("unknown axis '") + c + "'");
  }
}

std::string_view to_string(EntropyBase b) noexcept { return b == EntropyBase::bits ? "2" : "e"; }

EntropyBase parse_entropy_base(std::string_view text) {
  if (text == "2" || text == "bits") return EntropyBase::bits;
  if (text == "e" || text == "nats") return EntropyBase::nats;
  throw ConfigError("entropy base must be 2 or e, got '" + std::string(text) + "'");
}

double log_base_factor(EntropyBase b) noexcept { return b == EntropyBase::bits ? std::numbers::ln2 : 1.0; }

LocalObservable::LocalObservable(Axis axis, int site, int num_sites)
    : axis_(axis), site_(site), num_sites_(num_sites) {
  if (num_sites < 1 || num_sites > 30) throw DimensionError("LocalObservable: bad site count");
  if (site < 0 || site >= num_sites) {
    throw DimensionError("LocalObservable: site " + std::to_string(site) + " outside 0.." +
                         std::to_string(num_sites - 1));
  }
}

std::string LocalObservable::label() const { return std::string(1, axis_letter(axis_)) + std::to_string(site_); }

HermitianOperator LocalObservable::pauli_operator() const {
  std::vector<Eigen::MatrixXcd> factors(static_cast<std::size_t>(num_sites_), pauli::identity());
  switch (axis_) {
    case Axis::x:
      factors[static_cast<std::size_t>(site_)] = pauli::x();
      break;
    case Axis::y:
      factors[static_cast<std::size_t>(site_)] = pauli::y();
      break;
    case Axis::z:
      factors[static_cast<std::size_t>(site_)] = pauli::z();
      break;
  }
  return kron_chain(factors);
}

HermitianOperator LocalObservable::projector(int j) const {
  if (j != 0 && j != 1) throw DimensionError("LocalObservable::projector: outcome index must be 0 or 1");
  const double sign = j == 0 ? 1.0 : -1.0;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dimension(), dimension());
  return HermitianOperator(0.5 * (id + sign * pauli_operator().matrix()));
}

Eigen::MatrixXcd LocalObservable::apply_pauli(const Eigen::MatrixXcd& block) const {
  if (block.rows() != dimension()) throw DimensionError("LocalObservable::apply_pauli: dimension mismatch");
  const Eigen::Index mask = Eigen::Index{1} << (num_sites_ - 1 - site_);
  Eigen::MatrixXcd out(block.rows(), block.cols());
  const Complex i_unit(0.0, 1.0);
  for (Eigen::Index s = 0; s < block.rows(); ++s) {
    const bool up = (s & mask) == 0;
    switch (axis_) {
      case Axis::z:
        out.row(s) = up ? block.row(s) : Eigen::RowVectorXcd(-block.row(s));
        break;
      case Axis::x:
        out.row(s) = block.row(s ^ mask);
        break;
      case Axis::y:
        // Y|0> = i|1>, Y|1> = -i|0>
        out.row(s) = (up ? -i_unit : i_unit) * block.row(s ^ mask);
        break;
    }
  }
  return out;
}

Eigen::VectorXcd LocalObservable::apply_pauli(const Eigen::VectorXcd& v) const {
  const Eigen::MatrixXcd as_block = v;
  return apply_pauli(as_block).col(0);
}

Eigen::VectorXcd LocalObservable::apply_projector(int j, const Eigen::VectorXcd& v) const {
  if (j != 0 && j != 1) throw DimensionError("LocalObservable::apply_projector: outcome index must be 0 or 1");
  const double sign = j == 0 ? 1.0 : -1.0;
  return 0.5 * (v + sign * apply_pauli(v));
}

Eigen::MatrixXcd LocalObservable::eigenbasis() const {
  Eigen::MatrixXcd local(2, 2);
  const double r = std::numbers::sqrt2 / 2.0;
  switch (axis_) {
    case Axis::z:
      local = pauli::identity();
      break;
    case Axis::x:
      local << r, r, r, -r;
      break;
    case Axis::y:
      local << r, r, Complex(0.0, r), Complex(0.0, -r);
      break;
  }
  std::vector<Eigen::MatrixXcd> factors(static_cast<std::size_t>(num_sites_), pauli::identity());
  factors[static_cast<std::size_t>(site_)] = local;
  return kron_chain_matrix(factors);
}

LocalObservable make_local_observable(Axis axis, int site, int num_sites) {
  return LocalObservable(axis, site, num_sites);
}

ConservationReport check_conservation(const TrajectorySeries& traj) {
  ConservationReport rep;
  const double e0 = traj.energy;
  for (const auto& s : traj.samples) {
    rep.max_probability_sum_error =
        std::max(rep.max_probability_sum_error, std::abs(s.probabilities[0] + s.probabilities[1] - 1.0));
    rep.max_r_sum_error = std::max(rep.max_r_sum_error, std::abs(s.r_values[0] + s.r_values[1] - s.energy));
    rep.max_norm_error = std::max(rep.max_norm_error, std::abs(s.norm - 1.0));
    rep.max_energy_drift = std::max(rep.max_energy_drift, std::abs(s.energy - e0));
  }
  if (traj.times.size() > 2) {
    const double dt0 = traj.times[1] - traj.times[0];
    for (std::size_t k = 2; k < traj.times.size(); ++k) {
      rep.max_grid_irregularity =
          std::max(rep.max_grid_irregularity, std::abs((traj.times[k] - traj.times[k - 1]) - dt0));
    }
  }
  return rep;
}

double shannon_entropy(std::span<const double> p, EntropyBase base) {
  double sum = 0.0;
  double h = 0.0;
  for (double x : p) {
    if (!(x >= -1e-12)) throw ValidationError("shannon_entropy: negative probability " + std::to_string(x));
    sum += x;
    if (x > 0.0) h -= x * std::log(x);
  }
  if (!(std::abs(sum - 1.0) <= 1e-10)) {
    throw ValidationError("shannon_entropy: probabilities sum to " + std::to_string(sum));
  }
  return h / log_base_factor(base);
}

ObservableSample sample_from_vectors(const LocalObservable& obs, const Eigen::VectorXcd& psi,
                                     const Eigen::VectorXcd& h_psi, EntropyBase base, double time) {
  if (psi.size() != obs.dimension() || h_psi.size() != obs.dimension()) {
    throw DimensionError("sample_statistics: dimension mismatch");
  }
  ObservableSample s;
  s.time = time;
  s.norm = psi.norm();
  s.energy = psi.dot(h_psi).real();
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXcd a_psi = obs.apply_projector(j, psi);
    double p = psi.dot(a_psi).real();
    if (!(p >= -1e-12 && p <= 1.0 + 1e-12)) {
      throw NumericalError("sample_statistics: p_" + std::to_string(j) + " = " + std::to_string(p) +
                           " outside [0, 1]");
    }
    s.probabilities[static_cast<std::size_t>(j)] = std::clamp(p, 0.0, 1.0);
    s.r_values[static_cast<std::size_t>(j)] = a_psi.dot(h_psi).real();
  }
  s.entropy = shannon_entropy(s.probabilities, base);
  return s;
}

ObservableSample sample_statistics(const LocalObservable& obs, const StateVector& psi, const HermitianOperator& h,
                                   EntropyBase base) {
  if (h.dimension() != psi.dimension()) throw DimensionError("sample_statistics: dimension mismatch");
  return sample_from_vectors(obs, psi.amplitudes(), h.apply(psi.amplitudes()), base);
}

double jordan_covariance(const HermitianOperator& a, const HermitianOperator& h, const StateVector& psi) {
  if (a.dimension() != psi.dimension() || h.dimension() != psi.dimension()) {
    throw DimensionError("jordan_covariance: dimension mismatch");
  }
  const Eigen::VectorXcd& v = psi.amplitudes();
  const Eigen::VectorXcd av = a.apply(v);
  const Eigen::VectorXcd hv = h.apply(v);
  const Complex ah = v.dot(a.apply(hv));
  const Complex ha = v.dot(h.apply(av));
  const double jordan = 0.5 * (ah + ha).real();
  return jordan - v.dot(av).real() * v.dot(hv).real();
}

double covariance(const HermitianOperator& projector, const HermitianOperator& h, const StateVector& psi) {
  if (projector.dimension() != psi.dimension() || h.dimension() != psi.dimension()) {
    throw DimensionError("covariance: dimension mismatch");
  }
  const Eigen::VectorXcd& v = psi.amplitudes();
  const Eigen::VectorXcd hv = h.apply(v);
  const Eigen::VectorXcd av = projector.apply(v);
  const double r = av.dot(hv).real();
  const double p = v.dot(av).real();
  const double e = v.dot(hv).real();
  const double cov = r - p * e;
  const double check = jordan_covariance(projector, h, psi);
  if (!(std::abs(cov - check) <= 1e-10)) {
    throw NumericalError("covariance: R - pE and Jordan-product routes disagree by " +
                         std::to_string(std::abs(cov - check)));
  }
  return cov;
}

double shell_bound_excess(double p, double r, double energy, double energy_width, double eta) {
  if (energy == 0.0) return -eta;  // R/E undefined; nothing to bound
  const double lhs = std::abs(r / energy - p);
  const double rhs = energy_width / (2.0 * std::abs(energy)) * p + eta;
  return lhs - rhs;
}

}  // namespace obstherm
