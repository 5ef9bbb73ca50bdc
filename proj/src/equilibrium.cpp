#include "obstherm/equilibrium.hpp"

#include "obstherm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace obstherm {

namespace {

constexpr double kDegenerateSpread = 1e-10;
constexpr double kZeroLambda = 1e-14;
constexpr double kBracketKappa = 1e16;

double energy_scale(std::span<const double> eps, double energy) {
  double s = std::max(1.0, std::abs(energy));
  for (double e : eps) s = std::max(s, std::abs(e));
  return s;
}

std::string interval_text(double lo, double hi) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << lo << ", " << hi << ")";
  return os.str();
}

}  // namespace

double DiagonalEnsemble::mean_energy() const { return weights.dot(spectrum->eigenvalues); }

double DiagonalEnsemble::energy_spread() const {
  const double e = mean_energy();
  const double e2 = weights.dot(spectrum->eigenvalues.cwiseAbs2());
  return std::sqrt(std::max(0.0, e2 - e * e));
}

DiagonalEnsemble diagonal_weights(const StateVector& psi0, std::shared_ptr<const SpectralDecomposition> spec) {
  if (!spec) throw ValidationError("diagonal_weights: missing spectrum");
  if (psi0.dimension() != spec->dimension()) throw DimensionError("diagonal_weights: dimension mismatch");
  DiagonalEnsemble de;
  de.weights = energy_coefficients(psi0.amplitudes(), *spec).cwiseAbs2();
  const double total = de.weights.sum();
  if (!(std::abs(total - 1.0) <= 1e-12)) {
    throw NumericalError("diagonal_weights: weights sum to " + std::to_string(total));
  }
  de.spectrum = std::move(spec);
  return de;
}

MicrocanonicalWindow make_microcanonical_window(const SpectralDecomposition& spec, double center, double width) {
  if (!(width >= 0.0)) throw ValidationError("microcanonical window: negative width");
  MicrocanonicalWindow w;
  w.center_energy = center;
  w.width = width;
  const double lo = center - width / 2.0;
  const double hi = center + width / 2.0;
  for (Eigen::Index n = 0; n < spec.dimension(); ++n) {
    const double e = spec.eigenvalues(n);
    if (e >= lo && e <= hi) w.member_indices.push_back(n);
  }
  if (w.member_indices.empty()) {
    throw ValidationError("microcanonical window " + interval_text(lo, hi) + " contains no eigenstates");
  }
  return w;
}

Eigen::VectorXd eigenstate_probabilities(const LocalObservable& obs, const SpectralDecomposition& spec) {
  if (obs.dimension() != spec.dimension()) throw DimensionError("eigenstate_probabilities: dimension mismatch");
  const Eigen::MatrixXcd sv = obs.apply_pauli(spec.eigenvectors);
  Eigen::VectorXd p(spec.dimension());
  for (Eigen::Index n = 0; n < spec.dimension(); ++n) {
    const double norm2 = spec.eigenvectors.col(n).squaredNorm();
    const double sigma = spec.eigenvectors.col(n).dot(sv.col(n)).real();
    p(n) = std::clamp(0.5 * (norm2 + sigma), 0.0, 1.0);
  }
  return p;
}

std::array<double, 2> diagonal_probabilities(const DiagonalEnsemble& de, const LocalObservable& obs) {
  const Eigen::VectorXd p0 = eigenstate_probabilities(obs, *de.spectrum);
  const double a = de.weights.dot(p0);
  return {a, de.weights.sum() - a};
}

std::array<double, 2> microcanonical_pj(const MicrocanonicalWindow& window, const LocalObservable& obs,
                                        const SpectralDecomposition& spec) {
  if (window.count() == 0) throw ValidationError("microcanonical_pj: empty window");
  const Eigen::VectorXd p0 = eigenstate_probabilities(obs, spec);
  double sum = 0.0;
  for (Eigen::Index n : window.member_indices) {
    if (n < 0 || n >= spec.dimension()) throw DimensionError("microcanonical_pj: member index out of range");
    sum += p0(n);
  }
  const double a = sum / static_cast<double>(window.count());
  return {a, 1.0 - a};
}

StateVector microcanonical_filter(const StateVector& psi, const SpectralDecomposition& spec,
                                  const MicrocanonicalWindow& window) {
  const Eigen::VectorXcd c = energy_coefficients(psi.amplitudes(), spec);
  Eigen::VectorXcd kept = Eigen::VectorXcd::Zero(c.size());
  for (Eigen::Index n : window.member_indices) kept(n) = c(n);
  if (kept.norm() == 0.0) throw ValidationError("microcanonical_filter: state has no weight in the window");
  return StateVector::normalized(spec.eigenvectors * kept, psi.num_sites());
}

ConditionalEnergy eps_conditional(const DiagonalEnsemble& de, const LocalObservable& obs) {
  const SpectralDecomposition& spec = *de.spectrum;
  if (de.weights.size() != spec.dimension()) throw DimensionError("eps_conditional: weights/spectrum mismatch");
  const Eigen::VectorXd p0 = eigenstate_probabilities(obs, spec);
  const Eigen::VectorXd p1 = Eigen::VectorXd::Ones(p0.size()) - p0;
  const double energy = de.mean_energy();

  ConditionalEnergy out;
  out.q = Eigen::MatrixXd::Zero(spec.dimension(), 2);
  double sum_check = 0.0;
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd joint = de.weights.cwiseProduct(j == 0 ? p0 : p1);
    const auto ju = static_cast<std::size_t>(j);
    out.p_de[ju] = joint.sum();
    out.r_de[ju] = joint.dot(spec.eigenvalues);
    if (out.p_de[ju] < kUndefinedProbability) continue;
    out.q.col(j) = joint / out.p_de[ju];
    out.eps_de[ju] = out.q.col(j).dot(spec.eigenvalues);
    out.max_normalization_error = std::max(out.max_normalization_error, std::abs(out.q.col(j).sum() - 1.0));
    sum_check += out.p_de[ju] * *out.eps_de[ju];
  }
  out.energy_sum_error = std::abs(sum_check - energy);
  return out;
}

double log_partition(std::span<const double> eps, double lambda) {
  if (eps.empty()) throw ValidationError("log_partition: empty spectrum");
  double top = -std::numeric_limits<double>::infinity();
  for (double e : eps) top = std::max(top, -lambda * e);
  double sum = 0.0;
  for (double e : eps) sum += std::exp(-lambda * e - top);
  return top + std::log(sum);
}

std::vector<double> exponential_family(std::span<const double> eps, double lambda) {
  const double lz = log_partition(eps, lambda);
  std::vector<double> p(eps.size());
  for (std::size_t j = 0; j < eps.size(); ++j) p[j] = std::exp(-lambda * eps[j] - lz);
  return p;
}

double mean_energy(std::span<const double> eps, double lambda) {
  const std::vector<double> p = exponential_family(eps, lambda);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    num += p[j] * eps[j];
    den += p[j];
  }
  return num / den;
}

LagrangeSolution lambda_binary(double eps0, double eps1, double energy) {
  const std::array<double, 2> eps{eps0, eps1};
  LagrangeSolution sol;
  if (std::abs(eps1 - eps0) <= kDegenerateSpread * energy_scale(eps, energy)) {
    sol.degenerate = true;
    sol.lambda_e = 0.0;
    sol.residual = 0.5 * (eps0 + eps1) - energy;
    if (std::abs(sol.residual) > kDegenerateSpread * energy_scale(eps, energy)) {
      throw InfeasibleError("lambda_binary: eps0 = eps1 = " + std::to_string(eps0) + " cannot reach E = " +
                            std::to_string(energy));
    }
    return sol;
  }
  const double lo = std::min(eps0, eps1);
  const double hi = std::max(eps0, eps1);
  if (!(energy > lo && energy < hi)) {
    throw InfeasibleError("lambda_binary: E = " + std::to_string(energy) + " outside feasible open interval " +
                          interval_text(lo, hi));
  }
  sol.lambda_e = std::log((eps1 - energy) / (energy - eps0)) / (eps1 - eps0);
  sol.residual = mean_energy(eps, sol.lambda_e) - energy;
  return sol;
}

LagrangeSolution lambda_general(std::span<const double> eps, double energy) {
  if (eps.empty()) throw ValidationError("lambda_general: empty spectrum");
  const auto [lo_it, hi_it] = std::minmax_element(eps.begin(), eps.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double scale = energy_scale(eps, energy);
  LagrangeSolution sol;

  if (hi - lo <= kDegenerateSpread * scale) {
    sol.degenerate = true;
    sol.residual = mean_energy(eps, 0.0) - energy;
    if (std::abs(sol.residual) > kDegenerateSpread * scale) {
      throw InfeasibleError("lambda_general: all eps equal " + std::to_string(lo) + " but E = " +
                            std::to_string(energy));
    }
    return sol;
  }
  if (!(energy > lo && energy < hi)) {
    throw InfeasibleError("lambda_general: E = " + std::to_string(energy) + " outside feasible open interval " +
                          interval_text(lo, hi));
  }

  std::vector<double> sorted(eps.begin(), eps.end());
  std::sort(sorted.begin(), sorted.end());
  double gap = hi - lo;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double d = sorted[i] - sorted[i - 1];
    if (d > kDegenerateSpread * scale) gap = std::min(gap, d);
  }

  auto f = [&](double lambda) { return mean_energy(eps, lambda) - energy; };
  // mean energy decreases in lambda: f(a) > 0 > f(b)
  double a = -std::log(kBracketKappa) / gap;
  double b = -a;
  for (int k = 0; k < 64 && f(a) <= 0.0; ++k) a *= 2.0;
  for (int k = 0; k < 64 && f(b) >= 0.0; ++k) b *= 2.0;
  if (!(f(a) > 0.0 && f(b) < 0.0)) throw NumericalError("lambda_general: could not bracket the root");

  const double target = 1e-12 * std::max(1.0, std::abs(energy));
  double lambda = 0.0;
  double value = f(lambda);
  for (int it = 0; it < 500; ++it) {
    sol.iterations = it + 1;
    if (std::abs(value) < target) break;
    if (value > 0.0) {
      a = lambda;
    } else {
      b = lambda;
    }
    // f'(lambda) = -Var(eps)
    const std::vector<double> p = exponential_family(eps, lambda);
    double m1 = 0.0;
    double m2 = 0.0;
    for (std::size_t j = 0; j < eps.size(); ++j) {
      m1 += p[j] * eps[j];
      m2 += p[j] * eps[j] * eps[j];
    }
    const double variance = m2 - m1 * m1;
    double next = variance > 0.0 ? lambda + value / variance : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == lambda || b - a <= std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(lambda))) {
      break;
    }
    lambda = next;
    value = f(lambda);
  }
  sol.lambda_e = lambda;
  sol.residual = value;
  return sol;
}

EquilibriumPrediction predict_equilibrium(std::span<const std::optional<double>> eps, double energy) {
  EquilibriumPrediction out;
  out.p_eq.assign(eps.size(), 0.0);
  out.support.assign(eps.size(), false);
  std::vector<double> active;
  std::vector<std::size_t> where;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    if (eps[j]) {
      out.support[j] = true;
      active.push_back(*eps[j]);
      where.push_back(j);
    }
  }
  if (active.empty()) throw ValidationError("predict_equilibrium: no defined eps_j");

  LagrangeSolution sol;
  if (active.size() == 1) {
    sol.degenerate = true;
    const double miss = active[0] - energy;
    if (std::abs(miss) > 1e-9 * std::max(1.0, std::abs(energy))) {
      throw InfeasibleError("predict_equilibrium: single supported eps = " + std::to_string(active[0]) +
                            " differs from E = " + std::to_string(energy));
    }
  } else if (active.size() == 2) {
    sol = lambda_binary(active[0], active[1], energy);
  } else {
    sol = lambda_general(active, energy);
  }

  out.lambda_e = sol.lambda_e;
  out.degenerate = sol.degenerate;
  out.log_z = log_partition(active, sol.lambda_e);
  out.partition_z = std::exp(out.log_z);
  const std::vector<double> p = exponential_family(active, sol.lambda_e);
  double mean = 0.0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    out.p_eq[where[k]] = p[k];
    mean += p[k] * active[k];
  }
  out.constraint_residual = mean - energy;
  return out;
}

EquilibriumPrediction predict_equilibrium(std::span<const double> eps, double energy) {
  std::vector<std::optional<double>> wrapped(eps.begin(), eps.end());
  return predict_equilibrium(std::span<const std::optional<double>>(wrapped), energy);
}

OteMetrics ote_metrics(const TrajectorySeries& traj, const DiagonalEnsemble& de, const MicrocanonicalWindow& window,
                       double transient_cut) {
  OteMetrics m;
  m.p_de = diagonal_probabilities(de, traj.observable);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.p_mc = window.count() > 0 ? microcanonical_pj(window, traj.observable, *de.spectrum)
                              : std::array<double, 2>{nan, nan};
  std::array<double, 2> acc{};
  for (const auto& s : traj.samples) {
    if (!(s.time > transient_cut)) continue;
    ++m.samples_used;
    for (std::size_t j = 0; j < 2; ++j) acc[j] += std::abs(s.probabilities[j] - m.p_de[j]);
  }
  if (m.samples_used == 0) {
    throw ValidationError("ote_metrics: no samples after transient cut " + std::to_string(transient_cut));
  }
  for (std::size_t j = 0; j < 2; ++j) {
    m.eps_de_timeavg[j] = acc[j] / static_cast<double>(m.samples_used);
    m.eps_mc[j] = std::abs(m.p_de[j] - m.p_mc[j]);
  }
  return m;
}

double huo_unbiasedness(const LocalObservable& obs, const SpectralDecomposition& spec) {
  if (obs.dimension() != spec.dimension()) throw DimensionError("huo_unbiasedness: dimension mismatch");
  const Eigen::MatrixXcd overlaps = obs.eigenbasis().adjoint() * spec.eigenvectors;
  const double flat = 1.0 / static_cast<double>(spec.dimension());
  return (overlaps.cwiseAbs2().array() - flat).abs().maxCoeff();
}

ObservableThermo observable_thermo(double lambda_e, double log_z, double energy, EntropyBase base) {
  ObservableThermo t;
  t.entropy_nats = log_z + lambda_e * energy;
  t.entropy = t.entropy_nats / log_base_factor(base);
  if (std::abs(lambda_e) < kZeroLambda) {
    t.temperature_infinite = true;
    t.temperature = std::numeric_limits<double>::infinity();
    t.free_energy_defined = false;
    t.free_energy = std::numeric_limits<double>::quiet_NaN();
  } else {
    t.temperature = 1.0 / lambda_e;
    t.free_energy = energy - t.temperature * t.entropy_nats;
  }
  return t;
}

EquilibriumReport equilibrium_report(const std::array<double, 2>& p_time_avg, const std::array<double, 2>& r_time_avg,
                                     double energy, const ConditionalEnergy& conditional, const OteMetrics& ote,
                                     EntropyBase base) {
  EquilibriumReport rep;
  rep.p_time_avg = p_time_avg;
  rep.eps_de = conditional.eps_de;
  rep.ote_eps_de_timeavg = ote.eps_de_timeavg;
  rep.ote_eps_mc = ote.eps_mc;
  for (std::size_t j = 0; j < 2; ++j) {
    if (p_time_avg[j] >= kUndefinedProbability) rep.eps_eq[j] = r_time_avg[j] / p_time_avg[j];
  }
  const EquilibriumPrediction pred = predict_equilibrium(std::span<const std::optional<double>>(rep.eps_eq), energy);
  rep.lambda_e = pred.lambda_e;
  rep.partition_z = pred.partition_z;
  rep.lambda_n = pred.log_z - 1.0;
  rep.p_eq = {pred.p_eq[0], pred.p_eq[1]};
  rep.constraint_residual = pred.constraint_residual;
  rep.degenerate = pred.degenerate;
  rep.thermo = observable_thermo(pred.lambda_e, pred.log_z, energy, base);
  double shannon = 0.0;
  for (double p : rep.p_eq) {
    if (p > 0.0) shannon -= p * std::log(p);
  }
  rep.entropy_identity_residual = std::abs(shannon - rep.thermo.entropy_nats);
  return rep;
}

}  // namespace obstherm
