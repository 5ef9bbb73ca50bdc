#include "obstherm/model.hpp"

#include "obstherm/error.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace obstherm {

namespace {
constexpr int kMaxSites = 14;
}

std::string_view to_string(Boundary b) noexcept {
  return b == Boundary::periodic ? "periodic" : "open";
}

Boundary parse_boundary(std::string_view text) {
  if (text == "periodic" || text == "pbc") return Boundary::periodic;
  if (text == "open" || text == "obc") return Boundary::open;
  throw ConfigError("unknown boundary '" + std::string(text) + "' (expected periodic|open)");
}

IsingParams IsingParams::kim_huse(int num_sites) {
  IsingParams p;
  p.coupling_jz = 1.0;
  p.field_bx = 0.9045;
  p.field_bz = 0.8090;
  p.num_sites = num_sites;
  p.boundary = Boundary::periodic;
  return p;
}

IsingParams IsingParams::preset(std::string_view name, int num_sites) {
  if (name == "kim-huse") return kim_huse(num_sites);
  throw ConfigError("unknown parameter preset '" + std::string(name) + "'");
}

void IsingParams::validate() const {
  if (num_sites < 2) throw ConfigError("IsingParams: num_sites must be >= 2, got " + std::to_string(num_sites));
  if (num_sites > kMaxSites) {
    throw ConfigError("IsingParams: num_sites " + std::to_string(num_sites) + " exceeds dense limit " +
                      std::to_string(kMaxSites));
  }
  if (!std::isfinite(coupling_jz) || !std::isfinite(field_bz) || !std::isfinite(field_bx)) {
    throw ConfigError("IsingParams: couplings must be finite");
  }
}

InitialStateSpec InitialStateSpec::from_grid_index(int m) {
  if (m < 1 || m > kThetaGridSize) {
    throw ConfigError("theta grid index must be in 1.." + std::to_string(kThetaGridSize) + ", got " +
                      std::to_string(m));
  }
  InitialStateSpec s;
  s.theta = static_cast<double>(m - 1) / static_cast<double>(kThetaGridSize - 1) * (std::numbers::pi / 2.0);
  s.grid_index = m;
  return s;
}

InitialStateSpec InitialStateSpec::from_angle(double theta) {
  InitialStateSpec s;
  s.theta = theta;
  s.validate();
  return s;
}

void InitialStateSpec::validate() const {
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2.0 + 1e-15)) {
    throw ConfigError("theta must lie in [0, pi/2], got " + std::to_string(theta));
  }
  if (grid_index) {
    const double expected = from_grid_index(*grid_index).theta;
    if (std::abs(expected - theta) > 1e-15) throw ConfigError("theta does not match its grid index");
  }
}

HermitianOperator build_hamiltonian(const IsingParams& params) {
  params.validate();
  const int L = params.num_sites;
  const Eigen::Index dim = Eigen::Index{1} << L;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);

  // site n <-> bit (L-1-n) of the basis index; bit 0 means Z = +1
  auto z_of = [L](Eigen::Index state, int site) { return ((state >> (L - 1 - site)) & 1) ? -1.0 : 1.0; };
  const int bonds = params.boundary == Boundary::periodic ? L : L - 1;

  for (Eigen::Index s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (int n = 0; n < bonds; ++n) diag += params.coupling_jz * z_of(s, n) * z_of(s, (n + 1) % L);
    for (int n = 0; n < L; ++n) diag += params.field_bz * z_of(s, n);
    h(s, s) = diag;
    for (int n = 0; n < L; ++n) {
      const Eigen::Index flipped = s ^ (Eigen::Index{1} << (L - 1 - n));
      h(flipped, s) += params.field_bx;
    }
  }
  return HermitianOperator(std::move(h));
}

Eigen::MatrixXcd ry_rotation(double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  Eigen::MatrixXcd r(2, 2);
  r << c, -s, s, c;
  return r;
}

StateVector rotated_product_state(std::span<const int> bits, double theta) {
  if (bits.empty()) throw DimensionError("rotated_product_state: empty bit pattern");
  const Eigen::MatrixXcd r = ry_rotation(theta);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Ones(1);
  for (int b : bits) {
    if (b != 0 && b != 1) throw ConfigError("rotated_product_state: bits must be 0 or 1");
    const Eigen::VectorXcd local = r.col(b);
    Eigen::VectorXcd next(acc.size() * 2);
    // big-endian: the new site is the least significant bit
    for (Eigen::Index i = 0; i < acc.size(); ++i) {
      next(2 * i) = acc(i) * local(0);
      next(2 * i + 1) = acc(i) * local(1);
    }
    acc = std::move(next);
  }
  return StateVector::normalized(std::move(acc), static_cast<int>(bits.size()));
}

StateVector prepare_initial_state(const InitialStateSpec& spec, int num_sites) {
  spec.validate();
  if (num_sites < 2 || num_sites % 2 != 0) {
    throw ConfigError("prepare_initial_state: antiferromagnetic pattern needs even L >= 2, got " +
                      std::to_string(num_sites));
  }
  std::vector<int> bits(static_cast<std::size_t>(num_sites));
  for (int n = 0; n < num_sites; ++n) bits[static_cast<std::size_t>(n)] = n % 2;
  return rotated_product_state(bits, spec.theta);
}

Eigen::MatrixXcd translation_matrix(int num_sites) {
  if (num_sites < 1 || num_sites > kMaxSites) throw ConfigError("translation_matrix: bad site count");
  const Eigen::Index dim = Eigen::Index{1} << num_sites;
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    // site n moves to n+1: the least significant bit (site L-1) becomes site 0
    const Eigen::Index last = s & 1;
    const Eigen::Index shifted = (s >> 1) | (last << (num_sites - 1));
    t(shifted, s) = 1.0;
  }
  return t;
}

}  // namespace obstherm
