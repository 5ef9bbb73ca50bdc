#include "obstherm/error.hpp"
#include "obstherm/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace obstherm;

namespace {
Eigen::MatrixXcd site_op(const Eigen::MatrixXcd& op, int site, int sites) {
  std::vector<Eigen::MatrixXcd> f(static_cast<std::size_t>(sites), pauli::identity());
  f[static_cast<std::size_t>(site)] = op;
  return kron_chain_matrix(f);
}
}  // namespace

TEST_CASE("preset and validation") {
  const IsingParams p = IsingParams::kim_huse(10);
  CHECK(p.coupling_jz == 1.0);
  CHECK(p.field_bx == 0.9045);
  CHECK(p.field_bz == 0.8090);
  CHECK(p.boundary == Boundary::periodic);
  CHECK(IsingParams::preset("kim-huse", 6).num_sites == 6);
  CHECK_THROWS_AS(IsingParams::preset("nope", 6), ConfigError);
  IsingParams bad = p;
  bad.num_sites = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.num_sites = 20;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_boundary("open") == Boundary::open);
  CHECK_THROWS_AS(parse_boundary("twisted"), ConfigError);
}

TEST_CASE("theta grid") {
  CHECK(InitialStateSpec::from_grid_index(1).theta == 0.0);
  CHECK(InitialStateSpec::from_grid_index(20).theta == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(InitialStateSpec::from_grid_index(11).theta == doctest::Approx(10.0 / 19.0 * std::numbers::pi / 2));
  CHECK_THROWS_AS(InitialStateSpec::from_grid_index(0), ConfigError);
  CHECK_THROWS_AS(InitialStateSpec::from_grid_index(21), ConfigError);
  CHECK_THROWS_AS(InitialStateSpec::from_angle(-0.1), ConfigError);
}

TEST_CASE("Hamiltonian matches the Kronecker-product construction") {
  for (Boundary b : {Boundary::periodic, Boundary::open}) {
    for (int sites : {2, 3, 4, 5}) {
      const IsingParams p{1.0, 0.8090, 0.9045, sites, b};
      Eigen::MatrixXcd ref = Eigen::MatrixXcd::Zero(1 << sites, 1 << sites);
      const int bonds = b == Boundary::periodic ? sites : sites - 1;
      for (int n = 0; n < bonds; ++n) {
        ref += p.coupling_jz * site_op(pauli::z(), n, sites) * site_op(pauli::z(), (n + 1) % sites, sites);
      }
      for (int n = 0; n < sites; ++n) {
        ref += p.field_bz * site_op(pauli::z(), n, sites) + p.field_bx * site_op(pauli::x(), n, sites);
      }
      CHECK((build_hamiltonian(p).matrix() - ref).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("L=2 periodic counts the single bond twice") {
  const IsingParams p{1.0, 0.0, 0.0, 2, Boundary::periodic};
  const Eigen::MatrixXcd h = build_hamiltonian(p).matrix();
  CHECK(h(0, 0).real() == 2.0);
  CHECK(h(1, 1).real() == -2.0);
}

TEST_CASE("Hamiltonian trace is zero") {
  CHECK(std::abs(build_hamiltonian(IsingParams::kim_huse(6)).matrix().trace()) < 1e-12);
}

TEST_CASE("B^x = 0 gives a diagonal Hamiltonian") {
  const IsingParams p{1.0, 0.5, 0.0, 4, Boundary::periodic};
  const Eigen::MatrixXcd h = build_hamiltonian(p).matrix();
  CHECK((h - Eigen::MatrixXcd(h.diagonal().asDiagonal())).norm() == 0.0);
}

TEST_CASE("initial state at theta = 0 is the Neel basis state") {
  const StateVector psi = prepare_initial_state(InitialStateSpec::from_grid_index(1), 4);
  // |0101> = index 5
  CHECK(psi.amplitudes()(5) == Complex(1.0));
  CHECK(std::abs(psi.norm() - 1.0) < 1e-15);
  CHECK_THROWS_AS(prepare_initial_state(InitialStateSpec::from_grid_index(1), 3), ConfigError);
}

TEST_CASE("initial state matches R_y applied site by site") {
  const double theta = 0.7;
  const Eigen::MatrixXcd r = ry_rotation(theta);
  CHECK(r(0, 0).real() == doctest::Approx(std::cos(theta / 2)));
  CHECK(r(0, 1).real() == doctest::Approx(-std::sin(theta / 2)));
  CHECK(r(1, 0).real() == doctest::Approx(std::sin(theta / 2)));
  const std::vector<Eigen::MatrixXcd> f(4, r);
  const Eigen::VectorXcd ref = kron_chain_matrix(f).col(5);
  CHECK((prepare_initial_state(InitialStateSpec::from_angle(theta), 4).amplitudes() - ref).norm() < 1e-15);
}

TEST_CASE("translation commutes with the periodic Hamiltonian") {
  const Eigen::MatrixXcd t = translation_matrix(6);
  const Eigen::MatrixXcd h = build_hamiltonian(IsingParams::kim_huse(6)).matrix();
  CHECK((t * h - h * t).norm() < 1e-12);
  CHECK((t.adjoint() * t - Eigen::MatrixXcd::Identity(64, 64)).norm() < 1e-14);
  // T Z_n T^dagger = Z_{n+1}
  CHECK((t * site_op(pauli::z(), 2, 6) * t.adjoint() - site_op(pauli::z(), 3, 6)).norm() < 1e-14);
}
