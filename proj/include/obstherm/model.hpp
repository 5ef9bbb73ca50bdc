// model.hpp: transverse/longitudinal-field Ising chain and the rotated
// antiferromagnetic initial states.

#pragma once

#include "obstherm/quantum_core.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace obstherm {

enum class Boundary { periodic, open };

std::string_view to_string(Boundary b) noexcept;
Boundary parse_boundary(std::string_view text);

// H = sum_n ( Jz Z_n Z_{n+1} + Bz Z_n + Bx X_n )
struct IsingParams {
  double coupling_jz = 1.0;
  double field_bz = 0.8090;
  double field_bx = 0.9045;
  int num_sites = 10;
  Boundary boundary = Boundary::periodic;

  // Robustly non-integrable point (Jz, Bx, Bz) = (1, 0.9045, 0.8090).
  static IsingParams kim_huse(int num_sites);
  static IsingParams preset(std::string_view name, int num_sites);

  // Throws ConfigError when num_sites < 2 or the dense dimension is out of reach.
  void validate() const;
};

inline constexpr int kThetaGridSize = 20;

struct InitialStateSpec {
  double theta = 0.0;  // radians, [0, pi/2]
  std::optional<int> grid_index;

  // theta_m = (m - 1)/19 * pi/2, m in 1..20
  static InitialStateSpec from_grid_index(int m);
  static InitialStateSpec from_angle(double theta);
  void validate() const;
};

// Built directly in the computational basis: Z terms on the diagonal, X terms
// as single bit flips. For L = 2 periodic the bond (0,1) is summed twice.
HermitianOperator build_hamiltonian(const IsingParams& params);

// R_y(theta) = exp(-i Y theta/2) = ((cos, -sin), (sin, cos)) of theta/2.
Eigen::MatrixXcd ry_rotation(double theta);

// R_y(theta)^{(x)L} |b_0 ... b_{L-1}>.
StateVector rotated_product_state(std::span<const int> bits, double theta);

// R_y(theta)^{(x)L} |0101...01>. Requires even L.
StateVector prepare_initial_state(const InitialStateSpec& spec, int num_sites);

// One-site cyclic translation T|b_0 b_1 ... b_{L-1}> = |b_{L-1} b_0 ... b_{L-2}>.
Eigen::MatrixXcd translation_matrix(int num_sites);

}  // namespace obstherm
