#pragma once

#include <string>

#include "bilayer/bilayer_construction.hpp"

namespace bilayer::energy {

using construction::Bilayer;
using construction::SpaceFunction;
using geometry::QuadratureGrid;

/// Area of the two parallel sheets at l+ and l-.
double jump_area(const Bilayer& bilayer);

struct InnerQuadrature {
  int initial_nodes = 32;
  int max_nodes = 256;
  double relative_tolerance = 1e-12;
};

struct CostResult {
  double value = 0.0;
  int nodes_per_side = 0;
};

/// Transport cost of the constructed map: per ray
///   int_{m(r)}^{m(l+)} (t(delta+ + m) - t(m)) dm + int_{m(l-)}^{m(r)} (t(m) - t(delta- + m)) dm
/// by Gauss-Legendre in m, doubling the node count until the relative change
/// is below the tolerance. Throws ErrorKind::quadrature past max_nodes.
CostResult d1_construction_cost(const Bilayer& bilayer, const InnerQuadrature& q = {});

/// Third-order expansion of the same cost, evaluated term by term from the
/// per-node mass values at l+-, L+- and r.
double d1_asymptotic(const Bilayer& bilayer);

/// eps + eps^3 int (H^2/2 - 7K/3).
double d1_collapsed(const Bilayer& bilayer);

/// 2 int (H^2/4 - K/6).
double limit_energy(const QuadratureGrid& grid);

/// Lower bound for G evaluated on the construction: for the sheets at l+ and
/// l- with theta.nu = 1 and M the ray mass per unit sheet area,
///   sum over sheets of int_sheet (M - 1)^2 / eps^2 + M^4 Q(D theta),
/// where D theta has the parallel-sheet eigenvalues lambda / (1 + l lambda), mu / (1 + l mu).
double lower_bound_rhs(const Bilayer& bilayer);

/// eps int_sheet M^2 over both sheets; a lower estimate for the cost.
double d1_ray_lower_estimate(const Bilayer& bilayer);

/// (1/eps) int_S int_{l-}^{l+} phi(p + t nu)(1 + tH + t^2 K) dt.
double weakstar_integral(const Bilayer& bilayer, const SpaceFunction& phi, int nodes = 32);
/// 2 int_S phi.
double weakstar_target(const QuadratureGrid& grid, const SpaceFunction& phi);
double weakstar_error(const Bilayer& bilayer, const SpaceFunction& phi, int nodes = 32);

struct EnergyReport {
  std::string surface;
  double eps = 0.0;
  double area_term = 0.0;
  double d1_quad = 0.0;
  double d1_asym = 0.0;
  double f_eps = 0.0;
  double g_eps = 0.0;
  double limit = 0.0;
  double lower_rhs = 0.0;
  double mass_err_u = 0.0;
  double mass_err_v = 0.0;
  std::string grid;
  double runtime_s = 0.0;
};

/// All energies for one construction; G comes from the quadrature cost.
EnergyReport energy(const Bilayer& bilayer, const InnerQuadrature& q = {});

}  // namespace bilayer::energy
