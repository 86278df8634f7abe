#include "bilayer/energy_metrics.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "bilayer/error.hpp"
#include "bilayer/numerics.hpp"

namespace bilayer::energy {

namespace {

template <class F>
double node_sum(const Bilayer& bilayer, F&& per_node) {
  const auto samples = bilayer.grid().nodes();
  std::vector<double> terms(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { terms[i] = samples[i].weight * per_node(i); });
  return ordered_sum(terms);
}

double sheet_jacobian(const geometry::SurfaceSample& s, double t) {
  return 1.0 + t * s.H + t * t * s.K;
}

double ray_cost(const Bilayer& bilayer, std::size_t i, int n) {
  const auto& node = bilayer.nodes()[i];
  const auto ray = bilayer.ray(i);
  const double plus = gauss_integrate(
      [&](double m) {
        return ray::length_of_mass(ray, node.delta_plus + m) - ray::length_of_mass(ray, m);
      },
      node.m_r, node.m_ell_plus, n);
  const double minus = gauss_integrate(
      [&](double m) {
        return ray::length_of_mass(ray, m) - ray::length_of_mass(ray, node.delta_minus + m);
      },
      node.m_ell_minus, node.m_r, n);
  return plus + minus;
}

}  // namespace

double jump_area(const Bilayer& bilayer) {
  const auto& p = bilayer.profile();
  const auto samples = bilayer.grid().nodes();
  return node_sum(bilayer, [&](std::size_t i) {
    return sheet_jacobian(samples[i], p.ell_plus) + sheet_jacobian(samples[i], p.ell_minus);
  });
}

CostResult d1_construction_cost(const Bilayer& bilayer, const InnerQuadrature& q) {
  int n = q.initial_nodes;
  double previous = node_sum(bilayer, [&](std::size_t i) { return ray_cost(bilayer, i, n); });
  while (2 * n <= q.max_nodes) {
    n *= 2;
    const double current = node_sum(bilayer, [&](std::size_t i) { return ray_cost(bilayer, i, n); });
    if (std::abs(current - previous) <= q.relative_tolerance * std::abs(current)) {
      return {current, n};
    }
    previous = current;
  }
  throw Error(ErrorKind::quadrature,
              fmt::format("inner transport quadrature did not settle within {} nodes per side",
                          q.max_nodes));
}

double d1_asymptotic(const Bilayer& bilayer) {
  const double e = bilayer.eps();
  const auto samples = bilayer.grid().nodes();
  CompensatedSum first;
  CompensatedSum second;
  CompensatedSum third;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& n = bilayer.nodes()[i];
    const double dp2 = n.delta_plus * n.delta_plus;
    const double dm2 = n.delta_minus * n.delta_minus;
    first += s.weight * (dp2 + dm2);
    second += s.weight * (n.m_ell_plus * dp2 + n.m_ell_minus * dm2) * s.H;
    const double ap = n.m_ell_plus;
    const double am = n.m_ell_minus;
    const double r = n.m_r;
    const double bracket = (ap - r) * (ap - r) * (7.0 * ap * ap + r * r - 2.0 * ap * r) +
                           (r - am) * (r - am) * (7.0 * am * am + r * r - 2.0 * am * r);
    third += s.weight * bracket * (3.0 * s.H * s.H - 2.0 * s.K);
  }
  return e * first.value() - e * e * second.value() + e * e * e / 12.0 * third.value();
}

double d1_collapsed(const Bilayer& bilayer) {
  const double e = bilayer.eps();
  const double integral = geometry::surface_integral(bilayer.grid(), [](const geometry::SurfaceSample& s) {
    return 0.5 * s.H * s.H - 7.0 / 3.0 * s.K;
  });
  return e + e * e * e * integral;
}

double limit_energy(const QuadratureGrid& grid) {
  return 2.0 * geometry::surface_integral(grid, [](const geometry::SurfaceSample& s) {
           return 0.25 * s.H * s.H - s.K / 6.0;
         });
}

double lower_bound_rhs(const Bilayer& bilayer) {
  const auto& p = bilayer.profile();
  const double e2 = p.eps * p.eps;
  const auto samples = bilayer.grid().nodes();
  return node_sum(bilayer, [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& n = bilayer.nodes()[i];
    auto sheet = [&](double ell, double mass) {
      const double jac = sheet_jacobian(s, ell);
      const double M = mass / jac;
      const double q = ray::Q_eigen(s.lambda / (1.0 + ell * s.lambda), s.mu / (1.0 + ell * s.mu));
      return jac * ((M - 1.0) * (M - 1.0) / e2 + M * M * M * M * q);
    };
    return sheet(p.ell_plus, n.m_ell_plus - n.m_r) + sheet(p.ell_minus, n.m_r - n.m_ell_minus);
  });
}

double d1_ray_lower_estimate(const Bilayer& bilayer) {
  const auto& p = bilayer.profile();
  const auto samples = bilayer.grid().nodes();
  return p.eps * node_sum(bilayer, [&](std::size_t i) {
           const auto& s = samples[i];
           const auto& n = bilayer.nodes()[i];
           const double jp = sheet_jacobian(s, p.ell_plus);
           const double jm = sheet_jacobian(s, p.ell_minus);
           const double mp = (n.m_ell_plus - n.m_r) / jp;
           const double mm = (n.m_r - n.m_ell_minus) / jm;
           return jp * mp * mp + jm * mm * mm;
         });
}

double weakstar_integral(const Bilayer& bilayer, const SpaceFunction& phi, int nodes) {
  const auto& p = bilayer.profile();
  const auto samples = bilayer.grid().nodes();
  const double inv_eps = 1.0 / p.eps;
  return node_sum(bilayer, [&](std::size_t i) {
    const auto& s = samples[i];
    return gauss_integrate(
        [&](double t) { return phi(s.position + t * s.normal) * inv_eps * sheet_jacobian(s, t); },
        p.ell_minus, p.ell_plus, nodes);
  });
}

double weakstar_target(const QuadratureGrid& grid, const SpaceFunction& phi) {
  return 2.0 * geometry::surface_integral(grid, [&](const geometry::SurfaceSample& s) {
           return phi(s.position);
         });
}

double weakstar_error(const Bilayer& bilayer, const SpaceFunction& phi, int nodes) {
  return std::abs(weakstar_integral(bilayer, phi, nodes) - weakstar_target(bilayer.grid(), phi));
}

EnergyReport energy(const Bilayer& bilayer, const InnerQuadrature& q) {
  const auto start = std::chrono::steady_clock::now();
  EnergyReport r;
  r.surface = bilayer.grid().surface().descriptor();
  r.grid = bilayer.grid().spec().str();
  r.eps = bilayer.eps();
  r.area_term = jump_area(bilayer);
  r.d1_quad = d1_construction_cost(bilayer, q).value;
  r.d1_asym = d1_asymptotic(bilayer);
  r.f_eps = r.area_term + r.d1_quad / r.eps;
  r.g_eps = (r.f_eps - 2.0) / (r.eps * r.eps);
  r.limit = limit_energy(bilayer.grid());
  r.lower_rhs = lower_bound_rhs(bilayer);
  const auto masses = construction::band_masses_by_length(bilayer);
  r.mass_err_u = std::abs(masses.u - 1.0);
  r.mass_err_v = std::abs(masses.v - 1.0);
  r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace bilayer::energy
