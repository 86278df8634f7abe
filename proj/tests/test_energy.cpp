#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bilayer/energy_metrics.hpp"
#include "bilayer/experiment.hpp"

using namespace bilayer;
using namespace bilayer::energy;
using experiment::fit_power_law;
using experiment::normalized_grid;
using geometry::Vec3;
using geometry::GridSpec;

namespace {
constexpr double kPi = std::numbers::pi;

std::shared_ptr<const geometry::QuadratureGrid> sphere() {
  static auto g = normalized_grid("sphere:1", GridSpec{64, 128});
  return g;
}
std::shared_ptr<const geometry::QuadratureGrid> flat() {
  static auto g = normalized_grid("flat:1", GridSpec{8, 8});
  return g;
}
std::shared_ptr<const geometry::QuadratureGrid> clifford() {
  static auto g = normalized_grid("torus:1.4142135623730951,1", GridSpec{128, 128});
  return g;
}
}  // namespace

TEST(JumpArea, FlatAndSphere) {
  const Bilayer f(flat(), 0.1);
  EXPECT_NEAR(jump_area(f), 2 * f.grid().area(), 1e-14);
  const Bilayer s(sphere(), 0.01);
  const double l = s.profile().ell_plus;
  EXPECT_NEAR(jump_area(s), 1 + 8 * kPi * l * l, 1e-12);
}

TEST(JumpArea, SecondOrderExpansion) {
  std::vector<double> eps{0.04, 0.02, 0.01, 0.005};
  std::vector<double> err;
  for (double e : eps) {
    const Bilayer s(sphere(), e);
    err.push_back(std::abs(jump_area(s) - (1 + 2 * e * e * 4 * kPi)));
  }
  EXPECT_GT(fit_power_law(eps, err).exponent, 2.0);
}

TEST(Cost, FlatIsExact) {
  const Bilayer f(flat(), 0.05);
  EXPECT_NEAR(d1_construction_cost(f).value, 2 * 0.05 * f.grid().area(), 1e-15);
  EXPECT_NEAR(d1_asymptotic(f), 2 * 0.05 * f.grid().area(), 1e-15);
}

TEST(Cost, AsymptoticAgreementOnSphere) {
  std::vector<double> eps{0.04, 0.02, 0.01, 0.005};
  std::vector<double> quad_vs_asym, asym_vs_collapsed;
  for (double e : eps) {
    const Bilayer s(sphere(), e);
    const double q = d1_construction_cost(s).value;
    const double a = d1_asymptotic(s);
    quad_vs_asym.push_back(std::abs(q - a));
    asym_vs_collapsed.push_back(std::abs(a - d1_collapsed(s)));
    EXPECT_NEAR((d1_collapsed(s) - e) / (e * e * e), -4 * kPi / 3, 1e-9);
    EXPECT_GE(q, d1_ray_lower_estimate(s) - 1e-14);
  }
  EXPECT_GT(fit_power_law(eps, quad_vs_asym).exponent, 3.0);
  EXPECT_GT(fit_power_law(eps, asym_vs_collapsed).exponent, 3.0);
}

TEST(Cost, QuadratureStopsAtTolerance) {
  const Bilayer s(sphere(), 0.02);
  const auto c = d1_construction_cost(s);
  EXPECT_GE(c.nodes_per_side, 32);
  EXPECT_LE(c.nodes_per_side, 256);
  EXPECT_THROW(d1_construction_cost(s, {2, 2, 1e-300}), Error);
}

TEST(Limit, ClosedForms) {
  EXPECT_NEAR(limit_energy(*sphere()), 20 * kPi / 3, 1e-10);
  EXPECT_NEAR(limit_energy(*clifford()), 4 * kPi * kPi, 1e-9);
  EXPECT_EQ(limit_energy(*flat()), 0.0);
}

TEST(LowerBound, FlatZeroAndSphereBelowG) {
  EXPECT_NEAR(lower_bound_rhs(Bilayer(flat(), 0.05)), 0.0, 1e-20);
  std::vector<double> gaps;
  for (double e : {0.02, 0.01, 0.005, 0.0025}) {
    const auto r = energy::energy(Bilayer(sphere(), e));
    EXPECT_LE(r.lower_rhs, r.g_eps + 1e-6);
    gaps.push_back(std::abs(r.lower_rhs - 20 * kPi / 3));
  }
  EXPECT_LT(gaps.back(), gaps.front());
  EXPECT_LT(gaps.back(), 0.01 * 20 * kPi / 3);
}

TEST(Report, Relations) {
  const auto r = energy::energy(Bilayer(sphere(), 0.01));
  EXPECT_EQ(r.f_eps, r.area_term + r.d1_quad / r.eps);
  EXPECT_EQ(r.g_eps, (r.f_eps - 2.0) / (r.eps * r.eps));
  EXPECT_NEAR(r.g_eps, 20 * kPi / 3, 0.02 * 20 * kPi / 3);
  EXPECT_EQ(r.grid, "64x128");
  EXPECT_LE(r.mass_err_u, 1e-10);
  EXPECT_LE(r.mass_err_v, 1e-10);
}

TEST(Report, FlatIsZero) {
  for (double e : {0.2, 0.1, 0.05}) {
    EXPECT_NEAR(energy::energy(Bilayer(flat(), e)).g_eps, 0.0, 1e-10);
  }
}

TEST(Report, CliffordTorusWithinTwoPercent) {
  const auto r = energy::energy(Bilayer(clifford(), 0.005));
  EXPECT_NEAR(r.g_eps, 4 * kPi * kPi, 0.02 * 4 * kPi * kPi);
}

TEST(Report, ScaleInvariance) {
  const auto a = energy::energy(Bilayer(normalized_grid("sphere:1", GridSpec{32, 64}), 0.01));
  const auto b = energy::energy(Bilayer(normalized_grid("sphere:3", GridSpec{32, 64}), 0.01));
  EXPECT_NEAR(a.g_eps, b.g_eps, 1e-9);
}

TEST(Report, GridSelfConvergence) {
  for (const char* d : {"sphere:1", "torus:2,1", "ellipsoid:1,1.5,2"}) {
    const auto base = geometry::ParametricSurface::parse(d);
    const auto spec = experiment::default_grid(base);
    const auto a = energy::energy(Bilayer(normalized_grid(d, spec), 0.01));
    const auto b = energy::energy(Bilayer(normalized_grid(d, spec.doubled()), 0.01));
    EXPECT_LT(std::abs(a.g_eps - b.g_eps), 1e-4 * std::abs(b.g_eps)) << d;
  }
}

TEST(Weakstar, TargetsAndDecay) {
  const auto sq = [](const Vec3& x) { return x.z() * x.z(); };
  EXPECT_NEAR(weakstar_target(*sphere(), sq), 1.0 / (24 * kPi), 1e-14);
  std::vector<double> eps{0.04, 0.02, 0.01};
  std::vector<double> err;
  for (double e : eps) {
    const Bilayer s(sphere(), e);
    EXPECT_LE(weakstar_error(s, [](const Vec3&) { return 1.0; }), 1e-10);
    err.push_back(weakstar_error(s, sq));
  }
  EXPECT_GE(fit_power_law(eps, err).exponent, 1.9);
}
