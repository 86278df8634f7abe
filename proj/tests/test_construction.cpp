#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "bilayer/bilayer_construction.hpp"
#include "bilayer/error.hpp"
#include "bilayer/experiment.hpp"

using namespace bilayer;
using namespace bilayer::construction;
using experiment::normalized_grid;

namespace {
constexpr double kPi = std::numbers::pi;

std::shared_ptr<const QuadratureGrid> sphere() {
  static auto g = normalized_grid("sphere:1", geometry::GridSpec{32, 64});
  return g;
}
std::shared_ptr<const QuadratureGrid> flat() {
  static auto g = normalized_grid("flat:1", geometry::GridSpec{8, 8});
  return g;
}
std::shared_ptr<const QuadratureGrid> torus() {
  static auto g = normalized_grid("torus:2,1", geometry::GridSpec{64, 64});
  return g;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::invalid_argument;
}
}  // namespace

TEST(Thickness, FlatIsExact) {
  const auto p = solve_thickness(*flat(), 0.1);
  // The area is 1/2 up to rounding, which is all that a absorbs.
  EXPECT_NEAR(p.a, 0.0, 1e-12);
  EXPECT_NEAR(p.ell_plus, 0.1, 1e-16);
  EXPECT_EQ(p.ell_minus, -p.ell_plus);
}

TEST(Thickness, SphereStartValueAndResiduals) {
  const auto p = solve_thickness(*sphere(), 0.01);
  EXPECT_NEAR(p.a0, -2.0 / 3.0 * 4 * kPi, 1e-10);
  EXPECT_NEAR(p.integral_K, 4 * kPi, 1e-10);
  EXPECT_LE(p.cubic_residual, 1e-12);
  EXPECT_LE(p.cond1_residual, 1e-10);
  EXPECT_NEAR(p.ell_plus, 0.01 + p.a * 1e-6, 1e-18);
  EXPECT_EQ(p.ell_minus, -p.ell_plus);
  EXPECT_NEAR(p.a, p.a0, 0.1 * std::abs(p.a0));
}

TEST(Thickness, CliffordTorusHasZeroCorrection) {
  const auto g = normalized_grid("torus:1.4142135623730951,1", geometry::GridSpec{64, 64});
  const auto p = solve_thickness(*g, 0.01);
  EXPECT_NEAR(p.a, 0.0, 1e-9);
  EXPECT_NEAR(p.ell_plus, 0.01, 1e-14);
}

TEST(Thickness, ReachViolation) {
  EXPECT_EQ(kind_of([] { solve_thickness(*sphere(), 0.5); }), ErrorKind::reach);
}

TEST(Outer, FlatNode) {
  const Bilayer b(flat(), 0.1);
  for (const auto& n : b.nodes()) {
    EXPECT_NEAR(n.L_plus, 0.2, 1e-15);
    EXPECT_NEAR(n.L_minus, -0.2, 1e-15);
    EXPECT_NEAR(n.r, 0.0, 1e-15);
  }
}

TEST(Outer, OrderingAndResiduals) {
  for (auto g : {sphere(), torus(), flat()}) {
    for (double e : {0.02, 0.01, 0.005}) {
      const Bilayer b(g, e);
      const auto& p = b.profile();
      for (const auto& n : b.nodes()) {
        EXPECT_LT(n.L_minus, p.ell_minus);
        EXPECT_LT(p.ell_minus, n.r);
        EXPECT_LT(n.r, p.ell_plus);
        EXPECT_LT(p.ell_plus, n.L_plus);
        EXPECT_GT(n.delta_plus, 0.0);
        EXPECT_LT(n.delta_minus, 0.0);
      }
      EXPECT_LE(b.max_cond2_residual(), 1e-10);
      EXPECT_LE(b.max_rp_residual(), 1e-10);
      EXPECT_LE(p.cond1_residual, 1e-10);
    }
  }
}

TEST(Outer, SplittingPointFailureOnOversizedSphere) {
  // eps * H exceeds one on the normalized sphere at eps = 0.1.
  EXPECT_EQ(kind_of([] { Bilayer(sphere(), 0.1); }), ErrorKind::splitting_point);
}

TEST(Outer, MassExpansions) {
  std::vector<double> eps{0.04, 0.02, 0.01, 0.005};
  std::vector<double> eL, eell, er;
  for (double e : eps) {
    const Bilayer b(sphere(), e);
    const auto& n = b.nodes()[5];
    const auto& s = b.grid().nodes()[5];
    const double c = b.profile().a + s.K / 3.0;
    eL.push_back(std::abs(n.m_L_minus - (-2 + 1.5 * e * s.H - 4 * e * e * c)));
    eell.push_back(std::abs(n.m_ell_plus - (1 + 0.5 * e * s.H + e * e * c)));
    er.push_back(std::abs(n.m_r - (-0.5 * e * s.H + 2 * e * e * c)));
  }
  EXPECT_GT(experiment::fit_power_law(eps, eL).exponent, 2.5);
  EXPECT_GT(experiment::fit_power_law(eps, eell).exponent, 2.0);
  EXPECT_GT(experiment::fit_power_law(eps, er).exponent, 2.0);
}

TEST(Phi, FlatShift) {
  const Bilayer b(flat(), 0.1);
  EXPECT_NEAR(transport_phi(b, 0, 0.05), 0.15, 1e-14);
  EXPECT_NEAR(transport_phi(b, 0, -0.05), -0.15, 1e-14);
  EXPECT_EQ(kind_of([&] { transport_phi(b, 0, b.nodes()[0].r); }), ErrorKind::splitting_point);
}

TEST(Phi, MonotoneIntoShells) {
  const Bilayer b(sphere(), 0.02);
  const auto& p = b.profile();
  for (std::size_t i = 0; i < b.nodes().size(); i += 97) {
    const auto& n = b.nodes()[i];
    double prev = -INFINITY;
    for (int k = 1; k < 1000; ++k) {
      const double t = n.r + (p.ell_plus - n.r) * k / 1000.0;
      const double y = transport_phi(b, i, t);
      EXPECT_GT(y, prev);
      EXPECT_GT(y, p.ell_plus - 1e-14);
      EXPECT_LT(y, n.L_plus + 1e-14);
      prev = y;
    }
    const double lo = transport_phi(b, i, 0.5 * (p.ell_minus + n.r));
    EXPECT_GT(lo, n.L_minus);
    EXPECT_LT(lo, p.ell_minus);
  }
}

TEST(Masses, EqualOne) {
  for (auto g : {sphere(), torus(), flat()}) {
    const Bilayer b(g, 0.01);
    const auto m = band_masses(b);
    const auto q = band_masses_by_length(b);
    EXPECT_NEAR(m.u, 1.0, 1e-10);
    EXPECT_NEAR(m.v, 1.0, 1e-10);
    EXPECT_NEAR(q.u, 1.0, 1e-10);
    EXPECT_NEAR(q.v, 1.0, 1e-10);
  }
}

TEST(Pushforward, TestFunctions) {
  const Bilayer b(sphere(), 0.02);
  const auto one = pushforward_check(b, [](const Vec3&) { return 1.0; });
  EXPECT_NEAR(one.lhs, 1.0, 1e-10);
  EXPECT_NEAR(one.rhs, 1.0, 1e-10);
  const auto sq = pushforward_check(b, [](const Vec3& x) { return x.z() * x.z(); });
  EXPECT_NEAR(sq.lhs, sq.rhs, 1e-8);
  const auto osc =
      pushforward_check(b, [](const Vec3& x) { return std::exp(x.x()) * std::cos(5 * x.y()) + x.z(); });
  EXPECT_NEAR(osc.lhs, osc.rhs, 1e-8);
  const Bilayer f(flat(), 0.05);
  const auto h = pushforward_check(f, [](const Vec3& x) { return x.z(); });
  EXPECT_NEAR(h.lhs, 0.0, 1e-12);
  EXPECT_NEAR(h.rhs, 0.0, 1e-12);
}

TEST(Flip, SphereMassesAndProfilesPermute) {
  const auto n = geometry::normalize_to_unit_mass(geometry::ParametricSurface::sphere(1.0));
  auto a = std::make_shared<const QuadratureGrid>(n.surface, geometry::GridSpec{16, 32});
  auto b = std::make_shared<const QuadratureGrid>(n.surface.flipped(), geometry::GridSpec{16, 32});
  const Bilayer x(a, 0.01);
  const Bilayer y(b, 0.01);
  EXPECT_NEAR(x.profile().ell_plus, y.profile().ell_plus, 1e-15);
  for (std::size_t i = 0; i < x.nodes().size(); i += 31) {
    EXPECT_NEAR(x.nodes()[i].L_plus, -y.nodes()[i].L_minus, 1e-10);
    EXPECT_NEAR(x.nodes()[i].r, -y.nodes()[i].r, 1e-10);
  }
  EXPECT_NEAR(band_masses(x).u, band_masses(y).u, 1e-10);
  EXPECT_NEAR(band_masses(x).v, band_masses(y).v, 1e-10);
}

TEST(Classifier, BandsAndPotential) {
  const Bilayer b(sphere(), 0.02);
  const BandClassifier c(b);
  const auto& s = b.grid().nodes()[40];
  const auto& n = b.nodes()[40];
  const auto& p = b.profile();
  auto at = [&](double t) { return Vec3(s.position + t * s.normal); };
  EXPECT_EQ(c.classify(at(0.5 * (n.r + p.ell_plus))).band, Band::u);
  EXPECT_EQ(c.classify(at(0.5 * (p.ell_plus + n.L_plus))).band, Band::v_plus);
  EXPECT_EQ(c.classify(at(0.5 * (n.L_minus + p.ell_minus))).band, Band::v_minus);
  EXPECT_EQ(c.classify(at(n.L_plus * 1.5)).band, Band::none);
  EXPECT_NEAR(c.potential(at(n.r + 0.003)), -0.003, 1e-9);
  EXPECT_NEAR(c.potential(at(n.r - 0.004)), -0.004, 1e-9);
}

TEST(Voxelize, TotalsAndDisjointSupport) {
  const Bilayer b(sphere(), 0.08);
  const auto v = voxelize(b, {0.02, 4000});
  EXPECT_NEAR(v.u.total(), 1.0, 1e-12);
  EXPECT_NEAR(v.v.total(), 1.0, 1e-12);
  EXPECT_LE(v.u.size(), 4000u);
  EXPECT_LE(v.v.size(), 4000u);
  EXPECT_NEAR(v.raw_mass_u, 1.0, 0.05);
  EXPECT_NEAR(v.raw_mass_v, 1.0, 0.05);
  const BandClassifier c(b);
  for (std::size_t i = 0; i < v.u.size(); i += 50) {
    for (std::size_t j = 0; j < v.v.size(); j += 50) {
      EXPECT_GT((v.u.points[i] - v.v.points[j]).norm(), 0.0);
    }
  }
}

TEST(Voxelize, RawMassConvergesWithSpacing) {
  const Bilayer b(sphere(), 0.08);
  const auto coarse = voxelize(b, {0.02, 1000000});
  const auto fine = voxelize(b, {0.01, 1000000});
  EXPECT_LT(std::abs(fine.raw_mass_u - 1.0) + std::abs(fine.raw_mass_v - 1.0),
            std::abs(coarse.raw_mass_u - 1.0) + std::abs(coarse.raw_mass_v - 1.0) + 1e-3);
  EXPECT_EQ(coarse.patch_factor, 0.0);
}

TEST(Voxelize, TooCoarse) {
  const Bilayer b(flat(), 0.01);
  EXPECT_EQ(kind_of([&] { voxelize(b, {5.0, 4000}); }), ErrorKind::voxelization);
  EXPECT_EQ(kind_of([&] { voxelize(b, {0.0, 4000}); }), ErrorKind::invalid_argument);
}
