#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bilayer/error.hpp"
#include "bilayer/surface_geometry.hpp"

using namespace bilayer;
using namespace bilayer::geometry;

namespace {
constexpr double kPi = std::numbers::pi;

double integral(const QuadratureGrid& g, double (*f)(const SurfaceSample&)) {
  return surface_integral(g, f);
}
double one(const SurfaceSample&) { return 1.0; }
double gauss(const SurfaceSample& s) { return s.K; }
double mean_sq(const SurfaceSample& s) { return s.H * s.H; }
}  // namespace

TEST(Frame, UnitSphereCurvature) {
  const auto s = ParametricSurface::sphere(1.0);
  for (double z : {-0.9, -0.2, 0.0, 0.5, 0.99}) {
    for (double phi : {0.0, 1.0, 4.0}) {
      const auto f = evaluate_frame(s, {0, z, phi});
      EXPECT_NEAR(f.H, 2.0, 1e-12);
      EXPECT_NEAR(f.K, 1.0, 1e-12);
      EXPECT_NEAR(f.normal.norm(), 1.0, 1e-12);
      // Outward normal.
      EXPECT_NEAR(f.normal.dot(f.position), 1.0, 1e-12);
    }
  }
}

TEST(Frame, FlatHasZeroCurvature) {
  const auto f = evaluate_frame(ParametricSurface::flat(1.0), {0, 0.3, 0.7});
  EXPECT_EQ(f.H, 0.0);
  EXPECT_EQ(f.K, 0.0);
  EXPECT_NEAR(f.normal.z(), 1.0, 1e-15);
}

TEST(Frame, TorusOuterEquator) {
  const auto f = evaluate_frame(ParametricSurface::torus(2.0, 1.0), {0, 0.0, 0.0});
  EXPECT_NEAR(f.position.x(), 3.0, 1e-14);
  EXPECT_NEAR(f.lambda, 1.0, 1e-12);
  EXPECT_NEAR(f.mu, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.H, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.K, 1.0 / 3.0, 1e-12);
}

TEST(Frame, TorusInnerEquatorHasNegativeK) {
  const auto f = evaluate_frame(ParametricSurface::torus(2.0, 1.0), {0, 0.0, kPi});
  EXPECT_NEAR(f.K, -1.0, 1e-12);
  EXPECT_NEAR(f.H, 0.0, 1e-12);
}

TEST(Frame, EllipsoidCurvatureAtPole) {
  // Near the pole of a spheroid x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 the curvatures tend to c/a^2.
  const auto f = evaluate_frame(ParametricSurface::ellipsoid(2.0, 2.0, 1.0), {0, 1.0 - 1e-9, 0.3});
  EXPECT_NEAR(f.lambda, 0.25, 1e-6);
  EXPECT_NEAR(f.mu, 0.25, 1e-6);
}

TEST(Frame, PrincipalCurvaturesFromOffsetNormals) {
  // Independent check: the normal of the offset surface at distance t stays
  // parallel and its area element shrinks by (1 + t lambda)(1 + t mu).
  const auto s = ParametricSurface::ellipsoid(1.0, 1.5, 2.0);
  const ParamPoint p{0, 0.3, 0.8};
  const double h = 1e-6;
  const double t = 0.01;
  auto offset_area = [&](double tt) {
    auto pos = [&](double u, double v) {
      const auto f = evaluate_frame(s, {0, u, v});
      return Vec3(f.position + tt * f.normal);
    };
    const Vec3 xu = (pos(p.u + h, p.v) - pos(p.u - h, p.v)) / (2 * h);
    const Vec3 xv = (pos(p.u, p.v + h) - pos(p.u, p.v - h)) / (2 * h);
    return xu.cross(xv).norm();
  };
  const auto f = evaluate_frame(s, p);
  const double ratio = offset_area(t) / offset_area(0.0);
  EXPECT_NEAR(ratio, (1 + t * f.lambda) * (1 + t * f.mu), 1e-6);
  EXPECT_GE(f.H * f.H, 4 * f.K - 1e-12);
}

TEST(Frame, FlipNegatesHKeepsK) {
  const auto s = ParametricSurface::torus(2.0, 1.0);
  const auto fl = s.flipped();
  EXPECT_EQ(fl.orientation(), -1);
  const ParamPoint p{0, 0.4, 1.1};
  const auto a = evaluate_frame(s, p);
  const auto b = evaluate_frame(fl, p);
  EXPECT_NEAR(a.H, -b.H, 1e-14);
  EXPECT_NEAR(a.K, b.K, 1e-14);
  EXPECT_NEAR((a.normal + b.normal).norm(), 0.0, 1e-14);
}

TEST(Surface, ParseDescriptors) {
  EXPECT_EQ(ParametricSurface::parse("sphere:1").kind(), SurfaceKind::sphere);
  EXPECT_EQ(ParametricSurface::parse("torus:2,1").parameters().size(), 2u);
  EXPECT_EQ(ParametricSurface::parse("ellipsoid:1,2,3").kind(), SurfaceKind::ellipsoid);
  EXPECT_EQ(ParametricSurface::parse("flat:1").kind(), SurfaceKind::flat);
  EXPECT_THROW(ParametricSurface::parse("cube:1"), Error);
  EXPECT_THROW(ParametricSurface::parse("torus:1,2"), Error);
  EXPECT_THROW(ParametricSurface::parse("sphere:abc"), Error);
  EXPECT_THROW(ParametricSurface::parse("sphere"), Error);
  EXPECT_THROW(ParametricSurface::parse("sphere:-1"), Error);
}

TEST(Grid, ParseSpec) {
  const auto g = GridSpec::parse("64x128");
  EXPECT_EQ(g.nu, 64);
  EXPECT_EQ(g.nv, 128);
  EXPECT_EQ(g.str(), "64x128");
  EXPECT_THROW(GridSpec::parse("64"), Error);
  EXPECT_THROW(GridSpec::parse("0x4"), Error);
}

TEST(Integral, SphereAreaAndGaussBonnet) {
  const QuadratureGrid g(ParametricSurface::sphere(1.0), {64, 128});
  EXPECT_NEAR(integral(g, one), 4 * kPi, 1e-11);
  EXPECT_NEAR(g.area(), 4 * kPi, 1e-11);
  EXPECT_NEAR(integral(g, gauss), 4 * kPi, 1e-11);
  EXPECT_NEAR(integral(g, mean_sq), 16 * kPi, 1e-10);
}

TEST(Integral, TorusGaussBonnetAndWillmore) {
  const double R = std::sqrt(2.0);
  const QuadratureGrid g(ParametricSurface::torus(R, 1.0), {128, 128});
  EXPECT_NEAR(integral(g, one), 4 * kPi * kPi * R, 1e-10);
  EXPECT_NEAR(integral(g, gauss), 0.0, QuadratureGrid::kSelfConvergenceTolerance);
  // Willmore: int H^2/4 = pi^2 R^2 / (r sqrt(R^2 - r^2)).
  EXPECT_NEAR(integral(g, mean_sq) / 4.0, 2 * kPi * kPi, 1e-9);
}

TEST(Integral, EllipsoidGaussBonnetAndSelfConvergence) {
  const auto s = ParametricSurface::ellipsoid(1.0, 1.5, 2.0);
  const QuadratureGrid g(s, {64, 128});
  const QuadratureGrid g2(s, GridSpec{64, 128}.doubled());
  EXPECT_NEAR(integral(g, gauss), 4 * kPi, 1e-9);
  EXPECT_NEAR(integral(g, one), integral(g2, one), QuadratureGrid::kSelfConvergenceTolerance);
  EXPECT_NEAR(integral(g, mean_sq), integral(g2, mean_sq),
              QuadratureGrid::kSelfConvergenceTolerance * integral(g2, mean_sq));
}

TEST(Integral, OrientationFlipInvariance) {
  const auto s = ParametricSurface::ellipsoid(1.0, 1.5, 2.0);
  const QuadratureGrid a(s, {32, 64});
  const QuadratureGrid b(s.flipped(), {32, 64});
  EXPECT_NEAR(integral(a, mean_sq), integral(b, mean_sq), 1e-10 * integral(a, mean_sq));
  EXPECT_NEAR(integral(a, gauss), integral(b, gauss), 1e-10 * integral(a, gauss));
}

TEST(ParallelArea, SphereOffset) {
  const QuadratureGrid g(ParametricSurface::sphere(1.0), {32, 64});
  EXPECT_NEAR(parallel_area(g, 0.1), 4 * kPi * 1.21, 1e-11);
  EXPECT_NEAR(parallel_area(g, 0.0), g.area(), 1e-14);
  const double direct =
      surface_integral(g, [](const SurfaceSample& s) { return 1 + 0.1 * s.H + 0.01 * s.K; });
  EXPECT_NEAR(parallel_area(g, 0.1), direct, 1e-12);
  EXPECT_THROW(parallel_area(g, -1.5), Error);
}

TEST(ParallelArea, FlatIsConstant) {
  const QuadratureGrid g(ParametricSurface::flat(1.0), {8, 8});
  EXPECT_NEAR(parallel_area(g, 0.37), 1.0, 1e-14);
  EXPECT_NEAR(parallel_area(g, [](const SurfaceSample& s) { return s.position.x(); }), 1.0, 1e-14);
}

TEST(Reach, SphereExamples) {
  const QuadratureGrid g(ParametricSurface::sphere(1.0), {16, 32});
  const auto ok = reach_check(g, 0.5);
  EXPECT_TRUE(ok.pass);
  EXPECT_NEAR(ok.margin, 0.5, 1e-12);
  const auto bad = reach_check(g, 1.2);
  EXPECT_FALSE(bad.pass);
  EXPECT_NEAR(bad.critical_t, -1.0, 1e-12);
  EXPECT_FALSE(bad.message().empty());
  const QuadratureGrid flat(ParametricSurface::flat(1.0), {4, 4});
  EXPECT_TRUE(reach_check(flat, 100.0).pass);
}

TEST(Normalize, SphereRadius) {
  const auto n = normalize_to_unit_mass(ParametricSurface::sphere(1.0));
  EXPECT_NEAR(n.scale, 1.0 / std::sqrt(8 * kPi), 1e-15);
  const QuadratureGrid g(n.surface, {32, 64});
  EXPECT_NEAR(g.area(), 0.5, 1e-13);
  const auto again = normalize_to_unit_mass(n.surface);
  EXPECT_EQ(again.scale, 1.0);
}

TEST(Normalize, CliffordTorusScale) {
  const double R = std::sqrt(2.0);
  const auto n = normalize_to_unit_mass(ParametricSurface::torus(R, 1.0));
  EXPECT_NEAR(4 * kPi * kPi * R * n.scale * n.scale, 0.5, 1e-14);
}

TEST(Normalize, ScaleInvariantIntegrals) {
  const auto s = ParametricSurface::ellipsoid(1.0, 1.5, 2.0);
  const auto n = normalize_to_unit_mass(s);
  const QuadratureGrid a(s, {32, 64});
  const QuadratureGrid b(n.surface, {32, 64});
  EXPECT_NEAR(integral(a, gauss), integral(b, gauss), 1e-10 * integral(a, gauss));
  EXPECT_NEAR(integral(a, mean_sq), integral(b, mean_sq), 1e-10 * integral(a, mean_sq));
}

TEST(Projection, ClosedFormsRecoverOffsets) {
  for (const char* d : {"sphere:1", "torus:2,1", "flat:1", "ellipsoid:1,1.5,2"}) {
    const auto s = normalize_to_unit_mass(ParametricSurface::parse(d)).surface;
    const ClosestPointLocator loc(s);
    const QuadratureGrid g(s, {8, 16});
    for (std::size_t i = 0; i < g.size(); i += 7) {
      const auto& n = g.nodes()[i];
      const double t = 0.01 * ((i % 5) - 2.0);
      const auto p = loc.project(n.position + t * n.normal);
      EXPECT_NEAR(p.offset, t, 1e-9) << d << " node " << i;
      EXPECT_NEAR((p.foot.position - n.position).norm(), 0.0, 1e-8) << d << " node " << i;
    }
  }
}
