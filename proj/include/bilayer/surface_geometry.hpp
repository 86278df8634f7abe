#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bilayer::geometry {

using Vec3 = Eigen::Vector3d;

/// Embedding and its first and second partial derivatives at a parameter point.
struct ChartJet {
  Vec3 x, xu, xv, xuu, xuv, xvv;
};

enum class AxisRule { gauss_legendre, periodic_trapezoid };

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  AxisRule rule = AxisRule::periodic_trapezoid;

  bool periodic() const { return rule == AxisRule::periodic_trapezoid; }
  double length() const { return hi - lo; }
};

struct Chart {
  std::string name;
  Axis u;
  Axis v;
  /// Sign making normal_sign * (xu x xv) the outward normal.
  int normal_sign = 1;
  std::function<ChartJet(double, double)> jet;
};

enum class SurfaceKind { sphere, torus, ellipsoid, flat };

/// Closed surface given by analytic charts.
///
/// Curvature convention: with unit normal nu, the shape operator W satisfies
/// d(nu) = W d(x), so the parallel surface x + t nu has area element
/// (1 + t lambda)(1 + t mu) and an outward-oriented sphere of radius R has
/// lambda = mu = +1/R. Flipping the orientation negates H and keeps K.
///
/// The flat fixture is a square with both axes identified. It is not a compact
/// embedded surface but every local offset formula is well defined on it.
class ParametricSurface {
 public:
  static ParametricSurface sphere(double radius);
  static ParametricSurface torus(double major, double minor);
  static ParametricSurface ellipsoid(double a, double b, double c);
  static ParametricSurface flat(double side);

  /// "sphere:R", "torus:R,r", "ellipsoid:a,b,c", "flat:side".
  static ParametricSurface parse(std::string_view descriptor);

  const std::vector<Chart>& charts() const { return charts_; }
  const std::string& descriptor() const { return descriptor_; }
  SurfaceKind kind() const { return kind_; }
  /// Shape parameters as given in the descriptor (unscaled).
  const std::vector<double>& parameters() const { return params_; }
  /// +1 for the outward normal, -1 after a flip.
  int orientation() const { return orientation_; }
  /// Uniform scale applied about the origin.
  double scale() const { return scale_; }
  int euler_characteristic() const;

  ParametricSurface flipped() const;
  ParametricSurface scaled(double factor) const;

  ChartJet jet(int chart, double u, double v) const;

 private:
  ParametricSurface(SurfaceKind kind, std::string descriptor, std::vector<double> params,
                    std::vector<Chart> charts);

  SurfaceKind kind_;
  std::string descriptor_;
  std::vector<double> params_;
  std::vector<Chart> charts_;
  int orientation_ = 1;
  double scale_ = 1.0;
};

struct ParamPoint {
  int chart = 0;
  double u = 0.0;
  double v = 0.0;
};

/// Evaluated frame at a parameter point. lambda >= mu.
struct SurfaceSample {
  ParamPoint params;
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double lambda = 0.0;
  double mu = 0.0;
  double H = 0.0;
  double K = 0.0;
  /// Quadrature weight in area units; zero outside a grid.
  double weight = 0.0;
};

/// Position, normal and principal curvatures from the fundamental forms.
/// Throws ErrorKind::degenerate_metric at non-immersion points.
SurfaceSample evaluate_frame(const ParametricSurface& surface, const ParamPoint& params);

struct GridSpec {
  int nu = 64;
  int nv = 128;

  /// "<n_u>x<n_v>"
  static GridSpec parse(std::string_view text);
  std::string str() const;
  GridSpec doubled() const { return {2 * nu, 2 * nv}; }
};

/// Tensor-product nodes per chart: Gauss-Legendre on bounded axes, the
/// periodic trapezoid rule (offset by half a step) on periodic axes.
class QuadratureGrid {
 public:
  /// Doubling the node counts changes integrals of smooth integrands on the
  /// built-in surfaces by less than this (relative to the integrand scale).
  static constexpr double kSelfConvergenceTolerance = 1e-9;

  QuadratureGrid(ParametricSurface surface, GridSpec spec);

  const ParametricSurface& surface() const { return surface_; }
  const GridSpec& spec() const { return spec_; }
  std::span<const SurfaceSample> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double area() const { return area_; }

 private:
  ParametricSurface surface_;
  GridSpec spec_;
  std::vector<SurfaceSample> nodes_;
  double area_ = 0.0;
};

using NodeFunction = std::function<double(const SurfaceSample&)>;

/// Weighted sum over the nodes in node order.
double surface_integral(const QuadratureGrid& grid, const NodeFunction& integrand);

/// Integral of the parallel-surface area element (1 + tH + t^2 K) with a
/// per-node offset. Throws ErrorKind::reach if an offset leaves the tube.
double parallel_area(const QuadratureGrid& grid, const NodeFunction& offset);
double parallel_area(const QuadratureGrid& grid, double offset);

struct ReachReport {
  bool pass = true;
  /// min over nodes and |t| <= tmax of min(1 + t lambda, 1 + t mu).
  double margin = 1.0;
  std::size_t worst_node = 0;
  /// Offset at which the worst node's tube degenerates (infinite if never).
  double critical_t = 0.0;
  std::string message() const;
};

ReachReport reach_check(const QuadratureGrid& grid, double tmax);

/// Same test on the per-node offset span [lo(p), hi(p)].
ReachReport reach_check_span(const QuadratureGrid& grid, const NodeFunction& lo,
                             const NodeFunction& hi);

/// Area from closed forms where available, otherwise from a 256x512 grid.
double reference_area(const ParametricSurface& surface);

struct NormalizedSurface {
  ParametricSurface surface;
  double scale = 1.0;
};

/// Scales about the origin so that the area is 1/2 (total mass one).
NormalizedSurface normalize_to_unit_mass(const ParametricSurface& surface);

struct Projection {
  SurfaceSample foot;
  /// Signed offset along the foot normal: x = foot + offset * normal.
  double offset = 0.0;
};

/// Nearest-point projection onto the surface. Closed form for sphere, torus
/// and flat fixture; damped Newton from the nearest coarse node otherwise.
class ClosestPointLocator {
 public:
  explicit ClosestPointLocator(ParametricSurface surface);
  Projection project(const Vec3& x) const;

 private:
  ParametricSurface surface_;
  std::vector<SurfaceSample> seeds_;
};

}  // namespace bilayer::geometry
