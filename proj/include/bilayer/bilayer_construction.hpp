#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "bilayer/ray_calculus.hpp"
#include "bilayer/surface_geometry.hpp"
#include "bilayer/transport_oracle.hpp"

namespace bilayer::construction {

using geometry::QuadratureGrid;
using geometry::SurfaceSample;
using geometry::Vec3;

/// Global thickness data: l+ = eps + a eps^3, l- = -l+.
struct BilayerProfile {
  double eps = 0.0;
  double ell_plus = 0.0;
  double ell_minus = 0.0;
  double a = 0.0;
  /// Starting value -(2/3) int K.
  double a0 = 0.0;
  double area = 0.0;
  double integral_K = 0.0;
  /// |residual| of the thickness cubic at a.
  double cubic_residual = 0.0;
  /// |int (m(l+) - m(l-)) - 1|.
  double cond1_residual = 0.0;
  int newton_iterations = 0;
};

/// Outer shell data on the ray through one surface point.
struct NodeProfile {
  std::size_t node = 0;
  double L_plus = 0.0;
  double L_minus = 0.0;
  double r = 0.0;
  double m_ell_plus = 0.0;
  double m_ell_minus = 0.0;
  double m_L_plus = 0.0;
  double m_L_minus = 0.0;
  double m_r = 0.0;
  double delta_plus = 0.0;
  double delta_minus = 0.0;
  /// |m(L+) - m(L-) - 2 (m(l+) - m(l-))|
  double cond2_residual = 0.0;
  /// |m(L+) - m(l+) - (m(l+) - m(r))|
  double rp_residual = 0.0;
};

/// Ray along the surface normal (theta.nu = 1).
ray::RayModel normal_ray(double eps, const SurfaceSample& sample);

/// Solves the area-weighted thickness cubic
///   (2A - 1)/eps^2 + 2 A a + (2/3)(1 + a eps^2)^3 int K = 0
/// by Newton from a(0) (A = grid area, 1/2 after normalization), so that the
/// total mass condition holds on the grid to rounding.
BilayerProfile solve_thickness(const QuadratureGrid& grid, double eps);

/// L+ from m(L+) = 2 + (3 eps / 2) H, L- from the shell mass balance and the
/// splitting offset r from m(r) = 2 m(l+) - m(L+).
/// Throws ErrorKind::reach if a shell leaves the tube and
/// ErrorKind::splitting_point if the ordering L- < l- < r < l+ < L+ fails.
NodeProfile solve_outer(const BilayerProfile& profile, const SurfaceSample& sample,
                        std::size_t node_id);

/// Complete construction on a grid of a normalized surface.
class Bilayer {
 public:
  Bilayer(std::shared_ptr<const QuadratureGrid> grid, double eps);

  const QuadratureGrid& grid() const { return *grid_; }
  std::shared_ptr<const QuadratureGrid> grid_ptr() const { return grid_; }
  const BilayerProfile& profile() const { return profile_; }
  const std::vector<NodeProfile>& nodes() const { return nodes_; }
  double eps() const { return profile_.eps; }
  ray::RayModel ray(std::size_t node) const;

  double max_cond2_residual() const;
  double max_rp_residual() const;

 private:
  std::shared_ptr<const QuadratureGrid> grid_;
  BilayerProfile profile_;
  std::vector<NodeProfile> nodes_;
};

/// phi_p(t) = t(delta+ + m(t)) for r < t < l+, t(delta- + m(t)) for l- < t < r.
double transport_phi(const BilayerProfile& profile, const NodeProfile& node,
                     const ray::RayModel& ray, double t);
double transport_phi(const Bilayer& bilayer, std::size_t node, double t);

struct Masses {
  double u = 0.0;
  double v = 0.0;
};

/// Band masses from the mass coordinates.
Masses band_masses(const Bilayer& bilayer);
/// Band masses by Gauss-Legendre in the offset of (1/eps)(1 + tH + t^2 K).
Masses band_masses_by_length(const Bilayer& bilayer, int nodes = 32);

using SpaceFunction = std::function<double(const Vec3&)>;

struct PushforwardSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = int g(Phi(x)) u dx through the map in mass coordinates,
/// rhs = int g(y) v dy through the offset parametrization of the shells.
PushforwardSides pushforward_check(const Bilayer& bilayer, const SpaceFunction& g,
                                   int nodes = 48);

enum class Band { none, u, v_plus, v_minus };

/// Band membership of a point from its nearest-point projection.
struct BandQuery {
  Band band = Band::none;
  geometry::Projection projection;
  NodeProfile profile;
};

class BandClassifier {
 public:
  explicit BandClassifier(const Bilayer& bilayer);
  BandQuery classify(const Vec3& x) const;
  /// -|t - r(p)| at x = p + t nu(p): decreases at unit rate away from the
  /// splitting surface along each normal ray.
  double potential(const Vec3& x) const;

 private:
  const Bilayer& bilayer_;
  geometry::ClosestPointLocator locator_;
  double max_offset_ = 0.0;
};

struct VoxelOptions {
  double h = 0.0;
  std::size_t cap = 4000;
};

struct Voxelization {
  transport::DiscreteMeasure u;
  transport::DiscreteMeasure v;
  /// Cell counts and masses (count h^3 / eps) before thinning and rescaling.
  std::size_t raw_count_u = 0;
  std::size_t raw_count_v = 0;
  double raw_mass_u = 0.0;
  double raw_mass_v = 0.0;
  /// Tangential patch size in units of h (0 when no thinning was needed).
  double patch_factor = 0.0;
};

/// Cell centers (k + 1/2) h inside the bands receive weight h^3 / eps. If a
/// measure exceeds the cap, cells are grouped by (band, tangential patch of
/// the foot point, offset layer of width h) and each group is replaced by its
/// weighted centroid; the patch grows until both measures fit. Each measure
/// is rescaled to total one.
Voxelization voxelize(const Bilayer& bilayer, const VoxelOptions& options);

}  // namespace bilayer::construction
