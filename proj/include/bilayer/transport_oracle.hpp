#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace bilayer::transport {

using Vec3 = Eigen::Vector3d;

/// Weighted point cloud. One-dimensional data lives on the x axis.
struct DiscreteMeasure {
  std::vector<Vec3> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total() const;
  void add(const Vec3& x, double w) {
    points.push_back(x);
    weights.push_back(w);
  }
  /// Rescales the weights to total one.
  void normalize();
};

struct PlanEntry {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

struct TransportPlan {
  std::vector<PlanEntry> entries;
  double cost = 0.0;
};

struct EmdOptions {
  std::size_t cap = 4000;
  /// Allowed relative difference between the two total masses.
  double mass_tolerance = 1e-12;
};

/// Exact Wasserstein-1 distance under the Euclidean ground cost, by the
/// primal network simplex on the complete bipartite graph (block-search
/// pricing, strongly feasible spanning trees, lowest-index tie breaking).
TransportPlan emd(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                  const EmdOptions& options = {});

struct DualCertificate {
  double dual_value = 0.0;
  /// Largest relative violation of the 1-Lipschitz condition over cross pairs.
  double eta = 0.0;
  /// dual_value / (1 + max(eta, 0)); zero if eta is infinite.
  double bound = 0.0;
};

using Potential = std::function<double(const Vec3&)>;

DualCertificate dual_certificate(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const Potential& potential);

/// Cost of the monotone coupling of two measures on the x axis.
double monotone_1d(const DiscreteMeasure& f_plus, const DiscreteMeasure& f_minus,
                   double mass_tolerance = 1e-12);

/// CSV rows "x,y,z,weight" with a header line.
void write_measure_csv(std::ostream& out, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_csv(std::istream& in);
/// CSV rows "i,j,mass" with a header line.
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

}  // namespace bilayer::transport
