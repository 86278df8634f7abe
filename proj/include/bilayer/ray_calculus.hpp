#pragma once

#include <Eigen/Dense>

#include <limits>

namespace bilayer::ray {

/// One transport ray: thickness scale eps, cosine theta.nu and the two
/// eigenvalues of the direction-field derivative transverse to the ray.
class RayModel {
 public:
  RayModel(double eps, double cos_theta, double lambda, double mu);

  double eps() const { return eps_; }
  double cos_theta() const { return cos_theta_; }
  double lambda() const { return lambda_; }
  double mu() const { return mu_; }
  double H() const { return lambda_ + mu_; }
  double K() const { return lambda_ * mu_; }

  /// Open interval of offsets with 1 + t lambda > 0 and 1 + t mu > 0.
  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  bool admissible(double t) const { return t > t_min_ && t < t_max_; }

  /// Image of the admissible interval under the mass coordinate.
  double m_min() const { return m_min_; }
  double m_max() const { return m_max_; }
  bool in_range(double m) const { return m > m_min_ && m < m_max_; }

  /// (cos_theta / eps)(t + t^2 H/2 + t^3 K/3) without the range check.
  double mass_unchecked(double t) const;
  /// d(mass)/dt = (cos_theta / eps)(1 + t lambda)(1 + t mu).
  double mass_rate(double t) const;

 private:
  double eps_;
  double cos_theta_;
  double lambda_;
  double mu_;
  double t_min_ = -std::numeric_limits<double>::infinity();
  double t_max_ = std::numeric_limits<double>::infinity();
  double m_min_ = -std::numeric_limits<double>::infinity();
  double m_max_ = std::numeric_limits<double>::infinity();
};

/// Mass coordinate of the offset t. Throws ErrorKind::inadmissible_offset
/// outside the admissible interval.
double mass_of_length(const RayModel& ray, double t);

/// Inverse of mass_of_length by safeguarded Newton (tolerance 1e-13 eps).
double length_of_mass(const RayModel& ray, double m);

struct TDerivatives {
  double t = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// t(m) and its first three derivatives in m.
TDerivatives t_derivatives(const RayModel& ray, double m);

/// Third-order expansion eps m - (eps^2/2) H m^2 + (eps^3/6)(3H^2 - 2K) m^3.
/// Requires cos_theta == 1.
double taylor_t(const RayModel& ray, double m);

/// (1/4)(tr A)^2 - (1/6) tr(cof A).
double Q_matrix(const Eigen::Matrix3d& A);

/// (1/4)(lambda + mu)^2 - (1/6) lambda mu.
double Q_eigen(double lambda, double mu);
/// (1/6)(lambda + mu)^2 + (1/12)(lambda^2 + mu^2); equal to Q_eigen.
double Q_eigen_sum_of_squares(double lambda, double mu);

struct GapBound {
  double gap = 0.0;
  double bound = 0.0;
};

/// gap = t(m) - t(-m); bound = 2 eps m / c + 4 eps^3 Q m^3 / c^3 with c = cos_theta.
GapBound ray_gap_lower_bound(const RayModel& ray, double m);

struct QuinticSides {
  double lhs = 0.0;
  double rhs = 0.0;
};

QuinticSides quintic_identity(double xi, double eta);

}  // namespace bilayer::ray
