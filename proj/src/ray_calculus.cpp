#include "bilayer/ray_calculus.hpp"

#include <fmt/format.h>

#include <cmath>

#include "bilayer/error.hpp"
#include "bilayer/numerics.hpp"

namespace bilayer::ray {

RayModel::RayModel(double eps, double cos_theta, double lambda, double mu)
    : eps_(eps), cos_theta_(cos_theta), lambda_(lambda), mu_(mu) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::invalid_argument, "ray needs eps > 0");
  }
  if (!(cos_theta > 0.0 && cos_theta <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "ray needs 0 < theta.nu <= 1");
  }
  if (!std::isfinite(lambda) || !std::isfinite(mu)) {
    throw Error(ErrorKind::invalid_argument, "ray eigenvalues must be finite");
  }
  for (double kappa : {lambda, mu}) {
    if (kappa > 0.0) t_min_ = std::max(t_min_, -1.0 / kappa);
    if (kappa < 0.0) t_max_ = std::min(t_max_, -1.0 / kappa);
  }
  if (std::isfinite(t_min_)) m_min_ = mass_unchecked(t_min_);
  if (std::isfinite(t_max_)) m_max_ = mass_unchecked(t_max_);
}

double RayModel::mass_unchecked(double t) const {
  return cos_theta_ / eps_ * (t + t * t * (0.5 * H() + t * K() / 3.0));
}

double RayModel::mass_rate(double t) const {
  return cos_theta_ / eps_ * (1.0 + t * lambda_) * (1.0 + t * mu_);
}

double mass_of_length(const RayModel& ray, double t) {
  if (!ray.admissible(t)) {
    throw Error(ErrorKind::inadmissible_offset,
                fmt::format("t = {} outside the admissible interval ({}, {})", t, ray.t_min(),
                            ray.t_max()));
  }
  return ray.mass_unchecked(t);
}

double length_of_mass(const RayModel& ray, double m) {
  if (!ray.in_range(m)) {
    throw Error(ErrorKind::inadmissible_offset,
                fmt::format("mass {} outside the attainable range ({}, {})", m, ray.m_min(),
                            ray.m_max()));
  }
  const double x0 = ray.eps() * m / ray.cos_theta();
  const double scale = std::max(std::abs(x0), ray.eps());
  double lo = ray.t_min();
  double hi = ray.t_max();
  if (!std::isfinite(hi)) {
    hi = scale;
    while (ray.mass_unchecked(hi) < m) hi *= 2.0;
  }
  if (!std::isfinite(lo)) {
    lo = -scale;
    while (ray.mass_unchecked(lo) > m) lo *= 2.0;
  }
  const auto f_df = [&](double t) {
    return std::pair{ray.mass_unchecked(t) - m, ray.mass_rate(t)};
  };
  return safeguarded_newton(f_df, lo, hi, x0, 1e-13 * ray.eps()).x;
}

TDerivatives t_derivatives(const RayModel& ray, double m) {
  TDerivatives d;
  d.t = length_of_mass(ray, m);
  const double c = ray.cos_theta() / ray.eps();
  const double t = d.t;
  const double m1 = c * (1.0 + t * ray.H() + t * t * ray.K());
  const double m2 = c * (ray.H() + 2.0 * t * ray.K());
  const double m3 = 2.0 * c * ray.K();
  d.d1 = 1.0 / m1;
  d.d2 = -m2 / (m1 * m1 * m1);
  d.d3 = 3.0 * m2 * m2 / std::pow(m1, 5) - m3 / std::pow(m1, 4);
  return d;
}

double taylor_t(const RayModel& ray, double m) {
  if (ray.cos_theta() != 1.0) {
    throw Error(ErrorKind::invalid_argument, "taylor_t needs theta.nu = 1");
  }
  const double e = ray.eps();
  const double H = ray.H();
  return e * m - 0.5 * e * e * H * m * m + e * e * e / 6.0 * (3.0 * H * H - 2.0 * ray.K()) * m * m * m;
}

double Q_matrix(const Eigen::Matrix3d& A) {
  const double tr = A.trace();
  // tr(cof A) is the sum of the principal 2x2 minors.
  const double cof = A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1) + A(0, 0) * A(2, 2) -
                     A(0, 2) * A(2, 0) + A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  return 0.25 * tr * tr - cof / 6.0;
}

double Q_eigen(double lambda, double mu) {
  const double h = lambda + mu;
  return 0.25 * h * h - lambda * mu / 6.0;
}

double Q_eigen_sum_of_squares(double lambda, double mu) {
  const double h = lambda + mu;
  return h * h / 6.0 + (lambda * lambda + mu * mu) / 12.0;
}

GapBound ray_gap_lower_bound(const RayModel& ray, double m) {
  GapBound out;
  out.gap = length_of_mass(ray, m) - length_of_mass(ray, -m);
  const double e_c = ray.eps() / ray.cos_theta();
  out.bound = 2.0 * e_c * m + 4.0 * e_c * e_c * e_c * Q_eigen(ray.lambda(), ray.mu()) * m * m * m;
  return out;
}

QuinticSides quintic_identity(double xi, double eta) {
  const double s = xi + eta;
  const double s2 = s * s;
  const double p = xi * eta;
  return {21.0 * s2 * s2 - 42.0 * p * s2 + 8.0 * p * p,
          21.0 * (xi * xi + eta * eta) * s2 + 8.0 * p * p};
}

}  // namespace bilayer::ray
