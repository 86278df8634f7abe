#include "bilayer/surface_geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "bilayer/error.hpp"
#include "bilayer/numerics.hpp"

namespace bilayer::geometry {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// (z, phi) chart of an axis-aligned ellipsoid; z = cos(colatitude) so the
// poles are never quadrature nodes.
Chart ellipsoid_chart(double a, double b, double c) {
  Chart chart;
  chart.name = "cos-colatitude x longitude";
  chart.u = {-1.0, 1.0, AxisRule::gauss_legendre};
  chart.v = {0.0, kTwoPi, AxisRule::periodic_trapezoid};
  chart.normal_sign = -1;
  chart.jet = [a, b, c](double z, double phi) {
    const double s = std::sqrt((1.0 - z) * (1.0 + z));
    const double cp = std::cos(phi);
    const double sp = std::sin(phi);
    const double ds = -z / s;
    const double dds = -1.0 / (s * s * s);
    ChartJet j;
    j.x = {a * s * cp, b * s * sp, c * z};
    j.xu = {a * ds * cp, b * ds * sp, c};
    j.xv = {-a * s * sp, b * s * cp, 0.0};
    j.xuu = {a * dds * cp, b * dds * sp, 0.0};
    j.xuv = {-a * ds * sp, b * ds * cp, 0.0};
    j.xvv = {-a * s * cp, -b * s * sp, 0.0};
    return j;
  };
  return chart;
}

Chart torus_chart(double R, double r) {
  Chart chart;
  chart.name = "toroidal x poloidal";
  chart.u = {0.0, kTwoPi, AxisRule::periodic_trapezoid};
  chart.v = {0.0, kTwoPi, AxisRule::periodic_trapezoid};
  chart.normal_sign = 1;
  chart.jet = [R, r](double u, double v) {
    const double cu = std::cos(u);
    const double su = std::sin(u);
    const double cv = std::cos(v);
    const double sv = std::sin(v);
    const double rho = R + r * cv;
    ChartJet j;
    j.x = {rho * cu, rho * su, r * sv};
    j.xu = {-rho * su, rho * cu, 0.0};
    j.xv = {-r * sv * cu, -r * sv * su, r * cv};
    j.xuu = {-rho * cu, -rho * su, 0.0};
    j.xuv = {r * sv * su, -r * sv * cu, 0.0};
    j.xvv = {-r * cv * cu, -r * cv * su, -r * sv};
    return j;
  };
  return chart;
}

Chart flat_chart(double side) {
  Chart chart;
  chart.name = "periodic square";
  chart.u = {0.0, side, AxisRule::periodic_trapezoid};
  chart.v = {0.0, side, AxisRule::periodic_trapezoid};
  chart.normal_sign = 1;
  chart.jet = [](double u, double v) {
    ChartJet j;
    j.x = {u, v, 0.0};
    j.xu = Vec3::UnitX();
    j.xv = Vec3::UnitY();
    j.xuu = j.xuv = j.xvv = Vec3::Zero();
    return j;
  };
  return chart;
}

std::vector<double> parse_numbers(std::string_view text, std::string_view descriptor) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token(text.substr(pos, comma - pos));
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("bad number '{}' in surface descriptor '{}'", token, descriptor));
    }
    pos = comma + 1;
  }
  return values;
}

std::string fmt_num(double x) { return fmt::format("{}", x); }

double wrap(double x, const Axis& axis) {
  if (!axis.periodic()) return x;
  double y = std::fmod(x - axis.lo, axis.length());
  if (y < 0.0) y += axis.length();
  return axis.lo + y;
}

}  // namespace

// ---------------------------------------------------------------------------
// ParametricSurface

ParametricSurface::ParametricSurface(SurfaceKind kind, std::string descriptor,
                                     std::vector<double> params, std::vector<Chart> charts)
    : kind_(kind), descriptor_(std::move(descriptor)), params_(std::move(params)),
      charts_(std::move(charts)) {}

ParametricSurface ParametricSurface::sphere(double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::invalid_argument, "sphere radius must be positive");
  return {SurfaceKind::sphere, "sphere:" + fmt_num(radius), {radius},
          {ellipsoid_chart(radius, radius, radius)}};
}

ParametricSurface ParametricSurface::torus(double major, double minor) {
  if (!(minor > 0.0) || !(major > minor)) {
    throw Error(ErrorKind::invalid_argument, "torus needs R > r > 0");
  }
  return {SurfaceKind::torus, "torus:" + fmt_num(major) + "," + fmt_num(minor), {major, minor},
          {torus_chart(major, minor)}};
}

ParametricSurface ParametricSurface::ellipsoid(double a, double b, double c) {
  if (!(a > 0.0 && b > 0.0 && c > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "ellipsoid semi-axes must be positive");
  }
  return {SurfaceKind::ellipsoid, "ellipsoid:" + fmt_num(a) + "," + fmt_num(b) + "," + fmt_num(c),
          {a, b, c}, {ellipsoid_chart(a, b, c)}};
}

ParametricSurface ParametricSurface::flat(double side) {
  if (!(side > 0.0)) throw Error(ErrorKind::invalid_argument, "flat side must be positive");
  return {SurfaceKind::flat, "flat:" + fmt_num(side), {side}, {flat_chart(side)}};
}

ParametricSurface ParametricSurface::parse(std::string_view descriptor) {
  const std::size_t colon = descriptor.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("surface descriptor '{}' lacks ':'", descriptor));
  }
  const std::string_view name = descriptor.substr(0, colon);
  const std::vector<double> p = parse_numbers(descriptor.substr(colon + 1), descriptor);
  auto expect = [&](std::size_t n) {
    if (p.size() != n) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("'{}' expects {} parameter(s)", name, n));
    }
  };
  if (name == "sphere") {
    expect(1);
    return sphere(p[0]);
  }
  if (name == "torus") {
    expect(2);
    return torus(p[0], p[1]);
  }
  if (name == "ellipsoid") {
    expect(3);
    return ellipsoid(p[0], p[1], p[2]);
  }
  if (name == "flat") {
    expect(1);
    return flat(p[0]);
  }
  throw Error(ErrorKind::invalid_argument, fmt::format("unknown surface kind '{}'", name));
}

int ParametricSurface::euler_characteristic() const {
  switch (kind_) {
    case SurfaceKind::sphere:
    case SurfaceKind::ellipsoid: return 2;
    case SurfaceKind::torus:
    case SurfaceKind::flat: return 0;
  }
  return 0;
}

ParametricSurface ParametricSurface::flipped() const {
  ParametricSurface copy = *this;
  copy.orientation_ = -orientation_;
  return copy;
}

ParametricSurface ParametricSurface::scaled(double factor) const {
  if (!(factor > 0.0)) throw Error(ErrorKind::invalid_argument, "scale factor must be positive");
  ParametricSurface copy = *this;
  copy.scale_ = scale_ * factor;
  return copy;
}

ChartJet ParametricSurface::jet(int chart, double u, double v) const {
  ChartJet j = charts_.at(static_cast<std::size_t>(chart)).jet(u, v);
  if (scale_ != 1.0) {
    j.x *= scale_;
    j.xu *= scale_;
    j.xv *= scale_;
    j.xuu *= scale_;
    j.xuv *= scale_;
    j.xvv *= scale_;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Frames

SurfaceSample evaluate_frame(const ParametricSurface& surface, const ParamPoint& params) {
  const Chart& chart = surface.charts().at(static_cast<std::size_t>(params.chart));
  const ChartJet j = surface.jet(params.chart, params.u, params.v);

  const double E = j.xu.dot(j.xu);
  const double F = j.xu.dot(j.xv);
  const double G = j.xv.dot(j.xv);
  const double det_g = E * G - F * F;
  if (!std::isfinite(det_g) || !(E > 0.0) || !(G > 0.0) || !(det_g > 1e-12 * E * G)) {
    throw Error(ErrorKind::degenerate_metric,
                fmt::format("non-immersion point on chart '{}' of {} at (u, v) = ({}, {})",
                            chart.name, surface.descriptor(), params.u, params.v));
  }

  const Vec3 cross = j.xu.cross(j.xv);
  const Vec3 normal = (chart.normal_sign * surface.orientation()) * cross / cross.norm();

  // b_ij = -nu . x_ij so that d(nu) = W dx with W = g^{-1} b.
  const double b11 = -normal.dot(j.xuu);
  const double b12 = -normal.dot(j.xuv);
  const double b22 = -normal.dot(j.xvv);

  SurfaceSample s;
  s.params = params;
  s.position = j.x;
  s.normal = normal;
  s.H = (G * b11 - 2.0 * F * b12 + E * b22) / det_g;
  s.K = (b11 * b22 - b12 * b12) / det_g;
  // Split of the eigenvalues from the symmetric form of W in an orthonormal
  // tangent frame; sqrt(H^2/4 - K) would lose half the digits near umbilics.
  const double alpha = std::sqrt(E);
  const double beta = F / alpha;
  const double gamma = std::sqrt(det_g / E);
  Eigen::Matrix2d Pinv;
  Pinv << 1.0 / alpha, -beta / (alpha * gamma), 0.0, 1.0 / gamma;
  Eigen::Matrix2d B;
  B << b11, b12, b12, b22;
  const Eigen::Matrix2d S = Pinv.transpose() * B * Pinv;
  const double disc = std::hypot(0.5 * (S(0, 0) - S(1, 1)), S(0, 1));
  s.lambda = 0.5 * s.H + disc;
  s.mu = 0.5 * s.H - disc;
  return s;
}

// ---------------------------------------------------------------------------
// Grids

GridSpec GridSpec::parse(std::string_view text) {
  const std::size_t x = text.find('x');
  auto to_int = [&](std::string_view part) {
    int value = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), value);
    if (res.ec != std::errc() || res.ptr != part.data() + part.size() || value < 1) {
      throw Error(ErrorKind::invalid_argument,
                  fmt::format("grid spec '{}' must look like <n_u>x<n_v>", text));
    }
    return value;
  };
  if (x == std::string_view::npos) {
    throw Error(ErrorKind::invalid_argument,
                fmt::format("grid spec '{}' must look like <n_u>x<n_v>", text));
  }
  return {to_int(text.substr(0, x)), to_int(text.substr(x + 1))};
}

std::string GridSpec::str() const { return fmt::format("{}x{}", nu, nv); }

namespace {

struct AxisNodes {
  std::vector<double> x;
  std::vector<double> w;
};

AxisNodes axis_nodes(const Axis& axis, int n) {
  AxisNodes out;
  out.x.resize(n);
  out.w.resize(n);
  if (axis.periodic()) {
    const double h = axis.length() / n;
    for (int k = 0; k < n; ++k) {
      out.x[k] = axis.lo + (k + 0.5) * h;
      out.w[k] = h;
    }
  } else {
    const GaussRule& rule = gauss_legendre(n);
    const double half = 0.5 * axis.length();
    const double mid = 0.5 * (axis.lo + axis.hi);
    for (int k = 0; k < n; ++k) {
      out.x[k] = mid + half * rule.nodes[k];
      out.w[k] = half * rule.weights[k];
    }
  }
  return out;
}

}  // namespace

QuadratureGrid::QuadratureGrid(ParametricSurface surface, GridSpec spec)
    : surface_(std::move(surface)), spec_(spec) {
  if (spec_.nu < 1 || spec_.nv < 1) {
    throw Error(ErrorKind::invalid_argument, "grid node counts must be positive");
  }
  const auto& charts = surface_.charts();
  for (std::size_t c = 0; c < charts.size(); ++c) {
    const AxisNodes un = axis_nodes(charts[c].u, spec_.nu);
    const AxisNodes vn = axis_nodes(charts[c].v, spec_.nv);
    const std::size_t base = nodes_.size();
    nodes_.resize(base + un.x.size() * vn.x.size());
    parallel_for(un.x.size(), [&](std::size_t i) {
      for (std::size_t k = 0; k < vn.x.size(); ++k) {
        const ParamPoint p{static_cast<int>(c), un.x[i], vn.x[k]};
        SurfaceSample s = evaluate_frame(surface_, p);
        const ChartJet j = surface_.jet(p.chart, p.u, p.v);
        s.weight = un.w[i] * vn.w[k] * j.xu.cross(j.xv).norm();
        nodes_[base + i * vn.x.size() + k] = s;
      }
    });
  }
  CompensatedSum total;
  for (const auto& s : nodes_) total += s.weight;
  area_ = total.value();
}

double surface_integral(const QuadratureGrid& grid, const NodeFunction& integrand) {
  CompensatedSum sum;
  for (const auto& s : grid.nodes()) sum += s.weight * integrand(s);
  return sum.value();
}

double parallel_area(const QuadratureGrid& grid, const NodeFunction& offset) {
  CompensatedSum sum;
  const auto nodes = grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& s = nodes[i];
    const double t = offset(s);
    if (!(1.0 + t * s.lambda > 0.0) || !(1.0 + t * s.mu > 0.0)) {
      throw Error(ErrorKind::reach,
                  fmt::format("offset {} leaves the tubular neighbourhood at node {}", t, i));
    }
    sum += s.weight * (1.0 + t * s.H + t * t * s.K);
  }
  return sum.value();
}

double parallel_area(const QuadratureGrid& grid, double offset) {
  return parallel_area(grid, [offset](const SurfaceSample&) { return offset; });
}

std::string ReachReport::message() const {
  if (pass) return fmt::format("reach ok (margin {:.6g})", margin);
  return fmt::format("reach violated at node {} (margin {:.6g}, tube degenerates at t = {:.6g})",
                     worst_node, margin, critical_t);
}

ReachReport reach_check_span(const QuadratureGrid& grid, const NodeFunction& lo,
                             const NodeFunction& hi) {
  ReachReport report;
  report.margin = std::numeric_limits<double>::infinity();
  const auto nodes = grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& s = nodes[i];
    const double ends[2] = {lo(s), hi(s)};
    for (double kappa : {s.lambda, s.mu}) {
      for (double t : ends) {
        const double factor = 1.0 + t * kappa;
        if (factor < report.margin) {
          report.margin = factor;
          report.worst_node = i;
          report.critical_t =
              kappa != 0.0 ? -1.0 / kappa : std::numeric_limits<double>::infinity();
        }
      }
    }
  }
  if (nodes.empty()) report.margin = 1.0;
  report.pass = report.margin > 0.0;
  return report;
}

ReachReport reach_check(const QuadratureGrid& grid, double tmax) {
  if (!(tmax >= 0.0)) throw Error(ErrorKind::invalid_argument, "reach_check needs tmax >= 0");
  return reach_check_span(
      grid, [tmax](const SurfaceSample&) { return -tmax; },
      [tmax](const SurfaceSample&) { return tmax; });
}

// ---------------------------------------------------------------------------
// Normalization

double reference_area(const ParametricSurface& surface) {
  const auto& p = surface.parameters();
  const double s2 = surface.scale() * surface.scale();
  switch (surface.kind()) {
    case SurfaceKind::sphere: return 4.0 * std::numbers::pi * p[0] * p[0] * s2;
    case SurfaceKind::torus: return 4.0 * std::numbers::pi * std::numbers::pi * p[0] * p[1] * s2;
    case SurfaceKind::flat: return p[0] * p[0] * s2;
    case SurfaceKind::ellipsoid: return QuadratureGrid(surface, {256, 512}).area();
  }
  return 0.0;
}

NormalizedSurface normalize_to_unit_mass(const ParametricSurface& surface) {
  const double area = reference_area(surface);
  if (!(area > 0.0) || !std::isfinite(area)) {
    throw Error(ErrorKind::invalid_argument, "surface area must be finite and positive");
  }
  const double s = std::sqrt(0.5 / area);
  if (std::abs(s - 1.0) <= 1e-14) return {surface, 1.0};
  return {surface.scaled(s), s};
}

// ---------------------------------------------------------------------------
// Projection

ClosestPointLocator::ClosestPointLocator(ParametricSurface surface)
    : surface_(std::move(surface)) {
  if (surface_.kind() == SurfaceKind::ellipsoid) {
    const QuadratureGrid coarse(surface_, {32, 64});
    seeds_.assign(coarse.nodes().begin(), coarse.nodes().end());
  }
}

Projection ClosestPointLocator::project(const Vec3& x) const {
  const auto& p = surface_.parameters();
  const double s = surface_.scale();
  const int orient = surface_.orientation();
  ParamPoint foot;
  switch (surface_.kind()) {
    case SurfaceKind::sphere: {
      const double r = x.norm();
      const Vec3 dir = r > 0.0 ? Vec3(x / r) : Vec3::UnitX();
      foot.u = std::clamp(dir.z(), -1.0 + 1e-14, 1.0 - 1e-14);
      foot.v = wrap(std::atan2(dir.y(), dir.x()), surface_.charts()[0].v);
      Projection out{evaluate_frame(surface_, foot), orient * (r - p[0] * s)};
      return out;
    }
    case SurfaceKind::torus: {
      const double R = p[0] * s;
      const double r = p[1] * s;
      const double rho = std::hypot(x.x(), x.y());
      foot.u = wrap(std::atan2(x.y(), x.x()), surface_.charts()[0].u);
      foot.v = wrap(std::atan2(x.z(), rho - R), surface_.charts()[0].v);
      return {evaluate_frame(surface_, foot), orient * (std::hypot(rho - R, x.z()) - r)};
    }
    case SurfaceKind::flat: {
      const Axis& axis = surface_.charts()[0].u;
      // The chart axes are in unscaled units.
      foot.u = wrap(x.x() / s, axis);
      foot.v = wrap(x.y() / s, surface_.charts()[0].v);
      return {evaluate_frame(surface_, foot), orient * x.z()};
    }
    case SurfaceKind::ellipsoid: break;
  }

  // Damped Newton on f(u, v) = |x - X(u, v)|^2 / 2 from the nearest seed.
  const SurfaceSample* best = &seeds_.front();
  double best_d = (best->position - x).squaredNorm();
  for (const auto& seed : seeds_) {
    const double d = (seed.position - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = &seed;
    }
  }
  const Chart& chart = surface_.charts()[0];
  foot = best->params;
  double damping = 1e-3;
  for (int it = 0; it < 100; ++it) {
    const ChartJet j = surface_.jet(foot.chart, foot.u, foot.v);
    const Vec3 r = x - j.x;
    const double f = 0.5 * r.squaredNorm();
    Eigen::Vector2d grad(-r.dot(j.xu), -r.dot(j.xv));
    Eigen::Matrix2d hess;
    hess << j.xu.dot(j.xu) - r.dot(j.xuu), j.xu.dot(j.xv) - r.dot(j.xuv),
        j.xu.dot(j.xv) - r.dot(j.xuv), j.xv.dot(j.xv) - r.dot(j.xvv);
    bool accepted = false;
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix2d damped = hess;
      damped(0, 0) += damping * std::max(hess(0, 0), 1e-300);
      damped(1, 1) += damping * std::max(hess(1, 1), 1e-300);
      step = damped.ldlt().solve(-grad);
      ParamPoint trial = foot;
      trial.u = std::clamp(wrap(foot.u + step(0), chart.u), chart.u.lo + 1e-12, chart.u.hi - 1e-12);
      trial.v = std::clamp(wrap(foot.v + step(1), chart.v), chart.v.lo, chart.v.hi);
      const double ft = 0.5 * (x - surface_.jet(trial.chart, trial.u, trial.v).x).squaredNorm();
      if (ft <= f) {
        foot = trial;
        damping = std::max(damping * 0.1, 1e-12);
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted || step.norm() < 1e-15) break;
  }
  SurfaceSample frame = evaluate_frame(surface_, foot);
  const double offset = (x - frame.position).dot(frame.normal);
  return {frame, offset};
}

}  // namespace bilayer::geometry
