#include "bilayer/bilayer_construction.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "bilayer/error.hpp"
#include "bilayer/numerics.hpp"

namespace bilayer::construction {

namespace {

constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

std::string node_label(std::size_t id) {
  return id == kNoNode ? std::string("off-grid point") : fmt::format("node {}", id);
}

double mass_or_reach(const ray::RayModel& ray, double t, const char* what, std::size_t id) {
  try {
    return ray::mass_of_length(ray, t);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::inadmissible_offset) throw;
    throw Error(ErrorKind::reach, fmt::format("{} = {} leaves the tube at {}", what, t, node_label(id)));
  }
}

double length_or_reach(const ray::RayModel& ray, double m, const char* what, std::size_t id) {
  try {
    return ray::length_of_mass(ray, m);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::inadmissible_offset) throw;
    throw Error(ErrorKind::reach,
                fmt::format("shell exceeds reach: {} with mass {} has no admissible offset at {}",
                            what, m, node_label(id)));
  }
}

double jacobian(const SurfaceSample& s, double t) { return 1.0 + t * s.H + t * t * s.K; }

}  // namespace

ray::RayModel normal_ray(double eps, const SurfaceSample& sample) {
  return ray::RayModel(eps, 1.0, sample.lambda, sample.mu);
}

BilayerProfile solve_thickness(const QuadratureGrid& grid, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw Error(ErrorKind::invalid_argument, "eps must be positive");
  }
  BilayerProfile p;
  p.eps = eps;
  p.area = grid.area();
  p.integral_K = geometry::surface_integral(grid, [](const SurfaceSample& s) { return s.K; });
  const double A = p.area;
  const double IK = p.integral_K;
  const double e2 = eps * eps;
  auto cubic = [&](double a) {
    const double q = 1.0 + a * e2;
    return (2.0 * A - 1.0) / e2 + 2.0 * A * a + (2.0 / 3.0) * IK * q * q * q;
  };

  p.a0 = -(2.0 / 3.0) * IK;
  double a = p.a0;
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    const double q = 1.0 + a * e2;
    const double g = cubic(a);
    const double dg = 2.0 * A + 2.0 * IK * e2 * q * q;
    if (!(dg > 0.0) || !std::isfinite(g)) break;
    const double da = g / dg;
    a -= da;
    p.newton_iterations = it;
    if (std::abs(da) <= 1e-14 * std::max(1.0, std::abs(a))) {
      converged = true;
      break;
    }
  }
  p.a = a;
  p.ell_plus = eps * (1.0 + a * e2);
  p.ell_minus = -p.ell_plus;
  if (!converged || !(p.ell_plus > 0.0) || !std::isfinite(p.ell_plus)) {
    throw Error(ErrorKind::thickness_solve,
                fmt::format("no positive half-thickness at eps = {} (a = {})", eps, a));
  }
  p.cubic_residual = std::abs(cubic(a)) / std::max(1.0, std::abs(a));

  const double lp = p.ell_plus;
  const auto reach = geometry::reach_check_span(
      grid, [lp](const SurfaceSample&) { return -lp; }, [lp](const SurfaceSample&) { return lp; });
  if (!reach.pass) {
    throw Error(ErrorKind::reach, fmt::format("inner band at eps = {}: {}", eps, reach.message()));
  }
  CompensatedSum mass;
  const auto nodes = grid.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto ray = normal_ray(eps, nodes[i]);
    mass += nodes[i].weight * (ray.mass_unchecked(p.ell_plus) - ray.mass_unchecked(p.ell_minus));
  }
  p.cond1_residual = std::abs(mass.value() - 1.0);
  return p;
}

NodeProfile solve_outer(const BilayerProfile& profile, const SurfaceSample& sample,
                        std::size_t node_id) {
  const auto ray = normal_ray(profile.eps, sample);
  NodeProfile n;
  n.node = node_id;
  n.m_ell_plus = mass_or_reach(ray, profile.ell_plus, "l+", node_id);
  n.m_ell_minus = mass_or_reach(ray, profile.ell_minus, "l-", node_id);

  n.L_plus = length_or_reach(ray, 2.0 + 1.5 * profile.eps * sample.H, "L+", node_id);
  n.m_L_plus = ray::mass_of_length(ray, n.L_plus);
  n.L_minus = length_or_reach(ray, n.m_L_plus - 2.0 * (n.m_ell_plus - n.m_ell_minus), "L-", node_id);
  n.m_L_minus = ray::mass_of_length(ray, n.L_minus);
  n.r = length_or_reach(ray, 2.0 * n.m_ell_plus - n.m_L_plus, "r", node_id);
  n.m_r = ray::mass_of_length(ray, n.r);

  n.delta_plus = n.m_L_plus - n.m_ell_plus;
  n.delta_minus = n.m_L_minus - n.m_ell_minus;
  n.cond2_residual =
      std::abs(n.m_L_plus - n.m_L_minus - 2.0 * (n.m_ell_plus - n.m_ell_minus));
  n.rp_residual = std::abs(n.m_L_plus - n.m_ell_plus - (n.m_ell_plus - n.m_r));

  if (!(n.L_minus < profile.ell_minus && profile.ell_minus < n.r && n.r < profile.ell_plus &&
        profile.ell_plus < n.L_plus)) {
    throw Error(ErrorKind::splitting_point,
                fmt::format("ordering L- < l- < r < l+ < L+ fails at {} (eps = {}, H = {:.6g}): "
                            "L- = {:.6g}, l- = {:.6g}, r = {:.6g}, l+ = {:.6g}, L+ = {:.6g}",
                            node_label(node_id), profile.eps, sample.H, n.L_minus,
                            profile.ell_minus, n.r, profile.ell_plus, n.L_plus));
  }
  return n;
}

Bilayer::Bilayer(std::shared_ptr<const QuadratureGrid> grid, double eps)
    : grid_(std::move(grid)), profile_(solve_thickness(*grid_, eps)) {
  const auto samples = grid_->nodes();
  nodes_.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { nodes_[i] = solve_outer(profile_, samples[i], i); });
  const auto reach = geometry::reach_check_span(
      *grid_, [&](const SurfaceSample& s) { return nodes_[&s - samples.data()].L_minus; },
      [&](const SurfaceSample& s) { return nodes_[&s - samples.data()].L_plus; });
  if (!reach.pass) {
    throw Error(ErrorKind::reach, fmt::format("outer shells at eps = {}: {}", eps, reach.message()));
  }
}

ray::RayModel Bilayer::ray(std::size_t node) const { return normal_ray(eps(), grid_->nodes()[node]); }

double Bilayer::max_cond2_residual() const {
  double r = 0.0;
  for (const auto& n : nodes_) r = std::max(r, n.cond2_residual);
  return r;
}

double Bilayer::max_rp_residual() const {
  double r = 0.0;
  for (const auto& n : nodes_) r = std::max(r, n.rp_residual);
  return r;
}

double transport_phi(const BilayerProfile& profile, const NodeProfile& node,
                     const ray::RayModel& ray, double t) {
  if (!(t > profile.ell_minus && t < profile.ell_plus)) {
    throw Error(ErrorKind::inadmissible_offset,
                fmt::format("t = {} outside the inner band ({}, {})", t, profile.ell_minus,
                            profile.ell_plus));
  }
  if (t == node.r) {
    throw Error(ErrorKind::splitting_point, fmt::format("t = r = {} at node {}", t, node.node));
  }
  const double m = ray::mass_of_length(ray, t);
  return ray::length_of_mass(ray, (t > node.r ? node.delta_plus : node.delta_minus) + m);
}

double transport_phi(const Bilayer& bilayer, std::size_t node, double t) {
  return transport_phi(bilayer.profile(), bilayer.nodes().at(node), bilayer.ray(node), t);
}

Masses band_masses(const Bilayer& bilayer) {
  CompensatedSum u;
  CompensatedSum v;
  const auto samples = bilayer.grid().nodes();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& n = bilayer.nodes()[i];
    u += samples[i].weight * (n.m_ell_plus - n.m_ell_minus);
    v += samples[i].weight * (n.delta_plus - n.delta_minus);
  }
  return {u.value(), v.value()};
}

Masses band_masses_by_length(const Bilayer& bilayer, int nodes) {
  const auto samples = bilayer.grid().nodes();
  const auto& p = bilayer.profile();
  const double inv_eps = 1.0 / p.eps;
  std::vector<double> u(samples.size());
  std::vector<double> v(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& n = bilayer.nodes()[i];
    auto density = [&](double t) { return inv_eps * jacobian(s, t); };
    u[i] = s.weight * gauss_integrate(density, p.ell_minus, p.ell_plus, nodes);
    v[i] = s.weight * (gauss_integrate(density, p.ell_plus, n.L_plus, nodes) +
                       gauss_integrate(density, n.L_minus, p.ell_minus, nodes));
  });
  return {ordered_sum(u), ordered_sum(v)};
}

PushforwardSides pushforward_check(const Bilayer& bilayer, const SpaceFunction& g, int nodes) {
  const auto samples = bilayer.grid().nodes();
  const auto& p = bilayer.profile();
  const double inv_eps = 1.0 / p.eps;
  std::vector<double> lhs(samples.size());
  std::vector<double> rhs(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto& s = samples[i];
    const auto& n = bilayer.nodes()[i];
    const auto ray = bilayer.ray(i);
    auto at = [&](double t) { return g(s.position + t * s.normal); };
    const double mapped =
        gauss_integrate([&](double m) { return at(ray::length_of_mass(ray, n.delta_plus + m)); },
                        n.m_r, n.m_ell_plus, nodes) +
        gauss_integrate([&](double m) { return at(ray::length_of_mass(ray, n.delta_minus + m)); },
                        n.m_ell_minus, n.m_r, nodes);
    auto shell = [&](double t) { return at(t) * inv_eps * jacobian(s, t); };
    const double target = gauss_integrate(shell, p.ell_plus, n.L_plus, nodes) +
                          gauss_integrate(shell, n.L_minus, p.ell_minus, nodes);
    lhs[i] = s.weight * mapped;
    rhs[i] = s.weight * target;
  });
  return {ordered_sum(lhs), ordered_sum(rhs)};
}

BandClassifier::BandClassifier(const Bilayer& bilayer)
    : bilayer_(bilayer), locator_(bilayer.grid().surface()) {
  for (const auto& n : bilayer.nodes()) {
    max_offset_ = std::max({max_offset_, std::abs(n.L_minus), std::abs(n.L_plus)});
  }
  max_offset_ *= 1.25;
}

BandQuery BandClassifier::classify(const Vec3& x) const {
  BandQuery q;
  q.projection = locator_.project(x);
  const double t = q.projection.offset;
  if (std::abs(t) > max_offset_) return q;
  const auto& p = bilayer_.profile();
  q.profile = solve_outer(p, q.projection.foot, kNoNode);
  if (t > p.ell_minus && t < p.ell_plus) {
    q.band = Band::u;
  } else if (t > p.ell_plus && t < q.profile.L_plus) {
    q.band = Band::v_plus;
  } else if (t > q.profile.L_minus && t < p.ell_minus) {
    q.band = Band::v_minus;
  }
  return q;
}

double BandClassifier::potential(const Vec3& x) const {
  const auto proj = locator_.project(x);
  const auto n = solve_outer(bilayer_.profile(), proj.foot, kNoNode);
  return -std::abs(proj.offset - n.r);
}

namespace {

struct Cell {
  Vec3 x;
  Band band;
  geometry::ParamPoint foot;
  double layer_offset;
};

struct PatchLayout {
  double length_u = 1.0;
  double length_v = 1.0;
};

std::vector<PatchLayout> patch_layouts(const QuadratureGrid& grid) {
  const auto& surface = grid.surface();
  std::vector<PatchLayout> out(surface.charts().size());
  std::vector<CompensatedSum> area(out.size());
  std::vector<CompensatedSum> circ(out.size());
  for (const auto& s : grid.nodes()) {
    const auto c = static_cast<std::size_t>(s.params.chart);
    const auto j = surface.jet(s.params.chart, s.params.u, s.params.v);
    area[c] += s.weight;
    circ[c] += s.weight * j.xv.norm() * surface.charts()[c].v.length();
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double a = area[c].value();
    out[c].length_v = a > 0.0 ? circ[c].value() / a : 1.0;
    out[c].length_u = out[c].length_v > 0.0 ? a / out[c].length_v : 1.0;
  }
  return out;
}

int bin_of(double x, const geometry::Axis& axis, int n) {
  const int k = static_cast<int>(std::floor((x - axis.lo) / axis.length() * n));
  return std::clamp(k, 0, n - 1);
}

}  // namespace

Voxelization voxelize(const Bilayer& bilayer, const VoxelOptions& options) {
  const double h = options.h;
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::invalid_argument, "voxel h must be positive");
  const auto& grid = bilayer.grid();
  const auto& surface = grid.surface();
  const auto& p = bilayer.profile();

  double ext = 0.0;
  for (const auto& n : bilayer.nodes()) ext = std::max({ext, std::abs(n.L_minus), std::abs(n.L_plus)});
  ext += h;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& s : grid.nodes()) {
    lo = lo.cwiseMin(s.position);
    hi = hi.cwiseMax(s.position);
  }
  lo.array() -= ext;
  hi.array() += ext;
  if (surface.kind() == geometry::SurfaceKind::flat) {
    // One fundamental cell of the periodic square.
    const double side = surface.parameters()[0] * surface.scale();
    lo.x() = lo.y() = 0.0;
    hi.x() = hi.y() = side;
  }
  long k_lo[3];
  long k_hi[3];
  for (int d = 0; d < 3; ++d) {
    k_lo[d] = static_cast<long>(std::floor(lo[d] / h));
    k_hi[d] = static_cast<long>(std::ceil(hi[d] / h));
  }
  const bool flat = surface.kind() == geometry::SurfaceKind::flat;
  const std::size_t nx = static_cast<std::size_t>(k_hi[0] - k_lo[0]);
  const std::size_t cells_total = nx * static_cast<std::size_t>(k_hi[1] - k_lo[1]) *
                                  static_cast<std::size_t>(k_hi[2] - k_lo[2]);
  if (cells_total > 50'000'000) {
    throw Error(ErrorKind::size_cap, fmt::format("voxel box of {} cells is too large", cells_total));
  }

  const BandClassifier classifier(bilayer);
  std::vector<std::vector<Cell>> slabs(nx);
  parallel_for(nx, [&](std::size_t ix) {
    const long kx = k_lo[0] + static_cast<long>(ix);
    for (long ky = k_lo[1]; ky < k_hi[1]; ++ky) {
      for (long kz = k_lo[2]; kz < k_hi[2]; ++kz) {
        const Vec3 x((kx + 0.5) * h, (ky + 0.5) * h, (kz + 0.5) * h);
        if (flat && (x.x() >= hi.x() || x.y() >= hi.y() || x.x() < 0.0 || x.y() < 0.0)) continue;
        const auto q = classifier.classify(x);
        if (q.band == Band::none) continue;
        slabs[ix].push_back({x, q.band, q.projection.foot.params, q.projection.offset - q.profile.r});
      }
    }
  });
  std::vector<Cell> cells;
  for (auto& s : slabs) cells.insert(cells.end(), s.begin(), s.end());

  Voxelization out;
  const double w = h * h * h / p.eps;
  for (const auto& c : cells) {
    if (c.band == Band::u) {
      ++out.raw_count_u;
    } else {
      ++out.raw_count_v;
    }
  }
  out.raw_mass_u = static_cast<double>(out.raw_count_u) * w;
  out.raw_mass_v = static_cast<double>(out.raw_count_v) * w;
  if (out.raw_count_u == 0 || out.raw_count_v == 0) {
    throw Error(ErrorKind::voxelization,
                fmt::format("h = {} leaves a band empty ({} u cells, {} v cells)", h,
                            out.raw_count_u, out.raw_count_v));
  }

  if (out.raw_count_u <= options.cap && out.raw_count_v <= options.cap) {
    for (const auto& c : cells) (c.band == Band::u ? out.u : out.v).add(c.x, w);
  } else {
    const auto layouts = patch_layouts(grid);
    using Key = std::tuple<int, int, int, int, long>;
    struct Acc {
      double w = 0.0;
      Vec3 wx = Vec3::Zero();
    };
    bool fits = false;
    for (double factor = 1.0; factor <= 64.0 && !fits; factor += 0.25) {
      std::map<Key, Acc> groups_u;
      std::map<Key, Acc> groups_v;
      for (const auto& c : cells) {
        const auto& chart = surface.charts()[static_cast<std::size_t>(c.foot.chart)];
        const auto& lay = layouts[static_cast<std::size_t>(c.foot.chart)];
        const int nu = std::max(1, static_cast<int>(std::floor(lay.length_u / (factor * h))));
        const int nv = std::max(1, static_cast<int>(std::floor(lay.length_v / (factor * h))));
        const Key key{static_cast<int>(c.band), c.foot.chart, bin_of(c.foot.u, chart.u, nu),
                      bin_of(c.foot.v, chart.v, nv),
                      static_cast<long>(std::floor(c.layer_offset / h))};
        auto& acc = (c.band == Band::u ? groups_u : groups_v)[key];
        acc.w += w;
        acc.wx += w * c.x;
      }
      if (groups_u.size() <= options.cap && groups_v.size() <= options.cap) {
        fits = true;
        out.patch_factor = factor;
        for (const auto& [key, acc] : groups_u) out.u.add(acc.wx / acc.w, acc.w);
        for (const auto& [key, acc] : groups_v) out.v.add(acc.wx / acc.w, acc.w);
      }
    }
    if (!fits) {
      throw Error(ErrorKind::size_cap,
                  fmt::format("thinning cannot bring {} / {} cells under the cap {}",
                              out.raw_count_u, out.raw_count_v, options.cap));
    }
  }
  out.u.normalize();
  out.v.normalize();
  return out;
}

}  // namespace bilayer::construction
