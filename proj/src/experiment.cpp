#include "bilayer/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

#include "bilayer/numerics.hpp"
#include "bilayer/transport_oracle.hpp"

namespace bilayer::experiment {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

void ExperimentConfig::validate() {
  if (eps.empty()) throw Error(ErrorKind::invalid_argument, "at least one eps is required");
  for (double e : eps) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw Error(ErrorKind::invalid_argument, fmt::format("eps = {} is not positive", e));
    }
  }
  std::sort(eps.begin(), eps.end(), std::greater<>());
  if (std::adjacent_find(eps.begin(), eps.end()) != eps.end()) {
    throw Error(ErrorKind::invalid_argument, "eps values must be distinct");
  }
  if (voxel_h < 0.0) throw Error(ErrorKind::invalid_argument, "voxel h must be >= 0");
  if (cap < 1) throw Error(ErrorKind::invalid_argument, "cap must be >= 1");
}

GridSpec default_grid(const geometry::ParametricSurface& surface) {
  switch (surface.kind()) {
    case geometry::SurfaceKind::sphere:
    case geometry::SurfaceKind::ellipsoid: return {64, 128};
    case geometry::SurfaceKind::torus: return {128, 128};
    case geometry::SurfaceKind::flat: return {16, 16};
  }
  return {};
}

std::shared_ptr<const QuadratureGrid> normalized_grid(const std::string& descriptor,
                                                      const std::optional<GridSpec>& grid) {
  const auto base = geometry::ParametricSurface::parse(descriptor);
  auto normalized = geometry::normalize_to_unit_mass(base).surface;
  const GridSpec spec = grid.value_or(default_grid(base));
  return std::make_shared<const QuadratureGrid>(std::move(normalized), spec);
}

std::optional<double> analytic_limit(const geometry::ParametricSurface& surface) {
  const auto& p = surface.parameters();
  switch (surface.kind()) {
    case geometry::SurfaceKind::sphere: return 20.0 * std::numbers::pi / 3.0;
    case geometry::SurfaceKind::torus: {
      const double R = p[0];
      const double r = p[1];
      return 2.0 * std::numbers::pi * std::numbers::pi * R * R / (r * std::sqrt(R * R - r * r));
    }
    case geometry::SurfaceKind::flat: return 0.0;
    case geometry::SurfaceKind::ellipsoid: return std::nullopt;
  }
  return std::nullopt;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::reach:
    case ErrorKind::inadmissible_offset:
    case ErrorKind::splitting_point: return 2;
    case ErrorKind::root_solve:
    case ErrorKind::thickness_solve: return 3;
    case ErrorKind::quadrature: return 4;
    case ErrorKind::invalid_argument:
    case ErrorKind::degenerate_metric:
    case ErrorKind::voxelization:
    case ErrorKind::size_cap:
    case ErrorKind::mass_mismatch: return kExitUsage;
  }
  return kExitUsage;
}

energy::EnergyReport run_energy(const ExperimentConfig& config, double eps) {
  const auto start = Clock::now();
  const auto grid = normalized_grid(config.surface, config.grid);
  const construction::Bilayer bilayer(grid, eps);
  auto report = energy::energy(bilayer);
  report.surface = config.surface;
  report.runtime_s = config.timing ? seconds_since(start) : 0.0;
  return report;
}

PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                       double zero_level) {
  PowerFit fit;
  fit.points = std::min(x.size(), y.size());
  if (fit.points < 2) {
    fit.degenerate = true;
    return fit;
  }
  for (std::size_t i = 0; i < fit.points; ++i) {
    if (!(y[i] > zero_level) || !(x[i] > 0.0)) {
      fit.degenerate = true;
      return fit;
    }
  }
  const double n = static_cast<double>(fit.points);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < fit.points; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.log_prefactor = (sy - fit.exponent * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < fit.points; ++i) {
    const double e = std::log(y[i]) - fit.log_prefactor - fit.exponent * std::log(x[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

Extrapolation extrapolate(const std::vector<double>& eps, const std::vector<double>& g) {
  if (eps.size() < 3 || eps.size() != g.size()) {
    throw Error(ErrorKind::invalid_argument, "extrapolation needs at least three eps values");
  }
  std::vector<std::size_t> idx(eps.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return eps[a] < eps[b]; });
  Eigen::Matrix3d A;
  Eigen::Vector3d rhs;
  for (int k = 0; k < 3; ++k) {
    const double e = eps[idx[k]];
    A(k, 0) = 1.0;
    A(k, 1) = e * e;
    A(k, 2) = e * e * e;
    rhs(k) = g[idx[k]];
  }
  Extrapolation out;
  out.three_point = A.colPivHouseholderQr().solve(rhs)(0);
  const double e1 = eps[idx[0]] * eps[idx[0]];
  const double e2 = eps[idx[1]] * eps[idx[1]];
  out.two_point = (g[idx[0]] * e2 - g[idx[1]] * e1) / (e2 - e1);
  out.residual = std::abs(out.three_point - out.two_point);
  return out;
}

ConvergenceRecord run_convergence(const ExperimentConfig& config) {
  ConvergenceRecord rec;
  rec.surface = config.surface;
  const auto grid = normalized_grid(config.surface, config.grid);
  rec.quadrature_limit = energy::limit_energy(*grid);
  rec.analytic_limit = analytic_limit(geometry::ParametricSurface::parse(config.surface));
  const double reference = rec.analytic_limit.value_or(rec.quadrature_limit);

  std::vector<double> eps_ok;
  std::vector<double> g_ok;
  std::vector<double> err_ok;
  for (double e : config.eps) {
    ConvergenceRow row;
    row.eps = e;
    try {
      const auto start = Clock::now();
      const construction::Bilayer bilayer(grid, e);
      auto report = energy::energy(bilayer);
      report.surface = config.surface;
      report.runtime_s = config.timing ? seconds_since(start) : 0.0;
      eps_ok.push_back(e);
      g_ok.push_back(report.g_eps);
      err_ok.push_back(std::abs(report.g_eps - reference));
      row.report = report;
    } catch (const Error& err) {
      row.error = err.what();
      row.error_code = exit_code(err.kind());
      if (rec.status == 0) rec.status = row.error_code;
    }
    rec.rows.push_back(std::move(row));
  }
  rec.fit = fit_power_law(eps_ok, err_ok, 1e-9);
  if (eps_ok.size() >= 3) rec.extrapolation = extrapolate(eps_ok, g_ok);
  return rec;
}

std::vector<LowerBoundRow> run_lowerbound(const ExperimentConfig& config) {
  const auto grid = normalized_grid(config.surface, config.grid);
  std::vector<LowerBoundRow> rows;
  for (double e : config.eps) {
    const construction::Bilayer bilayer(grid, e);
    LowerBoundRow row;
    row.eps = e;
    row.lower_rhs = energy::lower_bound_rhs(bilayer);
    const double f = energy::jump_area(bilayer) + energy::d1_construction_cost(bilayer).value / e;
    row.g_eps = (f - 2.0) / (e * e);
    row.slack = row.g_eps - row.lower_rhs;
    rows.push_back(row);
  }
  return rows;
}

bool EmdRow::dual_below_emd() const { return dual <= emd + 1e-12 * std::max(1.0, std::abs(emd)); }
bool EmdRow::emd_below_cost() const { return emd <= ray_cost * 1.10; }

namespace {

// Per-column ray discretization of the flat fixture: every column carries the
// same one-dimensional problem, scaled by the area.
EmdRow flat_ray_crosscheck(const construction::Bilayer& bilayer, double h, EmdRow row) {
  const auto& p = bilayer.profile();
  const auto& node = bilayer.nodes().front();
  const auto& s = bilayer.grid().nodes().front();
  const double area = bilayer.grid().area();
  auto fill = [&](transport::DiscreteMeasure& m, double a, double b) {
    const int n = std::max(1, static_cast<int>(std::lround((b - a) / h)));
    const double dt = (b - a) / n;
    for (int k = 0; k < n; ++k) {
      const double t = a + (k + 0.5) * dt;
      m.add(transport::Vec3(t, 0.0, 0.0), dt * (1.0 + t * s.H + t * t * s.K) / p.eps);
    }
  };
  transport::DiscreteMeasure u;
  transport::DiscreteMeasure v;
  fill(u, p.ell_minus, p.ell_plus);
  fill(v, node.L_minus, p.ell_minus);
  fill(v, p.ell_plus, node.L_plus);
  const double r = node.r;
  const double sweep = transport::monotone_1d(u, v, 1e-10);
  const auto plan = transport::emd(u, v, {std::max<std::size_t>(u.size(), v.size()), 1e-10});
  const auto cert =
      transport::dual_certificate(u, v, [r](const transport::Vec3& x) { return -std::abs(x.x() - r); });
  row.mode = "ray-column";
  row.emd = plan.cost * area;
  row.dual = cert.bound * area;
  row.eta = cert.eta;
  row.support_u = u.size();
  row.support_v = v.size();
  row.raw_mass_u = u.total() * area;
  row.raw_mass_v = v.total() * area;
  if (std::abs(sweep - plan.cost) > 1e-10 * std::max(1.0, plan.cost)) {
    throw Error(ErrorKind::mass_mismatch,
                fmt::format("monotone sweep {} and exact transport {} disagree", sweep, plan.cost));
  }
  return row;
}

}  // namespace

EmdRow run_emd_crosscheck(const ExperimentConfig& config, double eps) {
  const auto start = Clock::now();
  const auto grid = normalized_grid(config.surface, config.grid);
  const construction::Bilayer bilayer(grid, eps);
  EmdRow row;
  row.eps = eps;
  row.h = config.voxel_h > 0.0 ? config.voxel_h : eps / 4.0;
  row.ray_cost = energy::d1_construction_cost(bilayer).value;
  if (grid->surface().kind() == geometry::SurfaceKind::flat) {
    row = flat_ray_crosscheck(bilayer, row.h, row);
  } else {
    const auto vox = construction::voxelize(bilayer, {row.h, config.cap});
    const auto plan = transport::emd(vox.u, vox.v, {config.cap, 1e-12});
    const construction::BandClassifier classifier(bilayer);
    const auto cert = transport::dual_certificate(
        vox.u, vox.v, [&](const transport::Vec3& x) { return classifier.potential(x); });
    row.mode = "voxel";
    row.emd = plan.cost;
    row.dual = cert.bound;
    row.eta = cert.eta;
    row.support_u = vox.u.size();
    row.support_v = vox.v.size();
    row.raw_mass_u = vox.raw_mass_u;
    row.raw_mass_v = vox.raw_mass_v;
    row.patch_factor = vox.patch_factor;
  }
  row.seconds = config.timing ? seconds_since(start) : 0.0;
  return row;
}

std::vector<TestFunction> builtin_test_functions() {
  return {{"1", [](const geometry::Vec3&) { return 1.0; }},
          {"x3", [](const geometry::Vec3& x) { return x.z(); }},
          {"x3^2", [](const geometry::Vec3& x) { return x.z() * x.z(); }}};
}

std::vector<WeakstarSeries> run_weakstar(const ExperimentConfig& config) {
  const auto grid = normalized_grid(config.surface, config.grid);
  std::vector<construction::Bilayer> bilayers;
  bilayers.reserve(config.eps.size());
  for (double e : config.eps) bilayers.emplace_back(grid, e);
  std::vector<WeakstarSeries> out;
  for (const auto& f : builtin_test_functions()) {
    WeakstarSeries series;
    series.name = f.name;
    series.target = energy::weakstar_target(*grid, f.phi);
    for (const auto& b : bilayers) {
      series.eps.push_back(b.eps());
      series.errors.push_back(std::abs(energy::weakstar_integral(b, f.phi) - series.target));
    }
    series.fit = fit_power_law(series.eps, series.errors);
    out.push_back(std::move(series));
  }
  return out;
}

std::vector<RayCheckRow> run_ray_check(const ExperimentConfig& config) {
  const auto grid = normalized_grid(config.surface, config.grid);
  const auto nodes = grid->nodes();
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / 16);
  std::vector<RayCheckRow> rows;
  for (double e : config.eps) {
    for (std::size_t i = 0; i < nodes.size(); i += stride) {
      const auto ray = construction::normal_ray(e, nodes[i]);
      for (double m : {0.25, 0.5, 0.75, 1.0}) {
        if (!ray.in_range(m) || !ray.in_range(-m)) continue;
        const auto gb = ray::ray_gap_lower_bound(ray, m);
        rows.push_back({e, i, nodes[i].lambda, nodes[i].mu, m, gb.gap, gb.bound});
      }
    }
  }
  return rows;
}

std::vector<SurfaceInfo> list_surfaces() {
  std::vector<SurfaceInfo> out;
  for (const char* d : {"sphere:1", "torus:1.4142135623730951,1", "torus:2,1", "ellipsoid:1,1.5,2",
                        "flat:1"}) {
    const auto base = geometry::ParametricSurface::parse(d);
    const auto normalized = geometry::normalize_to_unit_mass(base);
    const QuadratureGrid grid(normalized.surface, default_grid(base));
    SurfaceInfo info;
    info.descriptor = d;
    info.scale = normalized.scale;
    info.area = grid.area();
    info.integral_K = geometry::surface_integral(grid, [](const geometry::SurfaceSample& s) { return s.K; });
    info.euler_characteristic = base.euler_characteristic();
    info.limit = energy::limit_energy(grid);
    info.analytic_limit = analytic_limit(base);
    out.push_back(info);
  }
  return out;
}

nlohmann::ordered_json to_json(const energy::EnergyReport& r) {
  nlohmann::ordered_json j;
  j["surface"] = r.surface;
  j["eps"] = r.eps;
  j["area_term"] = r.area_term;
  j["d1_quad"] = r.d1_quad;
  j["d1_asym"] = r.d1_asym;
  j["f_eps"] = r.f_eps;
  j["g_eps"] = r.g_eps;
  j["limit"] = r.limit;
  j["lower_rhs"] = r.lower_rhs;
  j["mass_err_u"] = r.mass_err_u;
  j["mass_err_v"] = r.mass_err_v;
  j["grid"] = r.grid;
  j["runtime_s"] = r.runtime_s;
  return j;
}

std::string csv_header() {
  return "eps,area_term,d1_quad,d1_asym,f_eps,g_eps,limit,lower_rhs,mass_err_u,mass_err_v,grid,"
         "runtime_s";
}

std::string csv_row(const energy::EnergyReport& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}", num(r.eps), num(r.area_term),
                     num(r.d1_quad), num(r.d1_asym), num(r.f_eps), num(r.g_eps), num(r.limit),
                     num(r.lower_rhs), num(r.mass_err_u), num(r.mass_err_v), r.grid,
                     num(r.runtime_s));
}

nlohmann::ordered_json to_json(const ConvergenceRecord& rec) {
  nlohmann::ordered_json j;
  j["surface"] = rec.surface;
  j["quadrature_limit"] = rec.quadrature_limit;
  j["analytic_limit"] = rec.analytic_limit ? nlohmann::ordered_json(*rec.analytic_limit) : nullptr;
  nlohmann::ordered_json fit;
  fit["points"] = rec.fit.points;
  fit["degenerate"] = rec.fit.degenerate;
  fit["exponent"] = rec.fit.exponent;
  fit["log_prefactor"] = rec.fit.log_prefactor;
  fit["residual"] = rec.fit.residual;
  j["decay_fit"] = fit;
  if (rec.extrapolation) {
    nlohmann::ordered_json ex;
    ex["three_point"] = rec.extrapolation->three_point;
    ex["two_point"] = rec.extrapolation->two_point;
    ex["residual"] = rec.extrapolation->residual;
    j["extrapolation"] = ex;
  } else {
    j["extrapolation"] = nullptr;
  }
  auto reports = nlohmann::ordered_json::array();
  for (const auto& row : rec.rows) {
    if (row.report) {
      reports.push_back(to_json(*row.report));
    } else {
      nlohmann::ordered_json failed;
      failed["eps"] = row.eps;
      failed["error"] = row.error;
      failed["exit_code"] = row.error_code;
      reports.push_back(failed);
    }
  }
  j["reports"] = reports;
  j["status"] = rec.status;
  return j;
}

std::string to_csv(const ConvergenceRecord& rec) {
  std::string out = csv_header() + "\n";
  for (const auto& row : rec.rows) {
    if (row.report) {
      out += csv_row(*row.report) + "\n";
    } else {
      out += fmt::format("{},,,,,,,,,,failed (exit {}),\n", num(row.eps), row.error_code);
    }
  }
  return out;
}

}  // namespace bilayer::experiment
