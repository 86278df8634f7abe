// Command-line harness for the bilayer energy experiments.
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bilayer/experiment.hpp"

namespace ex = bilayer::experiment;
using json = nlohmann::ordered_json;

namespace {

struct Options {
  std::string surface = "sphere:1";
  std::vector<double> eps;
  std::string grid;
  double voxel_h = 0.0;
  std::size_t cap = 4000;
  std::string out;
  std::string format;
  bool no_timing = false;
};

ex::ExperimentConfig make_config(const Options& o, std::vector<double> default_eps) {
  ex::ExperimentConfig c;
  c.surface = o.surface;
  c.eps = o.eps.empty() ? std::move(default_eps) : o.eps;
  if (!o.grid.empty()) c.grid = bilayer::geometry::GridSpec::parse(o.grid);
  c.voxel_h = o.voxel_h;
  c.cap = o.cap;
  c.timing = !o.no_timing;
  c.validate();
  return c;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw bilayer::Error(bilayer::ErrorKind::invalid_argument, "cannot open " + o.out);
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string num(double x) { return fmt::format("{:.17g}", x); }

json fit_json(const ex::PowerFit& f) {
  json j;
  j["points"] = f.points;
  j["degenerate"] = f.degenerate;
  j["exponent"] = f.exponent;
  j["log_prefactor"] = f.log_prefactor;
  j["residual"] = f.residual;
  return j;
}

int cmd_energy(const Options& o) {
  auto c = make_config(o, {});
  if (c.eps.size() != 1) {
    throw bilayer::Error(bilayer::ErrorKind::invalid_argument, "energy takes exactly one eps");
  }
  const auto r = ex::run_energy(c, c.eps.front());
  if (o.format == "csv") {
    emit(o, ex::csv_header() + "\n" + ex::csv_row(r) + "\n");
  } else {
    emit(o, dump(ex::to_json(r)));
  }
  return 0;
}

int cmd_converge(const Options& o) {
  const auto c = make_config(o, {0.02, 0.01, 0.005});
  if (c.eps.size() < 3) {
    throw bilayer::Error(bilayer::ErrorKind::invalid_argument, "converge needs at least three eps");
  }
  const auto rec = ex::run_convergence(c);
  emit(o, o.format == "csv" ? ex::to_csv(rec) : dump(ex::to_json(rec)));
  for (const auto& row : rec.rows) {
    if (!row.error.empty()) std::cerr << fmt::format("eps={}: {}\n", row.eps, row.error);
  }
  return rec.status;
}

int cmd_lowerbound(const Options& o) {
  const auto c = make_config(o, {0.02, 0.01, 0.005});
  const auto rows = ex::run_lowerbound(c);
  int status = 0;
  std::string csv = "eps,lower_rhs,g_eps,slack\n";
  json arr = json::array();
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{}\n", num(r.eps), num(r.lower_rhs), num(r.g_eps), num(r.slack));
    json j;
    j["eps"] = r.eps;
    j["lower_rhs"] = r.lower_rhs;
    j["g_eps"] = r.g_eps;
    j["slack"] = r.slack;
    arr.push_back(j);
    if (r.slack < -ex::kLowerBoundSlack) {
      std::cerr << fmt::format("lower bound violated: eps={} lower_rhs={} g_eps={} slack={}\n",
                               r.eps, r.lower_rhs, r.g_eps, r.slack);
      status = ex::kExitLowerBound;
    }
  }
  json doc;
  doc["surface"] = c.surface;
  doc["rows"] = arr;
  emit(o, o.format == "csv" ? csv : dump(doc));
  return status;
}

int cmd_emd(const Options& o) {
  const auto c = make_config(o, {0.1});
  int status = 0;
  std::string csv =
      "eps,h,mode,dual,eta,emd,ray_cost,support_u,support_v,raw_mass_u,raw_mass_v,patch_factor,"
      "dual_tight,seconds\n";
  json arr = json::array();
  for (double e : c.eps) {
    const auto r = ex::run_emd_crosscheck(c, e);
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.eps), num(r.h), r.mode,
                       num(r.dual), num(r.eta), num(r.emd), num(r.ray_cost), r.support_u,
                       r.support_v, num(r.raw_mass_u), num(r.raw_mass_v), num(r.patch_factor),
                       r.dual_tight() ? 1 : 0, num(r.seconds));
    json j;
    j["eps"] = r.eps;
    j["h"] = r.h;
    j["mode"] = r.mode;
    j["dual"] = r.dual;
    j["eta"] = r.eta;
    j["emd"] = r.emd;
    j["ray_cost"] = r.ray_cost;
    j["support_u"] = r.support_u;
    j["support_v"] = r.support_v;
    j["raw_mass_u"] = r.raw_mass_u;
    j["raw_mass_v"] = r.raw_mass_v;
    j["patch_factor"] = r.patch_factor;
    j["dual_tight"] = r.dual_tight();
    j["seconds"] = r.seconds;
    arr.push_back(j);
    if (!r.dual_below_emd() || !r.emd_below_cost()) {
      std::cerr << fmt::format("sandwich violated: eps={} dual={} emd={} ray_cost={}\n", r.eps,
                               r.dual, r.emd, r.ray_cost);
      status = ex::kExitSandwich;
    }
  }
  json doc;
  doc["surface"] = c.surface;
  doc["rows"] = arr;
  emit(o, o.format == "csv" ? csv : dump(doc));
  return status;
}

int cmd_weakstar(const Options& o) {
  const auto c = make_config(o, {0.04, 0.02, 0.01});
  const auto series = ex::run_weakstar(c);
  std::string csv = "phi,target,eps,error\n";
  json arr = json::array();
  for (const auto& s : series) {
    json j;
    j["phi"] = s.name;
    j["target"] = s.target;
    j["eps"] = s.eps;
    j["errors"] = s.errors;
    j["fit"] = fit_json(s.fit);
    arr.push_back(j);
    for (std::size_t i = 0; i < s.eps.size(); ++i) {
      csv += fmt::format("{},{},{},{}\n", s.name, num(s.target), num(s.eps[i]), num(s.errors[i]));
    }
  }
  json doc;
  doc["surface"] = c.surface;
  doc["series"] = arr;
  emit(o, o.format == "csv" ? csv : dump(doc));
  return 0;
}

int cmd_ray_check(const Options& o) {
  const auto c = make_config(o, {0.1});
  const auto rows = ex::run_ray_check(c);
  std::string csv = "eps,node,lambda,mu,m,gap,bound\n";
  json arr = json::array();
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", num(r.eps), r.node, num(r.lambda), num(r.mu),
                       num(r.m), num(r.gap), num(r.bound));
    json j;
    j["eps"] = r.eps;
    j["node"] = r.node;
    j["lambda"] = r.lambda;
    j["mu"] = r.mu;
    j["m"] = r.m;
    j["gap"] = r.gap;
    j["bound"] = r.bound;
    arr.push_back(j);
  }
  emit(o, o.format == "json" ? dump(arr) : csv);
  return 0;
}

int cmd_surfaces(const Options& o) {
  std::string csv = "descriptor,scale,area,integral_K,euler_characteristic,limit,analytic_limit\n";
  json arr = json::array();
  for (const auto& s : ex::list_surfaces()) {
    csv += fmt::format("{},{},{},{},{},{},{}\n", s.descriptor, num(s.scale), num(s.area),
                       num(s.integral_K), s.euler_characteristic, num(s.limit),
                       s.analytic_limit ? num(*s.analytic_limit) : "");
    json j;
    j["descriptor"] = s.descriptor;
    j["scale"] = s.scale;
    j["area"] = s.area;
    j["integral_K"] = s.integral_K;
    j["euler_characteristic"] = s.euler_characteristic;
    j["limit"] = s.limit;
    j["analytic_limit"] = s.analytic_limit ? json(*s.analytic_limit) : json(nullptr);
    arr.push_back(j);
  }
  emit(o, o.format == "csv" ? csv : dump(arr));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bilayer membrane energy experiments"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool with_eps) {
    sub->add_option("--surface", o.surface, "sphere:R | torus:R,r | ellipsoid:a,b,c | flat:side");
    if (with_eps) sub->add_option("--eps", o.eps, "comma-separated eps list")->delimiter(',');
    sub->add_option("--grid", o.grid, "quadrature nodes per chart, e.g. 64x128");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--no-timing", o.no_timing, "report runtime as 0 for reproducible output");
  };

  auto* energy = app.add_subcommand("energy", "energy report for one eps");
  add_common(energy, true);
  auto* converge = app.add_subcommand("converge", "eps sweep with decay fit and extrapolation");
  add_common(converge, true);
  auto* lower = app.add_subcommand("lowerbound", "lower-bound consistency table");
  add_common(lower, true);
  auto* emd = app.add_subcommand("emd", "dual / transport / ray-cost sandwich");
  add_common(emd, true);
  emd->add_option("--voxel-h", o.voxel_h, "voxel spacing (default eps/4)");
  emd->add_option("--cap", o.cap, "support cap per measure");
  auto* weak = app.add_subcommand("weakstar", "weak-* convergence for built-in test functions");
  add_common(weak, true);
  auto* ray = app.add_subcommand("ray-check", "ray-gap inequality samples");
  add_common(ray, true);
  auto* surfaces = app.add_subcommand("surfaces", "built-in surfaces after normalization");
  surfaces->add_option("--out", o.out, "output file (default stdout)");
  surfaces->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ex::kExitUsage;
  }

  try {
    if (*energy) return cmd_energy(o);
    if (*converge) return cmd_converge(o);
    if (*lower) return cmd_lowerbound(o);
    if (*emd) return cmd_emd(o);
    if (*weak) return cmd_weakstar(o);
    if (*ray) return cmd_ray_check(o);
    if (*surfaces) return cmd_surfaces(o);
  } catch (const bilayer::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ex::kExitUsage;
  }
  return ex::kExitUsage;
}
