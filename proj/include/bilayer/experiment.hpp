#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilayer/energy_metrics.hpp"
#include "bilayer/error.hpp"

namespace bilayer::experiment {

using geometry::GridSpec;
using geometry::QuadratureGrid;

struct ExperimentConfig {
  std::string surface = "sphere:1";
  /// Sorted into strictly decreasing order by validate().
  std::vector<double> eps;
  std::optional<GridSpec> grid;
  /// Voxel spacing; 0 selects eps / 4.
  double voxel_h = 0.0;
  std::size_t cap = 4000;
  /// When false, runtime_s is reported as 0 so that reports are bit-identical.
  bool timing = true;

  /// Sorts eps decreasingly; rejects empty, non-positive or repeated values.
  void validate();
};

GridSpec default_grid(const geometry::ParametricSurface& surface);

/// Parses the descriptor, normalizes to area 1/2 and builds the grid.
std::shared_ptr<const QuadratureGrid> normalized_grid(const std::string& descriptor,
                                                      const std::optional<GridSpec>& grid);

/// Closed-form 2 int (H^2/4 - K/6) where one is known.
std::optional<double> analytic_limit(const geometry::ParametricSurface& surface);

/// Maps library failures onto CLI exit codes.
int exit_code(ErrorKind kind);
inline constexpr int kExitUsage = 1;
inline constexpr int kExitLowerBound = 5;
inline constexpr int kExitSandwich = 6;

energy::EnergyReport run_energy(const ExperimentConfig& config, double eps);

struct PowerFit {
  std::size_t points = 0;
  double exponent = 0.0;
  double log_prefactor = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
  /// All values at rounding level (nothing to fit).
  bool degenerate = false;
};

/// Least-squares fit of log y = log C + p log x. Values at or below
/// zero_level make the fit degenerate.
PowerFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                       double zero_level = 1e-12);

struct Extrapolation {
  /// G0 from G = G0 + a eps^2 + b eps^3 on the three smallest eps.
  double three_point = 0.0;
  /// G0 from G = G0 + a eps^2 on the two smallest eps.
  double two_point = 0.0;
  double residual = 0.0;
};

/// Needs at least three points; eps need not be sorted.
Extrapolation extrapolate(const std::vector<double>& eps, const std::vector<double>& g);

struct ConvergenceRow {
  double eps = 0.0;
  std::optional<energy::EnergyReport> report;
  std::string error;
  int error_code = 0;
};

struct ConvergenceRecord {
  std::string surface;
  std::vector<ConvergenceRow> rows;
  double quadrature_limit = 0.0;
  std::optional<double> analytic_limit;
  PowerFit fit;
  std::optional<Extrapolation> extrapolation;
  /// First failure exit code, 0 if every eps succeeded.
  int status = 0;
};

ConvergenceRecord run_convergence(const ExperimentConfig& config);

struct LowerBoundRow {
  double eps = 0.0;
  double lower_rhs = 0.0;
  double g_eps = 0.0;
  double slack = 0.0;
};

inline constexpr double kLowerBoundSlack = 1e-6;
std::vector<LowerBoundRow> run_lowerbound(const ExperimentConfig& config);

struct EmdRow {
  double eps = 0.0;
  double h = 0.0;
  std::string mode;
  double dual = 0.0;
  double eta = 0.0;
  double emd = 0.0;
  double ray_cost = 0.0;
  std::size_t support_u = 0;
  std::size_t support_v = 0;
  double raw_mass_u = 0.0;
  double raw_mass_v = 0.0;
  double patch_factor = 0.0;
  double seconds = 0.0;

  bool dual_below_emd() const;
  /// emd <= ray_cost * (1 + 0.10)
  bool emd_below_cost() const;
  bool dual_tight() const { return dual >= 0.8 * emd; }
};

/// Voxelized (or, on the flat fixture, per-column ray) transport cross-check.
EmdRow run_emd_crosscheck(const ExperimentConfig& config, double eps);

struct TestFunction {
  std::string name;
  construction::SpaceFunction phi;
};
std::vector<TestFunction> builtin_test_functions();

struct WeakstarSeries {
  std::string name;
  double target = 0.0;
  std::vector<double> eps;
  std::vector<double> errors;
  PowerFit fit;
};

std::vector<WeakstarSeries> run_weakstar(const ExperimentConfig& config);

struct RayCheckRow {
  double eps = 0.0;
  std::size_t node = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double m = 0.0;
  double gap = 0.0;
  double bound = 0.0;
};

std::vector<RayCheckRow> run_ray_check(const ExperimentConfig& config);

struct SurfaceInfo {
  std::string descriptor;
  double scale = 1.0;
  double area = 0.0;
  double integral_K = 0.0;
  int euler_characteristic = 0;
  double limit = 0.0;
  std::optional<double> analytic_limit;
};

std::vector<SurfaceInfo> list_surfaces();

// Serialization. Field order is fixed.
nlohmann::ordered_json to_json(const energy::EnergyReport& report);
std::string csv_header();
std::string csv_row(const energy::EnergyReport& report);
nlohmann::ordered_json to_json(const ConvergenceRecord& record);
std::string to_csv(const ConvergenceRecord& record);

}  // namespace bilayer::experiment
