#pragma once

#include <stdexcept>
#include <string>

namespace bilayer {

enum class ErrorKind {
  invalid_argument,
  degenerate_metric,
  reach,
  inadmissible_offset,
  root_solve,
  thickness_solve,
  splitting_point,
  quadrature,
  voxelization,
  size_cap,
  mass_mismatch,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so that the CLI can map
/// it onto an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::degenerate_metric: return "degenerate metric";
    case ErrorKind::reach: return "reach";
    case ErrorKind::inadmissible_offset: return "inadmissible offset";
    case ErrorKind::root_solve: return "root solve failed";
    case ErrorKind::thickness_solve: return "thickness solve failed";
    case ErrorKind::splitting_point: return "splitting point";
    case ErrorKind::quadrature: return "quadrature non-convergence";
    case ErrorKind::voxelization: return "voxelization too coarse";
    case ErrorKind::size_cap: return "size cap exceeded";
    case ErrorKind::mass_mismatch: return "mass mismatch";
  }
  return "unknown";
}

}  // namespace bilayer
