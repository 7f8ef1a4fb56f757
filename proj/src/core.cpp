#include "dirsmooth/core.hpp"

#include <string>

namespace dirsmooth {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::coincident_points: return "coincident_points";
    case ErrorCode::ray_minimization: return "ray_minimization";
    case ErrorCode::not_converged: return "not_converged";
    case ErrorCode::no_minimizer: return "no_minimizer";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::hypothesis_failed: return "hypothesis_failed";
    case ErrorCode::missing_metrics: return "missing_metrics";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

std::string_view to_string(SmoothnessKind kind) noexcept {
  switch (kind) {
    case SmoothnessKind::point_wise_D: return "D";
    case SmoothnessKind::path_wise_A: return "A";
    case SmoothnessKind::optimal_H: return "H";
    case SmoothnessKind::global_L: return "L";
  }
  return "?";
}

SmoothnessKind parse_smoothness_kind(std::string_view name) {
  if (name == "D" || name == "point_wise_D" || name == "pointwise") return SmoothnessKind::point_wise_D;
  if (name == "A" || name == "path_wise_A" || name == "pathwise") return SmoothnessKind::path_wise_A;
  if (name == "H" || name == "optimal_H" || name == "optimal") return SmoothnessKind::optimal_H;
  if (name == "L" || name == "global_L" || name == "global") return SmoothnessKind::global_L;
  throw Error(ErrorCode::parse_error, "unknown smoothness kind '" + std::string(name) + "'");
}

}  // namespace dirsmooth
