#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dirsmooth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorCode : int {
  invalid_argument = 1,
  dimension_mismatch,
  unsupported,
  coincident_points,
  ray_minimization,
  not_converged,
  no_minimizer,
  parse_error,
  hypothesis_failed,
  missing_metrics,
  io_error,
  numerical_failure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a code the C API forwards as-is.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class SmoothnessKind { point_wise_D, path_wise_A, optimal_H, global_L };

std::string_view to_string(SmoothnessKind kind) noexcept;
SmoothnessKind parse_smoothness_kind(std::string_view name);

}  // namespace dirsmooth
