#pragma once

#include "dirsmooth/problems.hpp"

namespace dirsmooth {

/// Grid and refinement settings for the sup/inf over the chord.
struct SupConfig {
  int grid_points = 65;     ///< log-uniform nodes in [t_min, 1]
  double refine_tol = 1e-10;  ///< golden-section tolerance in t
  double t_min = 1e-6;
};

struct SmoothnessEstimate {
  double value = 0.0;
  SmoothnessKind kind = SmoothnessKind::point_wise_D;
  int eval_points = 1;  ///< grid size used; 1 for closed forms
  bool refined = false;
};

struct DirectionalMu {
  double value = 0.0;
  int eval_points = 1;
};

/// 2 |grad f(y) - grad f(x)| / |y - x|.
SmoothnessEstimate point_wise_D(const Objective& obj, const Vector& x, const Vector& y);

/// Supremum over t in (0, 1] of <grad f(x + t d) - grad f(x), d> / (t |d|^2), d = y - x.
SmoothnessEstimate path_wise_A(const Objective& obj, const Vector& x, const Vector& y, const SupConfig& cfg = {});

/// |f(y) - f(x) - <grad f(x), y - x>| / (|y - x|^2 / 2).
SmoothnessEstimate optimal_H(const Objective& obj, const Vector& x, const Vector& y);

/// Infimum of the same chord quotient used by A.
DirectionalMu directional_mu(const Objective& obj, const Vector& x, const Vector& y, const SupConfig& cfg = {});

/// Dispatch on kind; global_L returns the objective's smoothness constant.
SmoothnessEstimate evaluate_smoothness(const Objective& obj, SmoothnessKind kind, const Vector& x, const Vector& y,
                                       const SupConfig& cfg = {});

/// True when |y - x| <= 1e-14 (1 + |x|).
bool coincident(const Vector& x, const Vector& y);

/// Throws coincident_points when coincident(x, y).
void require_distinct(const Vector& x, const Vector& y);

}  // namespace dirsmooth
