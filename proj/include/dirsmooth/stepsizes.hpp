#pragma once

#include "dirsmooth/smoothness.hpp"

#include <optional>
#include <string>
#include <variant>

namespace dirsmooth {

struct RootSolveConfig {
  double tol = 1e-10;  ///< on the residual |eta * M - 1|
  int max_newton = 50;
  int max_bisect = 200;
  double bracket_growth = 2.0;
  int max_doublings = 60;
  SupConfig sup{};  ///< chord grid for A on non-quadratic objectives
};

enum class Schedule { fixed_horizon, anytime };

struct Constant {
  double eta = 0.0;
};
struct InverseL {};
struct StronglyAdapted {
  SmoothnessKind kind = SmoothnessKind::point_wise_D;
  RootSolveConfig solver{};
};
struct Polyak {
  double gamma = 1.5;
  /// Filled from a reference solution when absent.
  std::optional<double> f_star;
};
struct NormalizedSchedule {
  Schedule schedule = Schedule::anytime;
  int K = 1;  ///< horizon for fixed_horizon
  double eta0 = 1.0;
};
struct Cauchy {};
struct Dai {};

using StepSizeRule = std::variant<Constant, InverseL, StronglyAdapted, Polyak, NormalizedSchedule, Cauchy, Dai>;

/// Short human-readable tag, e.g. "polyak(1.5)".
std::string rule_tag(const StepSizeRule& rule);
/// Throws invalid_argument when parameters are out of range or the rule does
/// not apply to `obj` (Cauchy and Dai need a quadratic).
void validate_rule(const StepSizeRule& rule, const Objective* obj = nullptr);

/// {"rule": "polyak", "gamma": 1.5}; unknown keys are rejected.
StepSizeRule rule_from_json(const std::string& text);
std::string rule_to_json(const StepSizeRule& rule);

/// gamma (f(x) - f*) / |grad f(x)|^2.
double polyak_step(const Objective& obj, const Vector& x, double gamma, double f_star);

/// |g| / (2 |B g|).
double dai_step(const QuadraticObjective& obj, const Vector& x);

/// g^T g / g^T B g.
double cauchy_step(const QuadraticObjective& obj, const Vector& x);

struct AdaptedSolve {
  double eta = 0.0;
  double residual = 0.0;  ///< eta * M(x, x - eta g) - 1
  int newton_steps = 0;
  int bisect_steps = 0;
  int doublings = 0;
  int halvings = 0;
};

/// Solves eta = 1 / M(x, x - eta grad f(x)) for M in {D, A}.
AdaptedSolve solve_strongly_adapted_detailed(const Objective& obj, const Vector& x, SmoothnessKind kind,
                                             const RootSolveConfig& cfg = {});
double solve_strongly_adapted(const Objective& obj, const Vector& x, SmoothnessKind kind,
                              const RootSolveConfig& cfg = {});

/// eta0 / sqrt(K) for fixed_horizon, eta0 / sqrt(k + 1) for anytime.
double normalized_schedule_step(int k, Schedule schedule, double eta0, int K = 1);

/// Step size chosen by `rule` at iterate `x` with index `k`.
double compute_step(const StepSizeRule& rule, const Objective& obj, const Vector& x, int k);

}  // namespace dirsmooth
