#pragma once

#include "dirsmooth/stepsizes.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dirsmooth {

/// One iterate. For GD-type runs the pair metrics describe (x_k, x_{k+1});
/// for AGD runs they describe (y_k, x_{k+1}). The final record has eta = 0
/// and no pair metrics.
struct IterateRecord {
  int k = 0;
  Vector x;  ///< empty in thin mode
  double f = 0.0;
  double grad_norm = 0.0;
  double eta = 0.0;
  std::optional<double> D, A, H, mu_star;

  // AGD only.
  std::optional<Vector> y;
  std::optional<double> f_y, grad_norm_y, alpha, gamma;
};

enum class Algorithm { gd, normalized_gd, agd_momentum, agd_estimating };
enum class Termination { max_iters, grad_tol, stationary, error };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(Termination t) noexcept;

struct Trace {
  std::vector<IterateRecord> records;
  std::string objective_tag;
  std::string rule_tag;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::gd;
  std::optional<StepSizeRule> rule;
  Termination terminated = Termination::max_iters;
  std::string message;
  bool thin = false;
  std::optional<double> global_L;

  // AGD parameters.
  double mu = 0.0;
  double alpha0 = 0.0;
  double gamma0 = 0.0;

  std::size_t size() const { return records.size(); }
  const IterateRecord& operator[](std::size_t i) const { return records[i]; }
};

struct RunOptions {
  /// Record D, A and H for each consecutive pair.
  bool pair_metrics = false;
  /// Skip A (needs a chord search on non-quadratic objectives).
  bool skip_path_wise = false;
  /// When set, record mu(x_k, x*) for each k.
  const ReferenceSolution* reference = nullptr;
  double grad_tol = 0.0;
  bool thin = false;
  SupConfig sup{};
  std::uint64_t seed = 0;
};

/// x_{k+1} = x_k - eta_k grad f(x_k) for `iters` steps.
Trace gd_run(const Objective& obj, const Vector& x0, const StepSizeRule& rule, int iters,
             const RunOptions& opts = {});

/// x_{k+1} = x_k - eta_k grad f(x_k) / |grad f(x_k)|.
Trace normalized_gd_run(const Objective& obj, const Vector& x0, Schedule schedule, double eta0, int iters,
                        const RunOptions& opts = {}, int K = 0);

/// Where AGD gets eta_k. Adapted steps are solved at y_k along -grad f(y_k);
/// because y_{k+1} itself depends on eta_{k+1}, the solve is iterated to a
/// fixed point (at most `fixed_point_passes` passes).
struct StepSource {
  enum class Kind { constant, sequence, inverse_L, adapted } kind = Kind::constant;
  double eta = 0.0;
  std::vector<double> etas;
  SmoothnessKind adapted_kind = SmoothnessKind::point_wise_D;
  RootSolveConfig solver{};
  int fixed_point_passes = 20;

  static StepSource constant(double eta) { return {Kind::constant, eta, {}, {}, {}, 20}; }
  static StepSource sequence(std::vector<double> etas) { return {Kind::sequence, 0.0, std::move(etas), {}, {}, 20}; }
  static StepSource inverse_L() { return {Kind::inverse_L, 0.0, {}, {}, {}, 20}; }
  static StepSource adapted(SmoothnessKind kind, RootSolveConfig solver = {}) {
    return {Kind::adapted, 0.0, {}, kind, solver, 20};
  }
};

/// Momentum form: x_{k+1} = y_k - eta_k grad f(y_k), alpha from the scalar
/// recursion, y_{k+1} = x_{k+1} + alpha_k (1 - alpha_k) / (alpha_k^2 + alpha_{k+1}) (x_{k+1} - x_k).
Trace agd_momentum_run(const Objective& obj, const Vector& x0, const StepSource& etas, double mu, double alpha0,
                       int iters, const RunOptions& opts = {});

/// Estimating-sequence form with x_0 = v_0 = y_0.
Trace agd_estimating_run(const Objective& obj, const Vector& x0, const StepSource& etas, double mu, double gamma0,
                         int iters, const RunOptions& opts = {});

/// alpha_0 matching gamma_0 between the two AGD forms.
double agd_alpha0_from_gamma0(double eta0, double mu, double gamma0);
/// Inverse map; needs alpha0 < 1.
double agd_gamma0_from_alpha0(double eta0, double mu, double alpha0);
/// Positive root of a^2 + b a - c = 0 (c > 0) without cancellation.
double positive_quadratic_root(double b, double c);

struct ExpSearchOptions {
  SmoothnessKind kind = SmoothnessKind::point_wise_D;
  SupConfig sup{};
  int max_outer = 64;
  RunOptions trace_options{};
};

struct ExpSearchProbe {
  double eta = 0.0;
  double psi = 0.0;
  double phi = 0.0;
  bool finite = true;
  int steps = 0;
};

struct ExpSearchResult {
  double eta = 0.0;
  double eta0 = 0.0;
  int K = 0;
  int case_id = 1;
  long inner_gd_steps = 0;
  /// Smallest probed step with phi > 0 (Case 2 only).
  std::optional<double> eta_hi;
  std::optional<double> psi_hi;
  std::vector<ExpSearchProbe> probes;  ///< distinct probes in evaluation order
  Trace trace;                         ///< K-step GD at the returned eta
};

/// Gradient descent with exponential search on the step size.
ExpSearchResult exponential_search_gd(const Objective& obj, const Vector& x0, double eta0, int K,
                                      const ExpSearchOptions& opts = {});

/// 2 K max(ceil(log2 log2(2 eta0 L)), 1).
long exponential_search_budget(double eta0, double L, int K);

// Serialization.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);
std::string trace_csv(const Trace& trace);
std::string trace_to_json(const Trace& trace);
Trace trace_from_json(const std::string& text);
std::string trace_meta_json(const Trace& trace);

}  // namespace dirsmooth
