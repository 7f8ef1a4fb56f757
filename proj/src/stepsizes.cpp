#include "dirsmooth/stepsizes.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace dirsmooth {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

const QuadraticObjective& require_quadratic(const Objective& obj, const char* rule) {
  const auto* q = dynamic_cast<const QuadraticObjective*>(&obj);
  if (!q) throw Error(ErrorCode::unsupported, std::string(rule) + " step needs a quadratic objective");
  return *q;
}

void validate_solver(const RootSolveConfig& cfg) {
  if (!(cfg.tol > 0)) throw Error(ErrorCode::invalid_argument, "root-solve tol must be positive");
  if (!(cfg.bracket_growth > 1)) throw Error(ErrorCode::invalid_argument, "bracket_growth must exceed 1");
  if (cfg.max_newton < 0 || cfg.max_bisect < 1 || cfg.max_doublings < 1)
    throw Error(ErrorCode::invalid_argument, "root-solve iteration limits must be positive");
}

// Residual of the fixed-point equation at eta for either kind.
struct Probe {
  double eta = 0.0;
  double residual = 0.0;  // eta * M(x, x - eta g) - 1
  Vector z;
  Vector dg;  // grad f(z) - g
};

class AdaptedSolver {
 public:
  AdaptedSolver(const Objective& obj, const Vector& x, SmoothnessKind kind, const RootSolveConfig& cfg)
      : obj_(obj), x_(x), kind_(kind), cfg_(cfg), g_(obj.gradient(x)), gn_(g_.norm()) {}

  AdaptedSolve run() {
    if (kind_ != SmoothnessKind::point_wise_D && kind_ != SmoothnessKind::path_wise_A)
      throw Error(ErrorCode::invalid_argument, "strongly adapted steps are defined for D and A only");
    validate_solver(cfg_);
    if (!(gn_ > 0)) throw Error(ErrorCode::invalid_argument, "strongly adapted step needs a nonzero gradient");
    if (!std::isfinite(gn_)) throw Error(ErrorCode::numerical_failure, "gradient is not finite");

    bracket();
    if (out_.eta > 0) return out_;
    if (kind_ == SmoothnessKind::point_wise_D)
      newton();
    else
      illinois();
    return out_;
  }

 private:
  Probe probe(double eta) {
    Probe p;
    p.eta = eta;
    p.z = x_ - eta * g_;
    p.dg = obj_.gradient(p.z) - g_;
    if (kind_ == SmoothnessKind::point_wise_D) {
      p.residual = 2.0 * p.dg.norm() / gn_ - 1.0;
    } else {
      const double A = path_wise_A(obj_, x_, p.z, cfg_.sup).value;
      p.residual = eta * A - 1.0;
    }
    if (!std::isfinite(p.residual)) p.residual = std::numeric_limits<double>::infinity();
    return p;
  }

  bool done(const Probe& p) {
    if (std::abs(p.residual) <= cfg_.tol) {
      finish(p.eta, p.residual);
      return true;
    }
    return false;
  }

  void finish(double eta, double residual) {
    out_.eta = eta;
    out_.residual = residual;
  }

  // Bracket [lo, hi] with residual(lo) < 0 < residual(hi), starting from half
  // the inverse curvature estimate along a tiny step.
  void bracket() {
    const double eps = 1e-6;
    const double d0 = 2.0 * (obj_.gradient(x_ - eps * g_) - g_).norm() / (eps * gn_);
    double eta = (std::isfinite(d0) && d0 > 0) ? 1.0 / (2.0 * d0) : 1.0;
    Probe p = probe(eta);
    if (done(p)) return;
    if (p.residual > 0) {
      hi_ = p;
      for (;;) {
        eta *= 0.5;
        ++out_.halvings;
        if (eta < std::numeric_limits<double>::min() || out_.halvings > 2000)
          throw Error(ErrorCode::numerical_failure, "could not bracket the strongly adapted step from below");
        p = probe(eta);
        if (done(p)) return;
        if (p.residual < 0) {
          lo_ = p;
          return;
        }
        hi_ = p;
      }
    }
    lo_ = p;
    for (;;) {
      if (out_.doublings >= cfg_.max_doublings)
        throw Error(ErrorCode::ray_minimization,
                    "ray-minimization suspected: no sign change after " + std::to_string(out_.doublings) +
                        " bracket expansions");
      eta *= cfg_.bracket_growth;
      ++out_.doublings;
      p = probe(eta);
      if (done(p)) return;
      if (p.residual > 0) {
        hi_ = p;
        return;
      }
      lo_ = p;
    }
  }

  bool collapsed() const { return hi_.eta - lo_.eta <= 4.0 * kEps * hi_.eta; }

  void accept_best() {
    // The bracket cannot shrink further in floating point.
    const Probe& p = std::abs(lo_.residual) <= std::abs(hi_.residual) ? lo_ : hi_;
    finish(p.eta, p.residual);
  }

  void update_bracket(const Probe& p) {
    if (p.residual < 0)
      lo_ = p;
    else
      hi_ = p;
  }

  // h(eta) = |dg|^2 / 2 - |g|^2 / 8 has the same sign as the residual and
  // h'(eta) = <Hvp(z, g), g - grad f(z)> = -<Hvp(z, g), dg>.
  double h_of(const Probe& p) const { return 0.5 * p.dg.squaredNorm() - 0.125 * gn_ * gn_; }

  double h_prime(const Probe& p) const {
    Vector hv;
    if (obj_.has_hvp()) {
      hv = obj_.hessian_vector_product(p.z, g_);
    } else {
      const double step = 1e-6 * (1.0 + p.z.norm()) / gn_;
      hv = (obj_.gradient(p.z + step * g_) - obj_.gradient(p.z - step * g_)) / (2.0 * step);
    }
    return -hv.dot(p.dg);
  }

  void newton() {
    Probe cur = std::abs(lo_.residual) <= std::abs(hi_.residual) ? lo_ : hi_;
    bool force_bisect = false;
    for (;;) {
      if (collapsed()) return accept_best();
      double next = std::numeric_limits<double>::quiet_NaN();
      if (!force_bisect && out_.newton_steps < cfg_.max_newton) {
        const double hp = h_prime(cur);
        if (std::isfinite(hp) && hp != 0.0) next = cur.eta - h_of(cur) / hp;
      }
      const bool use_newton = std::isfinite(next) && next > lo_.eta && next < hi_.eta;
      if (use_newton) {
        ++out_.newton_steps;
      } else {
        next = 0.5 * (lo_.eta + hi_.eta);
        if (++out_.bisect_steps > cfg_.max_bisect)
          throw Error(ErrorCode::not_converged, "strongly adapted solve exhausted its bisection budget");
      }
      Probe p = probe(next);
      if (done(p)) return;
      force_bisect = use_newton && std::abs(p.residual) > 0.5 * std::abs(cur.residual);
      update_bracket(p);
      cur = p;
    }
  }

  void illinois() {
    double fa = lo_.residual;
    double fb = hi_.residual;
    if (!std::isfinite(fb)) fb = 1.0;
    int side = 0;
    for (;;) {
      if (collapsed()) return accept_best();
      if (++out_.bisect_steps > cfg_.max_bisect)
        throw Error(ErrorCode::not_converged, "strongly adapted solve exhausted its iteration budget");
      double c = (lo_.eta * fb - hi_.eta * fa) / (fb - fa);
      if (!(c > lo_.eta && c < hi_.eta)) c = 0.5 * (lo_.eta + hi_.eta);
      Probe p = probe(c);
      if (done(p)) return;
      if (p.residual > 0) {
        hi_ = p;
        fb = p.residual;
        if (side == 1) fa *= 0.5;
        side = 1;
      } else {
        lo_ = p;
        fa = p.residual;
        if (side == -1) fb *= 0.5;
        side = -1;
      }
    }
  }

  const Objective& obj_;
  const Vector& x_;
  SmoothnessKind kind_;
  RootSolveConfig cfg_;
  Vector g_;
  double gn_;
  Probe lo_, hi_;
  AdaptedSolve out_;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

double polyak_step(const Objective& obj, const Vector& x, double gamma, double f_star) {
  if (!(gamma > 0 && gamma < 2)) throw Error(ErrorCode::invalid_argument, "Polyak gamma must lie in (0, 2)");
  const double f = obj.value(x);
  const Vector g = obj.gradient(x);
  const double gap = f - f_star;
  const double slack = 1e-12 * std::max(1.0, std::abs(f_star));
  if (gap < -slack)
    throw Error(ErrorCode::invalid_argument, "f(x) is below the supplied f_star; the optimal value is wrong");
  const double gg = g.squaredNorm();
  if (gg == 0.0) {
    if (gap > slack) throw Error(ErrorCode::invalid_argument, "zero gradient with f(x) > f_star; inconsistent f_star");
    return 0.0;
  }
  return gamma * std::max(gap, 0.0) / gg;
}

double dai_step(const QuadraticObjective& obj, const Vector& x) {
  const Vector g = obj.gradient(x);
  const double gn = g.norm();
  if (gn == 0.0) throw Error(ErrorCode::invalid_argument, "Dai step needs a nonzero gradient");
  const double bg = obj.apply(g).norm();
  if (bg == 0.0) throw Error(ErrorCode::invalid_argument, "B g = 0: f is linear along the gradient, step unbounded");
  return gn / (2.0 * bg);
}

double cauchy_step(const QuadraticObjective& obj, const Vector& x) {
  const Vector g = obj.gradient(x);
  const double gg = g.squaredNorm();
  if (gg == 0.0) throw Error(ErrorCode::invalid_argument, "Cauchy step needs a nonzero gradient");
  const double gbg = g.dot(obj.apply(g));
  if (!(gbg > 0)) throw Error(ErrorCode::invalid_argument, "g^T B g = 0: flat direction, step unbounded");
  return gg / gbg;
}

AdaptedSolve solve_strongly_adapted_detailed(const Objective& obj, const Vector& x, SmoothnessKind kind,
                                             const RootSolveConfig& cfg) {
  return AdaptedSolver(obj, x, kind, cfg).run();
}

double solve_strongly_adapted(const Objective& obj, const Vector& x, SmoothnessKind kind,
                              const RootSolveConfig& cfg) {
  return solve_strongly_adapted_detailed(obj, x, kind, cfg).eta;
}

double normalized_schedule_step(int k, Schedule schedule, double eta0, int K) {
  if (k < 0) throw Error(ErrorCode::invalid_argument, "iteration index must be non-negative");
  if (schedule == Schedule::fixed_horizon) {
    if (K < 1) throw Error(ErrorCode::invalid_argument, "fixed-horizon schedule needs K >= 1");
    return eta0 / std::sqrt(static_cast<double>(K));
  }
  return eta0 / std::sqrt(static_cast<double>(k) + 1.0);
}

double compute_step(const StepSizeRule& rule, const Objective& obj, const Vector& x, int k) {
  return std::visit(
      overloaded{
          [&](const Constant& r) { return r.eta; },
          [&](const InverseL&) { return 1.0 / smoothness_constant(obj); },
          [&](const StronglyAdapted& r) { return solve_strongly_adapted(obj, x, r.kind, r.solver); },
          [&](const Polyak& r) {
            if (!r.f_star) throw Error(ErrorCode::invalid_argument, "Polyak rule needs f_star");
            return polyak_step(obj, x, r.gamma, *r.f_star);
          },
          [&](const NormalizedSchedule& r) { return normalized_schedule_step(k, r.schedule, r.eta0, r.K); },
          [&](const Cauchy&) { return cauchy_step(require_quadratic(obj, "Cauchy"), x); },
          [&](const Dai&) { return dai_step(require_quadratic(obj, "Dai"), x); },
      },
      rule);
}

std::string rule_tag(const StepSizeRule& rule) {
  return std::visit(
      overloaded{
          [](const Constant& r) { return "constant(" + fmt_double(r.eta) + ")"; },
          [](const InverseL&) { return std::string("inverse_L"); },
          [](const StronglyAdapted& r) { return "adapted(" + std::string(to_string(r.kind)) + ")"; },
          [](const Polyak& r) { return "polyak(" + fmt_double(r.gamma) + ")"; },
          [](const NormalizedSchedule& r) {
            return std::string("normalized(") +
                   (r.schedule == Schedule::anytime ? "anytime" : "fixed_horizon:" + std::to_string(r.K)) + "," +
                   fmt_double(r.eta0) + ")";
          },
          [](const Cauchy&) { return std::string("cauchy"); },
          [](const Dai&) { return std::string("dai"); },
      },
      rule);
}

void validate_rule(const StepSizeRule& rule, const Objective* obj) {
  std::visit(overloaded{
                 [](const Constant& r) {
                   if (!(r.eta > 0) || !std::isfinite(r.eta))
                     throw Error(ErrorCode::invalid_argument, "constant step must be positive");
                 },
                 [](const InverseL&) {},
                 [](const StronglyAdapted& r) {
                   if (r.kind != SmoothnessKind::point_wise_D && r.kind != SmoothnessKind::path_wise_A)
                     throw Error(ErrorCode::invalid_argument, "strongly adapted steps are defined for D and A only");
                   validate_solver(r.solver);
                 },
                 [](const Polyak& r) {
                   if (!(r.gamma > 0 && r.gamma < 2))
                     throw Error(ErrorCode::invalid_argument, "Polyak gamma must lie in (0, 2)");
                 },
                 [](const NormalizedSchedule& r) {
                   if (!(r.eta0 > 0)) throw Error(ErrorCode::invalid_argument, "normalized schedule needs eta0 > 0");
                   if (r.schedule == Schedule::fixed_horizon && r.K < 1)
                     throw Error(ErrorCode::invalid_argument, "fixed-horizon schedule needs K >= 1");
                 },
                 [](const Cauchy&) {},
                 [](const Dai&) {},
             },
             rule);
  if (obj && (std::holds_alternative<Cauchy>(rule) || std::holds_alternative<Dai>(rule)))
    require_quadratic(*obj, std::holds_alternative<Cauchy>(rule) ? "Cauchy" : "Dai");
  if (obj && std::holds_alternative<InverseL>(rule)) smoothness_constant(*obj);
}

StepSizeRule rule_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("rule JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("rule") || !j["rule"].is_string())
    throw Error(ErrorCode::parse_error, "rule JSON needs a string field 'rule'");
  const std::string name = j["rule"];

  auto allow = [&](std::set<std::string> keys) {
    keys.insert("rule");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!keys.count(it.key()))
        throw Error(ErrorCode::parse_error, "unknown key '" + it.key() + "' for rule '" + name + "'");
  };
  auto num = [&](const char* key) -> double {
    if (!j.contains(key) || !j[key].is_number())
      throw Error(ErrorCode::parse_error, std::string("rule '") + name + "' needs numeric '" + key + "'");
    return j[key].get<double>();
  };

  StepSizeRule rule;
  try {
    if (name == "constant") {
      allow({"eta"});
      rule = Constant{num("eta")};
    } else if (name == "inverse_L" || name == "inverse_l" || name == "1/L") {
      allow({});
      rule = InverseL{};
    } else if (name == "adapted" || name == "strongly_adapted") {
      allow({"kind", "tol", "max_newton", "max_bisect", "bracket_growth", "max_doublings", "grid_points",
             "refine_tol"});
      StronglyAdapted r;
      r.kind = parse_smoothness_kind(j.value("kind", std::string("D")));
      r.solver.tol = j.value("tol", r.solver.tol);
      r.solver.max_newton = j.value("max_newton", r.solver.max_newton);
      r.solver.max_bisect = j.value("max_bisect", r.solver.max_bisect);
      r.solver.bracket_growth = j.value("bracket_growth", r.solver.bracket_growth);
      r.solver.max_doublings = j.value("max_doublings", r.solver.max_doublings);
      r.solver.sup.grid_points = j.value("grid_points", r.solver.sup.grid_points);
      r.solver.sup.refine_tol = j.value("refine_tol", r.solver.sup.refine_tol);
      rule = r;
    } else if (name == "polyak") {
      allow({"gamma", "f_star"});
      Polyak r;
      r.gamma = j.contains("gamma") ? num("gamma") : r.gamma;
      if (j.contains("f_star")) r.f_star = num("f_star");
      rule = r;
    } else if (name == "normalized") {
      allow({"schedule", "K", "eta0"});
      NormalizedSchedule r;
      const std::string s = j.value("schedule", std::string("anytime"));
      if (s == "anytime")
        r.schedule = Schedule::anytime;
      else if (s == "fixed_horizon")
        r.schedule = Schedule::fixed_horizon;
      else
        throw Error(ErrorCode::parse_error, "unknown normalized schedule '" + s + "'");
      r.K = j.value("K", r.K);
      r.eta0 = j.contains("eta0") ? num("eta0") : r.eta0;
      rule = r;
    } else if (name == "cauchy") {
      allow({});
      rule = Cauchy{};
    } else if (name == "dai") {
      allow({});
      rule = Dai{};
    } else {
      throw Error(ErrorCode::parse_error, "unknown rule '" + name + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("rule JSON: ") + e.what());
  }
  validate_rule(rule);
  return rule;
}

std::string rule_to_json(const StepSizeRule& rule) {
  nlohmann::json j = std::visit(
      overloaded{
          [](const Constant& r) { return nlohmann::json{{"rule", "constant"}, {"eta", r.eta}}; },
          [](const InverseL&) { return nlohmann::json{{"rule", "inverse_L"}}; },
          [](const StronglyAdapted& r) {
            return nlohmann::json{{"rule", "adapted"},
                                  {"kind", std::string(to_string(r.kind))},
                                  {"tol", r.solver.tol},
                                  {"max_newton", r.solver.max_newton},
                                  {"max_bisect", r.solver.max_bisect},
                                  {"bracket_growth", r.solver.bracket_growth},
                                  {"max_doublings", r.solver.max_doublings},
                                  {"grid_points", r.solver.sup.grid_points},
                                  {"refine_tol", r.solver.sup.refine_tol}};
          },
          [](const Polyak& r) {
            nlohmann::json o{{"rule", "polyak"}, {"gamma", r.gamma}};
            if (r.f_star) o["f_star"] = *r.f_star;
            return o;
          },
          [](const NormalizedSchedule& r) {
            return nlohmann::json{{"rule", "normalized"},
                                  {"schedule", r.schedule == Schedule::anytime ? "anytime" : "fixed_horizon"},
                                  {"K", r.K},
                                  {"eta0", r.eta0}};
          },
          [](const Cauchy&) { return nlohmann::json{{"rule", "cauchy"}}; },
          [](const Dai&) { return nlohmann::json{{"rule", "dai"}}; },
      },
      rule);
  return j.dump();
}

}  // namespace dirsmooth
