#include "dirsmooth/optimizers.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

namespace dirsmooth {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::gd: return "gd";
    case Algorithm::normalized_gd: return "normalized_gd";
    case Algorithm::agd_momentum: return "agd_momentum";
    case Algorithm::agd_estimating: return "agd_estimating";
  }
  return "?";
}

std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::max_iters: return "max_iters";
    case Termination::grad_tol: return "grad_tol";
    case Termination::stationary: return "stationary";
    case Termination::error: return "error";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_start(const Objective& obj, const Vector& x0, int iters) {
  if (static_cast<std::size_t>(x0.size()) != obj.dim())
    throw Error(ErrorCode::dimension_mismatch, "starting point does not match objective dimension");
  if (!x0.allFinite()) throw Error(ErrorCode::invalid_argument, "starting point has non-finite entries");
  if (iters < 1) throw Error(ErrorCode::invalid_argument, "iteration count must be at least 1");
}

Error at_iteration(const Error& e, int k) {
  return Error(e.code(), "iteration " + std::to_string(k) + ": " + e.what());
}

void fill_pair_metrics(const Objective& obj, const Vector& a, const Vector& b, IterateRecord& rec,
                       const RunOptions& opts) {
  if (!opts.pair_metrics) return;
  try {
    rec.D = point_wise_D(obj, a, b).value;
    if (!opts.skip_path_wise) rec.A = path_wise_A(obj, a, b, opts.sup).value;
    rec.H = optimal_H(obj, a, b).value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::coincident_points) throw;
  }
}

void fill_mu_star(const Objective& obj, const Vector& x, IterateRecord& rec, const RunOptions& opts) {
  if (!opts.reference) return;
  try {
    rec.mu_star = directional_mu(obj, x, opts.reference->x_star, opts.sup).value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::coincident_points) throw;
  }
}

Trace start_trace(const Objective& obj, Algorithm algorithm, const RunOptions& opts) {
  Trace t;
  t.objective_tag = obj.tag();
  t.algorithm = algorithm;
  t.seed = opts.seed;
  t.thin = opts.thin;
  t.global_L = obj.smoothness_constant();
  return t;
}

// Evaluates the common head of a record; returns false when the run must stop here.
bool head(const Objective& obj, const Vector& x, int k, int iters, const RunOptions& opts, Trace& t,
          IterateRecord& rec, Vector& g) {
  rec.k = k;
  if (!opts.thin) rec.x = x;
  rec.f = obj.value(x);
  g = obj.gradient(x);
  rec.grad_norm = g.norm();
  if (!std::isfinite(rec.f) || !std::isfinite(rec.grad_norm)) {
    t.terminated = Termination::error;
    t.message = "non-finite value at iteration " + std::to_string(k);
    return false;
  }
  fill_mu_star(obj, x, rec, opts);
  if (rec.grad_norm == 0.0) {
    t.terminated = Termination::stationary;
    return false;
  }
  if (rec.grad_norm <= opts.grad_tol) {
    t.terminated = Termination::grad_tol;
    return false;
  }
  if (k == iters) {
    t.terminated = Termination::max_iters;
    return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Gradient descent

Trace gd_run(const Objective& obj, const Vector& x0, const StepSizeRule& rule, int iters, const RunOptions& opts) {
  check_start(obj, x0, iters);
  validate_rule(rule, &obj);
  Trace t = start_trace(obj, Algorithm::gd, opts);
  t.rule = rule;
  t.rule_tag = rule_tag(rule);

  Vector x = x0;
  Vector g;
  for (int k = 0;; ++k) {
    IterateRecord rec;
    if (!head(obj, x, k, iters, opts, t, rec, g)) {
      t.records.push_back(std::move(rec));
      break;
    }
    double eta;
    try {
      eta = compute_step(rule, obj, x, k);
    } catch (const Error& e) {
      // The rule probes x - eta g; when those points cannot be told apart, x is stationary to working precision.
      if (e.code() != ErrorCode::coincident_points) throw at_iteration(e, k);
      t.terminated = Termination::stationary;
      t.message = "iteration " + std::to_string(k) + ": gradient step below floating-point resolution";
      t.records.push_back(std::move(rec));
      break;
    }
    if (eta == 0.0) {
      t.terminated = Termination::stationary;
      t.records.push_back(std::move(rec));
      break;
    }
    Vector xn = x - eta * g;
    if (coincident(x, xn)) {
      t.terminated = Termination::stationary;
      t.message = "iteration " + std::to_string(k) + ": gradient step below floating-point resolution";
      t.records.push_back(std::move(rec));
      break;
    }
    rec.eta = eta;
    fill_pair_metrics(obj, x, xn, rec, opts);
    t.records.push_back(std::move(rec));
    x = std::move(xn);
  }
  return t;
}

Trace normalized_gd_run(const Objective& obj, const Vector& x0, Schedule schedule, double eta0, int iters,
                        const RunOptions& opts, int K) {
  check_start(obj, x0, iters);
  NormalizedSchedule rule{schedule, K > 0 ? K : iters, eta0};
  validate_rule(rule, &obj);
  Trace t = start_trace(obj, Algorithm::normalized_gd, opts);
  t.rule = rule;
  t.rule_tag = rule_tag(rule);

  Vector x = x0;
  Vector g;
  for (int k = 0;; ++k) {
    IterateRecord rec;
    if (!head(obj, x, k, iters, opts, t, rec, g)) {
      t.records.push_back(std::move(rec));
      break;
    }
    const double eta = normalized_schedule_step(k, rule.schedule, rule.eta0, rule.K);
    Vector xn = x - (eta / rec.grad_norm) * g;
    rec.eta = eta;
    fill_pair_metrics(obj, x, xn, rec, opts);
    t.records.push_back(std::move(rec));
    x = std::move(xn);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Accelerated gradient descent

double positive_quadratic_root(double b, double c) {
  if (!(c > 0)) throw Error(ErrorCode::numerical_failure, "quadratic for alpha has no positive root");
  const double s = std::sqrt(b * b + 4.0 * c);
  return b >= 0 ? 2.0 * c / (b + s) : 0.5 * (s - b);
}

double agd_alpha0_from_gamma0(double eta0, double mu, double gamma0) {
  if (!(eta0 > 0) || !(gamma0 > 0) || mu < 0) throw Error(ErrorCode::invalid_argument, "need eta0 > 0, gamma0 > 0, mu >= 0");
  return positive_quadratic_root(eta0 * (gamma0 - mu), eta0 * gamma0);
}

double agd_gamma0_from_alpha0(double eta0, double mu, double alpha0) {
  if (!(alpha0 > 0 && alpha0 < 1)) throw Error(ErrorCode::invalid_argument, "gamma0 is defined for alpha0 in (0, 1)");
  if (!(eta0 > 0)) throw Error(ErrorCode::invalid_argument, "eta0 must be positive");
  return (alpha0 * alpha0 - eta0 * alpha0 * mu) / (eta0 * (1.0 - alpha0));
}

namespace {

class StepProvider {
 public:
  StepProvider(const Objective& obj, const StepSource& src, double mu) : obj_(obj), src_(src), mu_(mu) {
    switch (src.kind) {
      case StepSource::Kind::constant:
        if (!(src.eta > 0)) throw Error(ErrorCode::invalid_argument, "AGD constant step must be positive");
        break;
      case StepSource::Kind::sequence:
        for (double e : src.etas)
          if (!(e > 0)) throw Error(ErrorCode::invalid_argument, "AGD step sequence must be positive");
        break;
      case StepSource::Kind::inverse_L: L_ = smoothness_constant(obj); break;
      case StepSource::Kind::adapted:
        if (src.adapted_kind != SmoothnessKind::point_wise_D && src.adapted_kind != SmoothnessKind::path_wise_A)
          throw Error(ErrorCode::invalid_argument, "adapted AGD steps use D or A");
        break;
    }
  }

  bool needs_point() const { return src_.kind == StepSource::Kind::adapted; }

  double at(int k, const Vector& y) const {
    double eta = 0.0;
    switch (src_.kind) {
      case StepSource::Kind::constant: eta = src_.eta; break;
      case StepSource::Kind::sequence:
        if (k >= static_cast<int>(src_.etas.size()))
          throw Error(ErrorCode::invalid_argument, "AGD step sequence shorter than the run");
        eta = src_.etas[static_cast<std::size_t>(k)];
        break;
      case StepSource::Kind::inverse_L: eta = 1.0 / L_; break;
      case StepSource::Kind::adapted:
        try {
          eta = solve_strongly_adapted(obj_, y, src_.adapted_kind, src_.solver);
        } catch (const Error& e) {
          throw at_iteration(e, k);
        }
        break;
    }
    if (mu_ > 0 && eta * mu_ > 1.0 + 1e-12)
      throw Error(ErrorCode::invalid_argument,
                  "iteration " + std::to_string(k) + ": step exceeds 1/mu, which the accelerated scheme forbids");
    return eta;
  }

  int passes() const { return std::max(1, src_.fixed_point_passes); }

 private:
  const Objective& obj_;
  const StepSource& src_;
  double mu_;
  double L_ = 0.0;
};

void check_agd(double mu) {
  if (!(mu >= 0) || !std::isfinite(mu)) throw Error(ErrorCode::invalid_argument, "mu must be finite and >= 0");
}

bool agd_head(const Objective& obj, const Vector& x, const Vector& y, int k, int iters, const RunOptions& opts,
              Trace& t, IterateRecord& rec, Vector& gy) {
  Vector gx;
  if (!head(obj, x, k, iters, opts, t, rec, gx)) return false;
  if (!opts.thin) rec.y = y;
  rec.f_y = obj.value(y);
  gy = obj.gradient(y);
  rec.grad_norm_y = gy.norm();
  if (!std::isfinite(*rec.f_y) || !std::isfinite(*rec.grad_norm_y)) {
    t.terminated = Termination::error;
    t.message = "non-finite value at y, iteration " + std::to_string(k);
    return false;
  }
  if (*rec.grad_norm_y == 0.0) {
    t.terminated = Termination::stationary;
    return false;
  }
  return true;
}

/// Final record at x for a run whose step at iteration k fell below floating-point resolution.
void stop_stationary(const Objective& obj, const Vector& x, int k, const RunOptions& opts, Trace& t) {
  IterateRecord rec;
  Vector g;
  head(obj, x, k, k, opts, t, rec, g);
  if (t.terminated == Termination::max_iters) {
    t.terminated = Termination::stationary;
    t.message = "iteration " + std::to_string(k) + ": gradient step below floating-point resolution";
  }
  t.records.push_back(std::move(rec));
}

/// Adapted AGD step at iteration k: eta with eta <= solve(y(eta)), found by
/// fixed-point passes, falling back to the largest feasible probe or halving.
template <class YOf>
double settle_adapted(const StepProvider& steps, int k, double eta, YOf&& y_of) {
  double feasible = 0.0;
  for (int pass = 0; pass < steps.passes(); ++pass) {
    const double solved = steps.at(k, y_of(eta));
    if (std::abs(solved - eta) <= 1e-12 * eta) return std::min(solved, eta);
    if (solved >= eta) feasible = std::max(feasible, eta);
    eta = solved;
  }
  if (feasible > 0) return feasible;
  for (int i = 0; i < 200; ++i) {
    eta *= 0.5;
    if (steps.at(k, y_of(eta)) >= eta) return eta;
  }
  throw Error(ErrorCode::numerical_failure, "iteration " + std::to_string(k) + ": adapted AGD step did not settle");
}

}  // namespace

Trace agd_momentum_run(const Objective& obj, const Vector& x0, const StepSource& etas, double mu, double alpha0,
                       int iters, const RunOptions& opts) {
  check_start(obj, x0, iters);
  check_agd(mu);
  if (!(alpha0 > 0 && alpha0 <= 1)) throw Error(ErrorCode::invalid_argument, "alpha0 must lie in (0, 1]");
  StepProvider steps(obj, etas, mu);
  Trace t = start_trace(obj, Algorithm::agd_momentum, opts);
  t.rule_tag = "agd_momentum";
  t.mu = mu;
  t.alpha0 = alpha0;

  Vector x = x0;
  Vector y = x0;
  double alpha = alpha0;
  double eta = steps.at(0, y);
  t.gamma0 = alpha0 < 1 ? agd_gamma0_from_alpha0(eta, mu, alpha0) : kInf;

  auto next_alpha = [&](double eta_next) {
    const double r = eta_next / eta;
    const double a = positive_quadratic_root(alpha * alpha * r - eta_next * mu, alpha * alpha * r);
    if (!(a > 0 && a <= 1.0 + 1e-15)) throw Error(ErrorCode::numerical_failure, "no admissible alpha in (0, 1]");
    return std::min(a, 1.0);
  };

  for (int k = 0;; ++k) {
    IterateRecord rec;
    Vector gy;
    if (!agd_head(obj, x, y, k, iters, opts, t, rec, gy)) {
      t.records.push_back(std::move(rec));
      break;
    }
    rec.eta = eta;
    rec.alpha = alpha;
    Vector xn = y - eta * gy;
    fill_pair_metrics(obj, y, xn, rec, opts);
    t.records.push_back(std::move(rec));

    if (k + 1 < iters) {
      auto y_of = [&](double e) -> Vector {
        return xn + (alpha * (1.0 - alpha) / (alpha * alpha + next_alpha(e))) * (xn - x);
      };
      double eta_next;
      try {
        eta_next = steps.needs_point() ? settle_adapted(steps, k + 1, eta, y_of) : steps.at(k + 1, xn);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::coincident_points) throw;
        stop_stationary(obj, xn, k + 1, opts, t);
        break;
      }
      const double alpha_next = next_alpha(eta_next);
      Vector y_next = y_of(eta_next);
      x = std::move(xn);
      y = std::move(y_next);
      alpha = alpha_next;
      eta = eta_next;
    } else {
      x = std::move(xn);
      y = x;
    }
  }
  return t;
}

Trace agd_estimating_run(const Objective& obj, const Vector& x0, const StepSource& etas, double mu, double gamma0,
                         int iters, const RunOptions& opts) {
  check_start(obj, x0, iters);
  check_agd(mu);
  if (!(gamma0 > 0) || !std::isfinite(gamma0)) throw Error(ErrorCode::invalid_argument, "gamma0 must be positive");
  StepProvider steps(obj, etas, mu);
  Trace t = start_trace(obj, Algorithm::agd_estimating, opts);
  t.rule_tag = "agd_estimating";
  t.mu = mu;
  t.gamma0 = gamma0;

  Vector x = x0;
  Vector v = x0;
  double gamma = gamma0;
  double eta = steps.at(0, x0);

  struct Coeffs {
    double alpha, gamma_next;
    Vector y;
  };
  auto coeffs = [&](double eta_k) {
    const double a = positive_quadratic_root(eta_k * (gamma - mu), eta_k * gamma);
    if (!(a > 0 && a <= 1.0 + 1e-15)) throw Error(ErrorCode::numerical_failure, "no admissible alpha in (0, 1]");
    const double gn = (1.0 - a) * gamma + a * mu;
    Vector y = (a * gamma * v + gn * x) / (gamma + a * mu);
    return Coeffs{a, gn, std::move(y)};
  };

  Coeffs c = coeffs(eta);
  t.alpha0 = c.alpha;
  for (int k = 0;; ++k) {
    if (k > 0 && k < iters) {
      try {
        if (steps.needs_point())
          eta = settle_adapted(steps, k, eta, [&](double e) { return coeffs(e).y; });
        else
          eta = steps.at(k, x);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::coincident_points) throw;
        stop_stationary(obj, x, k, opts, t);
        break;
      }
      c = coeffs(eta);
    }
    const Vector y = k < iters ? c.y : x;
    IterateRecord rec;
    Vector gy;
    if (!agd_head(obj, x, y, k, iters, opts, t, rec, gy)) {
      t.records.push_back(std::move(rec));
      break;
    }
    rec.eta = eta;
    rec.alpha = c.alpha;
    rec.gamma = gamma;
    Vector xn = y - eta * gy;
    fill_pair_metrics(obj, y, xn, rec, opts);
    t.records.push_back(std::move(rec));

    v = ((1.0 - c.alpha) * gamma * v + c.alpha * mu * y - c.alpha * gy) / c.gamma_next;
    gamma = c.gamma_next;
    x = std::move(xn);
  }
  return t;
}

// ---------------------------------------------------------------------------
// Exponential search

long exponential_search_budget(double eta0, double L, int K) {
  if (!(eta0 > 0) || !(L > 0) || K < 1) throw Error(ErrorCode::invalid_argument, "budget needs eta0 > 0, L > 0, K >= 1");
  const double a = std::log2(2.0 * eta0 * L);
  const long n = a > 1.0 ? static_cast<long>(std::ceil(std::log2(a))) : 1;
  return 2L * K * std::max(n, 1L);
}

ExpSearchResult exponential_search_gd(const Objective& obj, const Vector& x0, double eta0, int K,
                                      const ExpSearchOptions& opts) {
  check_start(obj, x0, K);
  if (!(eta0 > 0) || !std::isfinite(eta0)) throw Error(ErrorCode::invalid_argument, "eta0 must be positive");
  if (opts.kind == SmoothnessKind::global_L && !obj.smoothness_constant())
    throw Error(ErrorCode::unsupported, "global L is unknown for this objective");

  ExpSearchResult out;
  out.eta0 = eta0;
  out.K = K;
  std::map<double, std::size_t> memo;

  auto probe = [&](double eta) -> const ExpSearchProbe& {
    if (auto it = memo.find(eta); it != memo.end()) return out.probes[it->second];
    ExpSearchProbe p;
    p.eta = eta;
    Vector x = x0;
    double sg = 0.0, smg = 0.0;
    for (int i = 0; i < K; ++i) {
      const Vector g = obj.gradient(x);
      const double gn2 = g.squaredNorm();
      if (!std::isfinite(gn2)) {
        p.finite = false;
        break;
      }
      if (gn2 == 0.0) break;
      Vector xn = x - eta * g;
      ++p.steps;
      if (!xn.allFinite()) {
        p.finite = false;
        break;
      }
      double M = 0.0;
      try {
        M = evaluate_smoothness(obj, opts.kind, x, xn, opts.sup).value;
      } catch (const Error& e) {
        // Steps below the coincidence threshold contribute no curvature.
        if (e.code() != ErrorCode::coincident_points) throw;
      }
      if (!std::isfinite(M)) {
        p.finite = false;
        break;
      }
      sg += gn2;
      smg += M * gn2;
      x = std::move(xn);
    }
    if (p.finite && !(std::isfinite(sg) && std::isfinite(smg))) p.finite = false;
    p.psi = p.finite ? (smg > 0 ? sg / smg : kInf) : 0.0;
    p.phi = p.finite ? eta - p.psi : kInf;
    out.inner_gd_steps += p.steps;
    memo.emplace(eta, out.probes.size());
    out.probes.push_back(p);
    return out.probes.back();
  };

  auto bisection = [&](double lo, double hi) -> double {
    if (probe(hi).phi <= 0) return hi;
    if (probe(lo).phi > 0) return kInf;
    while (hi > 2.0 * lo) {
      const double mid = std::sqrt(lo) * std::sqrt(hi);
      if (probe(mid).phi > 0)
        hi = mid;
      else
        lo = mid;
    }
    out.eta_hi = hi;
    out.psi_hi = probe(hi).psi;
    return lo;
  };

  if (probe(eta0).phi <= 0) {
    out.case_id = 1;
    out.eta = eta0;
  } else {
    out.case_id = 2;
    bool found = false;
    for (int k = 1; k <= opts.max_outer; ++k) {
      if (k >= 31) throw Error(ErrorCode::numerical_failure, "exponential search exhausted representable step sizes");
      const double lo = std::ldexp(eta0, -(1 << k));
      if (lo == 0.0) throw Error(ErrorCode::numerical_failure, "exponential search underflowed the step size");
      const double r = bisection(lo, eta0);
      if (std::isfinite(r)) {
        out.eta = r;
        found = true;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::not_converged, "exponential search exceeded its outer iteration limit");
  }
  out.trace = gd_run(obj, x0, Constant{out.eta}, K, opts.trace_options);
  out.trace.rule_tag = "expsearch(" + std::string(to_string(opts.kind)) + ")";
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt17(const std::optional<double>& v) { return v ? num17(*v) : std::string(); }

nlohmann::json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const nlohmann::json& j) {
  const auto xs = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

// nlohmann writes non-finite doubles as null; keep them as strings instead.
nlohmann::json dbl(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

double undbl(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json meta(const Trace& t) {
  nlohmann::json j;
  j["objective_tag"] = t.objective_tag;
  j["rule_tag"] = t.rule_tag;
  j["seed"] = t.seed;
  j["algorithm"] = std::string(to_string(t.algorithm));
  if (t.rule) j["rule"] = nlohmann::json::parse(rule_to_json(*t.rule));
  j["terminated"] = std::string(to_string(t.terminated));
  j["message"] = t.message;
  j["thin"] = t.thin;
  if (t.global_L) j["global_L"] = dbl(*t.global_L);
  j["mu"] = dbl(t.mu);
  j["alpha0"] = dbl(t.alpha0);
  j["gamma0"] = dbl(t.gamma0);
  j["records"] = t.records.size();
  return j;
}

template <class E>
E parse_enum(const std::string& s, std::initializer_list<E> all) {
  for (E e : all)
    if (to_string(e) == s) return e;
  throw Error(ErrorCode::parse_error, "unknown enum value '" + s + "' in trace JSON");
}

}  // namespace

std::string trace_csv(const Trace& trace) {
  std::string out = "k,f,grad_norm,eta,D,A,H,mu_star\n";
  for (const auto& r : trace.records) {
    out += std::to_string(r.k) + "," + num17(r.f) + "," + num17(r.grad_norm) + "," + num17(r.eta) + "," + opt17(r.D) +
           "," + opt17(r.A) + "," + opt17(r.H) + "," + opt17(r.mu_star) + "\n";
  }
  return out;
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  os << trace_csv(trace);
  if (!os) throw Error(ErrorCode::io_error, "write failed for '" + path.string() + "'");
}

std::string trace_meta_json(const Trace& trace) { return meta(trace).dump(2); }

std::string trace_to_json(const Trace& trace) {
  nlohmann::json j = meta(trace);
  auto& recs = j["records"] = nlohmann::json::array();
  for (const auto& r : trace.records) {
    nlohmann::json o;
    o["k"] = r.k;
    if (r.x.size() > 0) o["x"] = vec_json(r.x);
    o["f"] = dbl(r.f);
    o["grad_norm"] = dbl(r.grad_norm);
    o["eta"] = dbl(r.eta);
    if (r.D) o["D"] = dbl(*r.D);
    if (r.A) o["A"] = dbl(*r.A);
    if (r.H) o["H"] = dbl(*r.H);
    if (r.mu_star) o["mu_star"] = dbl(*r.mu_star);
    if (r.y && r.y->size() > 0) o["y"] = vec_json(*r.y);
    if (r.f_y) o["f_y"] = dbl(*r.f_y);
    if (r.grad_norm_y) o["grad_norm_y"] = dbl(*r.grad_norm_y);
    if (r.alpha) o["alpha"] = dbl(*r.alpha);
    if (r.gamma) o["gamma"] = dbl(*r.gamma);
    recs.push_back(std::move(o));
  }
  return j.dump();
}

Trace trace_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Trace t;
    t.objective_tag = j.value("objective_tag", std::string{});
    t.rule_tag = j.value("rule_tag", std::string{});
    t.seed = j.value("seed", std::uint64_t{0});
    t.algorithm = parse_enum(j.at("algorithm").get<std::string>(),
                             {Algorithm::gd, Algorithm::normalized_gd, Algorithm::agd_momentum, Algorithm::agd_estimating});
    if (j.contains("rule")) t.rule = rule_from_json(j["rule"].dump());
    t.terminated = parse_enum(j.value("terminated", std::string("max_iters")),
                              {Termination::max_iters, Termination::grad_tol, Termination::stationary, Termination::error});
    t.message = j.value("message", std::string{});
    t.thin = j.value("thin", false);
    if (j.contains("global_L")) t.global_L = undbl(j["global_L"]);
    if (j.contains("mu")) t.mu = undbl(j["mu"]);
    if (j.contains("alpha0")) t.alpha0 = undbl(j["alpha0"]);
    if (j.contains("gamma0")) t.gamma0 = undbl(j["gamma0"]);
    auto opt = [](const nlohmann::json& o, const char* key) -> std::optional<double> {
      if (!o.contains(key)) return std::nullopt;
      return undbl(o[key]);
    };
    for (const auto& o : j.at("records")) {
      IterateRecord r;
      r.k = o.at("k").get<int>();
      if (o.contains("x")) r.x = json_vec(o["x"]);
      r.f = undbl(o.at("f"));
      r.grad_norm = undbl(o.at("grad_norm"));
      r.eta = undbl(o.at("eta"));
      r.D = opt(o, "D");
      r.A = opt(o, "A");
      r.H = opt(o, "H");
      r.mu_star = opt(o, "mu_star");
      if (o.contains("y")) r.y = json_vec(o["y"]);
      r.f_y = opt(o, "f_y");
      r.grad_norm_y = opt(o, "grad_norm_y");
      r.alpha = opt(o, "alpha");
      r.gamma = opt(o, "gamma");
      if (r.k != static_cast<int>(t.records.size()))
        throw Error(ErrorCode::parse_error, "trace JSON records are not consecutive");
      t.records.push_back(std::move(r));
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("trace JSON: ") + e.what());
  }
}

}  // namespace dirsmooth
