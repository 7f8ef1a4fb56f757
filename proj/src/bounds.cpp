#include "dirsmooth/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace dirsmooth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMinM = 1e-14;

void require_points(const Trace& t) {
  if (t.records.empty()) throw Error(ErrorCode::missing_metrics, "trace is empty");
  for (const auto& r : t.records)
    if (r.x.size() == 0) throw Error(ErrorCode::missing_metrics, "trace has no stored iterates (thin mode)");
}

void require_ref(const Objective& obj, const Trace& t, const ReferenceSolution& ref) {
  if (static_cast<std::size_t>(ref.x_star.size()) != obj.dim() || t.records[0].x.size() != ref.x_star.size())
    throw Error(ErrorCode::dimension_mismatch, "reference solution does not match the trace dimension");
}

void require_convex(const Objective& obj) {
  if (!obj.convex()) throw Error(ErrorCode::hypothesis_failed, "bound requires a convex objective");
}

void require_algorithm(const Trace& t, Algorithm a, const char* bound) {
  if (t.algorithm != a)
    throw Error(ErrorCode::hypothesis_failed, std::string(bound) + " needs a " + std::string(to_string(a)) +
                                                  " trace, got " + std::string(to_string(t.algorithm)));
}

// Number of records that carry a step (all but the last).
std::size_t steps(const Trace& t) { return t.records.size() - 1; }

double metric(const Trace& t, std::size_t i, SmoothnessKind M) {
  const auto& r = t.records[i];
  std::optional<double> v;
  switch (M) {
    case SmoothnessKind::point_wise_D: v = r.D; break;
    case SmoothnessKind::path_wise_A: v = r.A; break;
    case SmoothnessKind::optimal_H: v = r.H; break;
    case SmoothnessKind::global_L: v = t.global_L; break;
  }
  if (!v)
    throw Error(ErrorCode::missing_metrics, "trace lacks " + std::string(to_string(M)) + " at index " +
                                                std::to_string(i));
  return *v;
}

// Zero when x_i coincides with x*.
double mu_at(const Trace& t, std::size_t i, const ReferenceSolution& ref) {
  const auto& m = t.records[i].mu_star;
  const Vector& x = t.records[i].x;
  if (!m && x.size() == ref.x_star.size() && coincident(x, ref.x_star)) return 0.0;
  if (!m) throw Error(ErrorCode::missing_metrics, "trace lacks mu(x_i, x*) at index " + std::to_string(i));
  return *m;
}

double Delta0(const Trace& t, const ReferenceSolution& ref) { return (t.records[0].x - ref.x_star).squaredNorm(); }

std::vector<double> last_gaps(const Trace& t, const ReferenceSolution& ref) {
  std::vector<double> out;
  out.reserve(t.size());
  for (const auto& r : t.records) out.push_back(r.f - ref.f_star);
  return out;
}

// min over i < k of delta_i (NaN at k = 0).
std::vector<double> best_before(const Trace& t, const ReferenceSolution& ref) {
  std::vector<double> out(t.size(), kNaN);
  double best = kInf;
  for (std::size_t k = 1; k < t.size(); ++k) {
    best = std::min(best, t.records[k - 1].f - ref.f_star);
    out[k] = best;
  }
  return out;
}

BoundSeries make_series(const std::string& name, BoundTarget target, std::string tag, std::size_t n, double scale) {
  BoundSeries s;
  s.name = name;
  s.target = target;
  s.inputs_tag = std::move(tag);
  s.values.assign(n, kInf);
  s.scale = scale;
  return s;
}

std::string tag_m(SmoothnessKind M) { return "M=" + std::string(to_string(M)); }

}  // namespace

DominanceReport check_dominance(const BoundSeries& series, double rel_tol) {
  DominanceReport rep;
  rep.max_violation = -kInf;
  for (const auto& real : series.realized) {
    const std::size_t n = std::min(real.values.size(), series.values.size());
    for (std::size_t k = 0; k < n; ++k) {
      const double b = series.values[k];
      const double r = real.values[k];
      if (std::isnan(r) || b == kInf) continue;
      ++rep.checked;
      const double v = std::isnan(b) ? kInf : (r - b) / (1.0 + std::max(std::abs(series.scale), std::abs(b)));
      if (v > rep.max_violation) {
        rep.max_violation = v;
        rep.index = static_cast<int>(k);
        rep.realized_at = real.at;
      }
    }
  }
  rep.ok = rep.checked == 0 || rep.max_violation <= rel_tol;
  return rep;
}

BoundSeries bound_sc_split(const Objective& obj, const Trace& t, const ReferenceSolution& ref, SmoothnessKind M,
                           SplitProductRange range) {
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_algorithm(t, Algorithm::gd, "split bound");
  const std::size_t n = t.size();
  BoundSeries s = make_series("sc_split", BoundTarget::gap,
                              tag_m(M) + (range == SplitProductRange::through_k ? ",j<=k" : ",j<=k-1"), n,
                              std::abs(ref.f_star));

  // contraction = product of good factors for i < k; carried = bad-step terms with their good factors.
  double contraction = 1.0;
  double carried = 0.0;
  const double delta0 = t.records[0].f - ref.f_star;
  for (std::size_t k = 0; k < n; ++k) {
    double extra = 1.0;  // factor j = k for the through_k convention
    if (range == SplitProductRange::through_k && k < steps(t)) {
      const double eta = t.records[k].eta;
      const double Mk = metric(t, k, M);
      if (eta * Mk < 2.0) extra = 1.0 + eta * (eta * Mk - 2.0) * mu_at(t, k, ref);
    }
    s.values[k] = contraction * delta0 + carried * extra;
    if (k == steps(t)) break;
    const double eta = t.records[k].eta;
    const double Mk = metric(t, k, M);
    const double lambda = eta * Mk - 2.0;
    if (eta * Mk < 2.0) {
      const double factor = 1.0 + eta * lambda * mu_at(t, k, ref);
      contraction *= factor;
      carried *= factor;
    } else {
      carried += 0.5 * eta * lambda * t.records[k].grad_norm * t.records[k].grad_norm;
    }
  }
  s.realized.push_back({"last", last_gaps(t, ref)});
  return s;
}

BoundSeries bound_sc_iterates(const Objective& obj, const Trace& t, const ReferenceSolution& ref, SmoothnessKind M) {
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_algorithm(t, Algorithm::gd, "iterate-distance bound");
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  BoundSeries s = make_series("sc_iterates", BoundTarget::squared_distance, tag_m(M), n, D0);
  double b = D0;
  for (std::size_t k = 0; k < n; ++k) {
    s.values[k] = b;
    if (k == steps(t)) break;
    const double eta = t.records[k].eta;
    const double Mk = metric(t, k, M);
    const double denom = 1.0 + mu_at(t, k + 1, ref) * eta;
    const double gn = t.records[k].grad_norm;
    b = std::abs(1.0 - mu_at(t, k, ref) * eta) / denom * b + eta * eta * (Mk * eta - 1.0) / denom * gn * gn;
  }
  RealizedSeries real{"last", {}};
  for (const auto& r : t.records) real.values.push_back((r.x - ref.x_star).squaredNorm());
  s.realized.push_back(std::move(real));
  return s;
}

BoundSeries bound_convex_avg(const Objective& obj, const Trace& t, const ReferenceSolution& ref, SmoothnessKind M) {
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_algorithm(t, Algorithm::gd, "averaged-iterate bound");
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  BoundSeries s = make_series("convex_avg", BoundTarget::gap, tag_m(M), n, std::abs(ref.f_star));
  RealizedSeries real{"eta_weighted_average_next", std::vector<double>(n, kNaN)};
  double sum_eta = 0.0;
  double correction = 0.0;
  Vector weighted = Vector::Zero(t.records[0].x.size());
  for (std::size_t k = 0; k < steps(t); ++k) {
    const double eta = t.records[k].eta;
    const double gn = t.records[k].grad_norm;
    sum_eta += eta;
    correction += eta * eta * (eta * metric(t, k, M) - 1.0) * gn * gn;
    weighted += eta * t.records[k + 1].x;
    if (!(sum_eta > 0)) throw Error(ErrorCode::invalid_argument, "sum of step sizes is zero");
    s.values[k] = (D0 + correction) / (2.0 * sum_eta);
    Vector xbar = weighted / sum_eta;
    real.values[k] = obj.value(xbar) - ref.f_star;
    s.averaged_iterates.push_back(std::move(xbar));
  }
  s.realized.push_back(std::move(real));
  return s;
}

BoundSeries bound_agd(const Objective& obj, const Trace& t, const ReferenceSolution& ref) {
  require_points(t);
  require_ref(obj, t, ref);
  if (t.algorithm != Algorithm::agd_momentum && t.algorithm != Algorithm::agd_estimating)
    throw Error(ErrorCode::hypothesis_failed, "accelerated bound needs an AGD trace");
  const std::size_t n = t.size();
  for (std::size_t k = 0; k < steps(t); ++k) {
    const auto& r = t.records[k];
    if (!r.H) throw Error(ErrorCode::missing_metrics, "AGD trace lacks H(y_k, x_{k+1}) at index " + std::to_string(k));
    // Rounding allowance for H, relative 1e-12 in function values.
    double slack = 1e-9;
    if (r.f_y && r.grad_norm_y) {
      const double step2 = r.eta * *r.grad_norm_y * *r.grad_norm_y;
      const double noise = 1e-12 * (std::abs(t.records[k + 1].f) + std::abs(*r.f_y) + step2);
      if (step2 > 0) slack += 2.0 * noise / step2;
    }
    if (r.eta * *r.H > 1.0 + slack)
      throw Error(ErrorCode::hypothesis_failed,
                  "step at index " + std::to_string(k) + " is not adapted: eta * H = " + std::to_string(r.eta * *r.H));
  }
  const double mu = t.mu;
  const double delta0 = t.records[0].f - ref.f_star;
  const double D0 = Delta0(t, ref);
  const double eta0 = t.records[0].eta;
  const bool strongly =
      mu > 0 && std::abs(t.alpha0 - std::sqrt(eta0 * mu)) <= 1e-12 * std::max(1.0, std::sqrt(eta0 * mu));

  std::ostringstream tag;
  tag << "mu=" << mu << ",alpha0=" << t.alpha0 << ",gamma0=" << t.gamma0;
  BoundSeries s = make_series(strongly ? "agd_strongly_convex" : "agd_convex", BoundTarget::gap, tag.str(), n,
                              std::abs(ref.f_star));
  if (strongly) {
    double prod = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      s.values[k] = prod * (delta0 + 0.5 * mu * D0);
      if (k < steps(t)) prod *= 1.0 - std::sqrt(mu * t.records[k].eta);
    }
  } else {
    const double gamma0 = t.gamma0;
    if (!(gamma0 > mu) || !std::isfinite(gamma0))
      throw Error(ErrorCode::hypothesis_failed, "convex accelerated bound needs gamma0 in (mu, mu + 3/eta_min)");
    const double head = delta0 + 0.5 * gamma0 * D0;
    s.values[0] = head;
    double eta_min = kInf;
    for (std::size_t k = 1; k < n; ++k) {
      eta_min = std::min(eta_min, t.records[k - 1].eta);
      if (gamma0 < mu + 3.0 / eta_min) {
        const double kk = static_cast<double>(k);
        s.values[k] = 4.0 / (eta_min * (gamma0 - mu) * kk * kk) * head;
      }
    }
  }
  s.realized.push_back({"last", last_gaps(t, ref)});
  return s;
}

namespace {

void require_polyak(const Trace& t, double gamma, const char* bound) {
  require_algorithm(t, Algorithm::gd, bound);
  const auto* p = t.rule ? std::get_if<Polyak>(&*t.rule) : nullptr;
  if (!p) throw Error(ErrorCode::hypothesis_failed, std::string(bound) + " needs a Polyak-step trace");
  if (std::abs(p->gamma - gamma) > 1e-12)
    throw Error(ErrorCode::hypothesis_failed, std::string(bound) + ": gamma differs from the trace's Polyak gamma");
}

}  // namespace

BoundSeries bound_polyak(const Objective& obj, const Trace& t, const ReferenceSolution& ref, SmoothnessKind M,
                         double gamma) {
  if (!(gamma > 1 && gamma < 2)) throw Error(ErrorCode::invalid_argument, "Polyak bound needs gamma in (1, 2)");
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_polyak(t, gamma, "Polyak bound");
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  const double c = gamma / ((2.0 - gamma) * (gamma - 1.0));
  std::ostringstream tag;
  tag << tag_m(M) << ",gamma=" << gamma;
  BoundSeries s = make_series("polyak", BoundTarget::gap, tag.str(), n, std::abs(ref.f_star));
  RealizedSeries avg{"inverse_M_weighted_average", std::vector<double>(n, kNaN)};
  double inv_sum = 0.0;
  Vector weighted = Vector::Zero(t.records[0].x.size());
  for (std::size_t k = 1; k < n; ++k) {
    double Mi = metric(t, k - 1, M);
    if (Mi < kMinM) {
      Mi = kMinM;
      s.clamped_indices.push_back(static_cast<int>(k - 1));
    }
    inv_sum += 1.0 / Mi;
    weighted += t.records[k - 1].x / Mi;
    s.values[k] = c * D0 / (2.0 * inv_sum);
    Vector xbar = weighted / inv_sum;
    avg.values[k] = obj.value(xbar) - ref.f_star;
    s.averaged_iterates.push_back(std::move(xbar));
  }
  s.realized.push_back({"best", best_before(t, ref)});
  s.realized.push_back(std::move(avg));
  return s;
}

BoundSeries bound_polyak_alternate(const Objective& obj, const Trace& t, const ReferenceSolution& ref, double gamma) {
  if (!(gamma > 0 && gamma < 2)) throw Error(ErrorCode::invalid_argument, "alternate Polyak bound needs gamma < 2");
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_polyak(t, gamma, "alternate Polyak bound");
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  std::ostringstream tag;
  tag << "gamma=" << gamma;
  BoundSeries s = make_series("polyak_alternate", BoundTarget::gap, tag.str(), n, std::abs(ref.f_star));
  RealizedSeries avg{"eta_weighted_average", std::vector<double>(n, kNaN)};
  double sum_before = 0.0;
  Vector weighted = Vector::Zero(t.records[0].x.size());
  for (std::size_t k = 1; k < n; ++k) {
    const double eta_prev = t.records[k - 1].eta;
    sum_before += eta_prev;
    weighted += eta_prev * t.records[k - 1].x;
    const double sum_through = sum_before + t.records[k].eta;
    s.values[k] = D0 / ((2.0 - gamma) * sum_through);
    Vector xbar = weighted / sum_before;
    avg.values[k] = obj.value(xbar) - ref.f_star;
    s.averaged_iterates.push_back(std::move(xbar));
  }
  s.realized.push_back(std::move(avg));
  return s;
}

BoundSeries bound_ngd(const Objective& obj, const Trace& t, const ReferenceSolution& ref, SmoothnessKind M,
                      NgdOffset offset) {
  if (M != SmoothnessKind::point_wise_D && M != SmoothnessKind::global_L)
    throw Error(ErrorCode::invalid_argument, "normalized-GD bound is stated for D (or global L)");
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  require_algorithm(t, Algorithm::normalized_gd, "normalized-GD bound");
  for (std::size_t k = 1; k < steps(t); ++k)
    if (t.records[k].eta > t.records[k - 1].eta)
      throw Error(ErrorCode::hypothesis_failed, "increasing step-size schedule detected at index " + std::to_string(k));
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  const double f0 = t.records[0].f;
  const double eta0 = t.records[0].eta;
  BoundSeries s = make_series("ngd", BoundTarget::gap,
                              tag_m(M) + (offset == NgdOffset::path_max ? ",offset=path_max" : ""), n,
                              std::abs(ref.f_star));
  double sum_eta2 = 0.0;
  double sum_M = 0.0;
  double path_max = -kInf;
  for (std::size_t k = 1; k < n; ++k) {
    const double eta_prev = t.records[k - 1].eta;
    sum_eta2 += eta_prev * eta_prev;
    sum_M += metric(t, k - 1, M);
    if (k >= 2) path_max = std::max(path_max, t.records[k - 1].f);
    const double c = (offset == NgdOffset::path_max && k >= 2) ? path_max : 0.0;
    const double kk = static_cast<double>(k);
    const double S = D0 + sum_eta2;
    s.values[k] = S / (2.0 * kk * kk) * ((f0 - c) / (eta0 * eta0) - (ref.f_star - c) / (eta_prev * eta_prev)) +
                  S / (2.0 * kk) * (sum_M / kk);
  }
  s.realized.push_back({"best", best_before(t, ref)});
  return s;
}

BoundSeries bound_classic_L(const Objective& obj, const Trace& t, const ReferenceSolution& ref, double L,
                            ClassicFlavor flavor) {
  if (!(L > 0)) throw Error(ErrorCode::invalid_argument, "classic bound needs L > 0");
  require_points(t);
  require_ref(obj, t, ref);
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  std::ostringstream tag;
  tag << "L=" << L;
  BoundSeries s = make_series("classic_L", BoundTarget::gap, tag.str(), n, std::abs(ref.f_star));
  for (std::size_t k = 1; k < n; ++k) s.values[k] = 2.0 * L * D0 / static_cast<double>(k);
  if (flavor == ClassicFlavor::gd)
    s.realized.push_back({"last", last_gaps(t, ref)});
  else
    s.realized.push_back({"best", best_before(t, ref)});
  return s;
}

BoundSeries bound_exponential_search(const Objective& obj, const ExpSearchResult& result,
                                     const ReferenceSolution& ref) {
  const Trace& t = result.trace;
  require_convex(obj);
  require_points(t);
  require_ref(obj, t, ref);
  if (result.K < 1) throw Error(ErrorCode::invalid_argument, "exponential search result has no horizon");
  const std::size_t n = t.size();
  const double D0 = Delta0(t, ref);
  const double K = static_cast<double>(result.K);
  BoundSeries s = make_series(result.case_id == 1 ? "expsearch_case1" : "expsearch_case2", BoundTarget::gap,
                              "case=" + std::to_string(result.case_id), n, std::abs(ref.f_star));
  double value;
  if (result.case_id == 1) {
    value = D0 / (2.0 * K * result.eta0);
  } else {
    if (!result.psi_hi) throw Error(ErrorCode::missing_metrics, "Case 2 result lacks the criterion at eta_hi");
    value = D0 / (2.0 * K) / *result.psi_hi;
  }
  s.values[n - 1] = value;
  // GD stays put after an early stop, so missing iterates equal the last one.
  Vector sum = Vector::Zero(t.records[0].x.size());
  for (int i = 0; i < result.K; ++i) sum += t.records[std::min<std::size_t>(static_cast<std::size_t>(i), n - 1)].x;
  Vector xbar = sum / K;
  RealizedSeries real{"average", std::vector<double>(n, kNaN)};
  real.values[n - 1] = obj.value(xbar) - ref.f_star;
  s.averaged_iterates.push_back(std::move(xbar));
  s.realized.push_back(std::move(real));
  return s;
}

std::string bound_csv(const BoundSeries& series) {
  std::vector<char> clamped(series.values.size(), 0);
  for (int i : series.clamped_indices)
    if (i >= 0 && static_cast<std::size_t>(i) < clamped.size()) clamped[static_cast<std::size_t>(i)] = 1;
  std::string out = "k,bound_value,clamped\n";
  char buf[64];
  for (std::size_t k = 0; k < series.values.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%d\n", k, series.values[k], clamped[k]);
    out += buf;
  }
  return out;
}

void write_bound_csv(const BoundSeries& series, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
  os << bound_csv(series);
  if (!os) throw Error(ErrorCode::io_error, "write failed for '" + path.string() + "'");
}

}  // namespace dirsmooth
