#include "dirsmooth/smoothness.hpp"

#include <cmath>
#include <functional>

namespace dirsmooth {

namespace {

void check_pair(const Objective& obj, const Vector& x, const Vector& y) {
  if (static_cast<std::size_t>(x.size()) != obj.dim() || static_cast<std::size_t>(y.size()) != obj.dim())
    throw Error(ErrorCode::dimension_mismatch, "point pair does not match objective dimension");
  require_distinct(x, y);
}

struct ChordExtremum {
  double value;
  int eval_points;
};

// Grid search over log-spaced t followed by golden-section refinement of the
// best cell. `sign` = +1 for the supremum, -1 for the infimum.
ChordExtremum chord_extremum(const Objective& obj, const Vector& x, const Vector& y, const SupConfig& cfg,
                             double sign) {
  if (cfg.grid_points < 2 || !(cfg.t_min > 0 && cfg.t_min < 1) || !(cfg.refine_tol > 0))
    throw Error(ErrorCode::invalid_argument, "invalid sup/inf grid configuration");
  const Vector d = y - x;
  const double dd = d.squaredNorm();
  const Vector gx = obj.gradient(x);
  auto q = [&](double t) { return sign * (obj.gradient(x + t * d) - gx).dot(d) / (t * dd); };

  const int T = cfg.grid_points;
  const double log_lo = std::log(cfg.t_min);
  std::vector<double> ts(T), qs(T);
  int best = 0;
  for (int i = 0; i < T; ++i) {
    ts[i] = i == T - 1 ? 1.0 : std::exp(log_lo * (1.0 - static_cast<double>(i) / (T - 1)));
    qs[i] = q(ts[i]);
    if (qs[i] > qs[best]) best = i;
  }
  double a = ts[std::max(best - 1, 0)];
  double b = ts[std::min(best + 1, T - 1)];
  double value = qs[best];

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double e = a + invphi * (b - a);
  double qc = q(c), qe = q(e);
  int evals = T + 2;
  while (b - a > cfg.refine_tol && evals < T + 400) {
    if (qc > qe) {
      b = e;
      e = c;
      qe = qc;
      c = b - invphi * (b - a);
      qc = q(c);
    } else {
      a = c;
      c = e;
      qc = qe;
      e = a + invphi * (b - a);
      qe = q(e);
    }
    ++evals;
  }
  value = std::max({value, qc, qe});
  return {sign * value, evals};
}

}  // namespace

bool coincident(const Vector& x, const Vector& y) { return !((y - x).norm() > 1e-14 * (1.0 + x.norm())); }

void require_distinct(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "point pair has mismatched dimensions");
  if (coincident(x, y))
    throw Error(ErrorCode::coincident_points, "x and y coincide; directional smoothness is undefined");
}

SmoothnessEstimate point_wise_D(const Objective& obj, const Vector& x, const Vector& y) {
  check_pair(obj, x, y);
  const double v = 2.0 * (obj.gradient(y) - obj.gradient(x)).norm() / (y - x).norm();
  return {v, SmoothnessKind::point_wise_D, 1, false};
}

SmoothnessEstimate path_wise_A(const Objective& obj, const Vector& x, const Vector& y, const SupConfig& cfg) {
  check_pair(obj, x, y);
  if (auto closed = obj.constant_chord_quotient(y - x)) return {*closed, SmoothnessKind::path_wise_A, 1, false};
  const auto ext = chord_extremum(obj, x, y, cfg, 1.0);
  const double v = obj.convex() ? std::max(ext.value, 0.0) : ext.value;
  return {v, SmoothnessKind::path_wise_A, ext.eval_points, true};
}

SmoothnessEstimate optimal_H(const Objective& obj, const Vector& x, const Vector& y) {
  check_pair(obj, x, y);
  const Vector d = y - x;
  const double gap = obj.value(y) - obj.value(x) - obj.gradient(x).dot(d);
  return {std::abs(gap) / (0.5 * d.squaredNorm()), SmoothnessKind::optimal_H, 1, false};
}

DirectionalMu directional_mu(const Objective& obj, const Vector& x, const Vector& y, const SupConfig& cfg) {
  check_pair(obj, x, y);
  if (!obj.convex()) throw Error(ErrorCode::invalid_argument, "directional strong convexity needs a convex objective");
  if (auto closed = obj.constant_chord_quotient(y - x)) return {*closed, 1};
  const auto ext = chord_extremum(obj, x, y, cfg, -1.0);
  return {std::max(ext.value, 0.0), ext.eval_points};
}

SmoothnessEstimate evaluate_smoothness(const Objective& obj, SmoothnessKind kind, const Vector& x, const Vector& y,
                                       const SupConfig& cfg) {
  switch (kind) {
    case SmoothnessKind::point_wise_D: return point_wise_D(obj, x, y);
    case SmoothnessKind::path_wise_A: return path_wise_A(obj, x, y, cfg);
    case SmoothnessKind::optimal_H: return optimal_H(obj, x, y);
    case SmoothnessKind::global_L: return {smoothness_constant(obj), SmoothnessKind::global_L, 1, false};
  }
  throw Error(ErrorCode::invalid_argument, "unknown smoothness kind");
}

}  // namespace dirsmooth
