#pragma once

#include "dirsmooth/optimizers.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dirsmooth {

enum class BoundTarget { gap, squared_distance };

/// The quantity a bound controls, evaluated at the iterate the bound is stated for.
/// NaN where the iterate is undefined.
struct RealizedSeries {
  std::string at;  ///< "last", "best", "weighted_average", ...
  std::vector<double> values;
};

/// Upper bounds aligned 1:1 with a trace; +inf where a bound is undefined.
struct BoundSeries {
  std::string name;
  BoundTarget target = BoundTarget::gap;
  std::string inputs_tag;
  std::vector<double> values;
  std::vector<int> clamped_indices;
  std::vector<RealizedSeries> realized;
  /// Weighted-average iterates the bound is stated at (empty if none).
  std::vector<Vector> averaged_iterates;
  /// Magnitude used to scale the dominance tolerance (|f*| for gaps, Delta_0 for distances).
  double scale = 0.0;
};

struct DominanceReport {
  bool ok = true;
  double max_violation = 0.0;  ///< max over k of (realized - bound) / (1 + max(scale, |bound|))
  int index = -1;              ///< where the maximum occurs
  std::string realized_at;
  int checked = 0;             ///< number of finite (bound, realized) pairs
};

DominanceReport check_dominance(const BoundSeries& series, double rel_tol = 1e-9);

/// Range of the good-step product attached to a bad step i in the split bound.
enum class SplitProductRange {
  before_k,   ///< j in (i, k-1], which is what the descent recursion produces
  through_k,  ///< j in (i, k]
};

BoundSeries bound_sc_split(const Objective& obj, const Trace& trace, const ReferenceSolution& ref, SmoothnessKind M,
                           SplitProductRange range = SplitProductRange::before_k);

BoundSeries bound_sc_iterates(const Objective& obj, const Trace& trace, const ReferenceSolution& ref,
                              SmoothnessKind M);

BoundSeries bound_convex_avg(const Objective& obj, const Trace& trace, const ReferenceSolution& ref,
                             SmoothnessKind M);

/// Uses the trace's mu, alpha0 and gamma0. Requires H pair metrics to verify eta_k <= 1/H(y_k, x_{k+1}).
BoundSeries bound_agd(const Objective& obj, const Trace& trace, const ReferenceSolution& ref);

BoundSeries bound_polyak(const Objective& obj, const Trace& trace, const ReferenceSolution& ref, SmoothnessKind M,
                         double gamma);

BoundSeries bound_polyak_alternate(const Objective& obj, const Trace& trace, const ReferenceSolution& ref,
                                   double gamma);

enum class NgdOffset {
  verbatim,  ///< f(x_0) and f* as they are
  path_max,  ///< both shifted by max over 1 <= i <= k-1 of f(x_i)
};

BoundSeries bound_ngd(const Objective& obj, const Trace& trace, const ReferenceSolution& ref, SmoothnessKind M,
                      NgdOffset offset = NgdOffset::verbatim);

enum class ClassicFlavor { gd, polyak };

/// 2 L Delta_0 / k, compared with the last iterate (gd) or the best iterate (polyak).
BoundSeries bound_classic_L(const Objective& obj, const Trace& trace, const ReferenceSolution& ref, double L,
                            ClassicFlavor flavor = ClassicFlavor::gd);

/// Case 1 and Case 2 guarantees at the plain average of x_0..x_{K-1}; finite only at index K.
BoundSeries bound_exponential_search(const Objective& obj, const ExpSearchResult& result,
                                     const ReferenceSolution& ref);

std::string bound_csv(const BoundSeries& series);
void write_bound_csv(const BoundSeries& series, const std::filesystem::path& path);

}  // namespace dirsmooth
