// Acceptance run: one PASS/FAIL line per criterion, followed by detail lines.

#include "dirsmooth/bounds.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

using namespace dirsmooth;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void fail(const std::string& why) {
    pass = false;
    details.push_back("FAIL: " + why);
  }
  void note(const std::string& what) { details.push_back(what); }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

std::string fmt(const char* f, double a) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

RunOptions full_opts(const ReferenceSolution& ref) {
  RunOptions o;
  o.pair_metrics = true;
  o.reference = &ref;
  return o;
}

// 1 ---------------------------------------------------------------------------
Outcome closed_forms() {
  Outcome out;
  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<int> dim(2, 50);
  double worst_d = 0.0, worst_a = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dim(rng);
    Vector eig(d);
    for (int i = 0; i < d; ++i) eig[i] = std::exp(std::uniform_real_distribution<double>(-4, 5)(rng));
    const Matrix B = oracle::rotated_spectrum(eig, rng);
    const QuadraticObjective q(B, oracle::gaussian(d, rng));
    const Vector x = oracle::gaussian(d, rng, 3.0);
    worst_d = std::max(worst_d, oracle::rel_err(solve_strongly_adapted(q, x, SmoothnessKind::point_wise_D), dai_step(q, x)));
    worst_a = std::max(worst_a, oracle::rel_err(solve_strongly_adapted(q, x, SmoothnessKind::path_wise_A), cauchy_step(q, x)));
  }
  out.note(fmt("max rel err adapted(D) vs Dai %.2e, adapted(A) vs Cauchy %.2e", worst_d, worst_a));
  out.expect(worst_d <= 1e-9, "adapted(D) differs from the Dai step");
  out.expect(worst_a <= 1e-9, "adapted(A) differs from the Cauchy step");
  return out;
}

// 2 ---------------------------------------------------------------------------
Outcome upper_bound_suite() {
  Outcome out;
  std::vector<std::unique_ptr<Objective>> objs;
  objs.push_back(std::make_unique<QuadraticObjective>(make_power_law_quadratic(50, 3.0, 1000.0, 1)));
  objs.push_back(std::make_unique<QuadraticObjective>(make_power_law_quadratic(20, 1.0, 10.0, 2)));
  objs.push_back(std::make_unique<LogisticObjective>(make_synthetic_logistic(200, 10, 3)));
  objs.push_back(std::make_unique<LogisticObjective>(make_synthetic_logistic(100, 5, 4)));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.01, 2.0);
  std::uniform_real_distribution<double> logr(-6, 0);
  long pairs = 0, ub_fail = 0, order_fail = 0, ha_fail = 0, ad_fail = 0, dl_fail = 0;
  double worst_ub = -oracle::kInf;
  const int per = 2500;
  for (const auto& obj : objs) {
    const double L = smoothness_constant(*obj);
    const auto d = static_cast<Eigen::Index>(obj->dim());
    for (int i = 0; i < per; ++i) {
      const Vector x = oracle::gaussian(d, rng, 2.0);
      const Vector g = obj->gradient(x);
      // Half the pairs are gradient steps of varying length, half are short random chords.
      const Vector y = (i % 2 == 0) ? Vector(x - scale(rng) / L * g)
                                    : Vector(x + std::pow(10.0, logr(rng)) * oracle::gaussian(d, rng));
      const double fx = obj->value(x), fy = obj->value(y);
      const Vector dd = y - x;
      const double lin = fx + g.dot(dd);
      const double tol = 1e-9 * (1.0 + std::abs(fx));
      const double D = point_wise_D(*obj, x, y).value;
      const double A = path_wise_A(*obj, x, y).value;
      const double H = optimal_H(*obj, x, y).value;
      for (double M : {D, A, H}) {
        const double gap = fy - (lin + 0.5 * M * dd.squaredNorm());
        worst_ub = std::max(worst_ub, gap / (1.0 + std::abs(fx)));
        if (gap > tol) ++ub_fail;
      }
      const double rt = 1e-9;
      // H is a value quotient; its tolerance is the value tolerance over half the squared chord.
      const bool ha = H <= A * (1 + rt) + 2.0 * tol / dd.squaredNorm();
      const bool ad = A <= D * (1 + rt) + 1e-12;
      const bool dl = D <= 2 * L * (1 + rt);
      ha_fail += !ha;
      ad_fail += !ad;
      dl_fail += !dl;
      if (!(ha && ad && dl)) ++order_fail;
      ++pairs;
    }
  }
  out.note("pairs " + std::to_string(pairs) + ", upper-bound failures " + std::to_string(ub_fail) +
           ", ordering failures " + std::to_string(order_fail) + " (H<=A " + std::to_string(ha_fail) +
           ", A<=D " + std::to_string(ad_fail) + ", D<=2L " + std::to_string(dl_fail) + ")");
  out.note(fmt("max scaled upper-bound excess %.2e", worst_ub));
  out.expect(pairs >= 10000, "fewer than 10^4 pairs");
  out.expect(ub_fail == 0, "quadratic upper bound violated");
  out.expect(order_fail == 0, "ordering H <= A <= D <= 2L violated");
  return out;
}

// 3 ---------------------------------------------------------------------------
Outcome descent_identity() {
  Outcome out;
  const auto q = make_power_law_quadratic(50, 3.0, 1000.0, 6);
  const auto f = make_synthetic_logistic(200, 10, 7);
  const std::vector<std::pair<const Objective*, StepSizeRule>> runs{
      {&q, StronglyAdapted{}},
      {&q, StronglyAdapted{SmoothnessKind::path_wise_A, {}}},
      {&q, Dai{}},
      {&q, InverseL{}},
      {&f, StronglyAdapted{}},
      {&f, StronglyAdapted{SmoothnessKind::path_wise_A, {}}},
      {&f, InverseL{}},
  };
  long steps = 0;
  double worst = 0.0;
  for (const auto& [obj, rule] : runs) {
    RunOptions o;
    o.pair_metrics = true;
    const Trace t = gd_run(*obj, Vector::Zero(static_cast<Eigen::Index>(obj->dim())), rule, 300, o);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
      const auto& r = t[k];
      if (!(r.eta * *r.H < 2.0)) continue;
      const double predicted = r.f - r.eta * (1.0 - 0.5 * r.eta * *r.H) * r.grad_norm * r.grad_norm;
      worst = std::max(worst, std::abs(t[k + 1].f - predicted) / (1.0 + std::abs(r.f)));
      ++steps;
    }
  }
  out.note("steps checked " + std::to_string(steps) + fmt(", max scaled deviation %.2e", worst));
  out.expect(steps > 0, "no adapted steps");
  out.expect(worst <= 1e-9, "per-step progress deviates from the one-step identity");
  return out;
}

// 4 ---------------------------------------------------------------------------
struct Desk {
  std::string name;
  std::unique_ptr<Objective> obj;
  ReferenceSolution ref;
};

std::vector<Desk> desk_problems() {
  std::vector<Desk> out;
  auto add = [&](std::string name, std::unique_ptr<Objective> o, double tol) {
    Desk d{std::move(name), std::move(o), {}};
    d.ref = compute_reference_solution(*d.obj, tol, 400000);
    out.push_back(std::move(d));
  };
  add("power_law(d=50,L=1000)", std::make_unique<QuadraticObjective>(make_power_law_quadratic(50, 3.0, 1000.0, 8)), 1e-12);
  add("logistic(n=200,d=10,s=9)", std::make_unique<LogisticObjective>(make_synthetic_logistic(200, 10, 9)), 1e-10);
  add("logistic(n=100,d=5,s=10)", std::make_unique<LogisticObjective>(make_synthetic_logistic(100, 5, 10)), 1e-10);
  return out;
}

Outcome bound_dominance() {
  Outcome out;
  const auto desks = desk_problems();
  const int iters = 300;
  auto record = [&](const std::string& what, const Desk& p, const BoundSeries& s) {
    const auto rep = check_dominance(s, 1e-9);
    out.note(what + " on " + p.name + fmt(": max violation %.2e over %g indices", rep.max_violation, rep.checked));
    if (!rep.ok || rep.checked == 0) out.fail(what + " on " + p.name + " at k=" + std::to_string(rep.index));
  };
  for (const auto& p : desks) {
    const Objective& obj = *p.obj;
    const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(obj.dim()));
    const RunOptions o = full_opts(p.ref);
    const double L = smoothness_constant(obj);

    const Trace adapted = gd_run(obj, x0, StronglyAdapted{}, iters, o);
    const Trace big = gd_run(obj, x0, Constant{1.9 / L}, iters, o);
    for (const Trace* t : {&adapted, &big}) {
      const std::string tag = " [" + t->rule_tag + "]";
      record("split bound (M=D)" + tag, p, bound_sc_split(obj, *t, p.ref, SmoothnessKind::point_wise_D));
      record("split bound (M=H)" + tag, p, bound_sc_split(obj, *t, p.ref, SmoothnessKind::optimal_H));
      record("iterate bound (M=H)" + tag, p, bound_sc_iterates(obj, *t, p.ref, SmoothnessKind::optimal_H));
      record("averaged bound (M=D)" + tag, p, bound_convex_avg(obj, *t, p.ref, SmoothnessKind::point_wise_D));
      record("averaged bound (M=H)" + tag, p, bound_convex_avg(obj, *t, p.ref, SmoothnessKind::optimal_H));
    }

    const double mu = obj.kind() == ObjectiveKind::quadratic ? static_cast<const QuadraticObjective&>(obj).lambda_min() : 0.0;
    const Trace agd = agd_estimating_run(obj, x0, StepSource::adapted(SmoothnessKind::path_wise_A), mu,
                                         mu > 0 ? mu : 1.0, iters, o);
    record("accelerated bound", p, bound_agd(obj, agd, p.ref));

    for (double gamma : {1.1, 1.5, 1.9}) {
      const Trace pol = gd_run(obj, x0, Polyak{gamma, p.ref.f_star}, iters, o);
      record("Polyak bound (M=H, gamma=" + fmt("%g", gamma) + ")", p,
             bound_polyak(obj, pol, p.ref, SmoothnessKind::optimal_H, gamma));
      record("Polyak bound (M=D, gamma=" + fmt("%g", gamma) + ")", p,
             bound_polyak(obj, pol, p.ref, SmoothnessKind::point_wise_D, gamma));
      record("alternate Polyak bound (gamma=" + fmt("%g", gamma) + ")", p,
             bound_polyak_alternate(obj, pol, p.ref, gamma));
    }

    const Trace ngd = normalized_gd_run(obj, x0, Schedule::anytime, 1.0, iters, o);
    record("normalized-GD bound (path offset)", p, bound_ngd(obj, ngd, p.ref, SmoothnessKind::point_wise_D, NgdOffset::path_max));
    const auto verbatim = check_dominance(bound_ngd(obj, ngd, p.ref, SmoothnessKind::point_wise_D));
    out.note("normalized-GD bound without offset on " + p.name +
             fmt(": max violation %.2e (f* = %.3g)", verbatim.max_violation, p.ref.f_star));
  }
  return out;
}

// 5 ---------------------------------------------------------------------------
Outcome agd_equivalence() {
  Outcome out;
  double worst = 0.0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(100 + static_cast<std::uint64_t>(seed));
    const int d = 20;
    const Matrix B = oracle::rotated_spectrum(Vector::LinSpaced(d, 1.0, 100.0), rng);
    const QuadraticObjective q(B, oracle::gaussian(d, rng));
    const Vector x0 = oracle::gaussian(d, rng);
    const double eta = 1.0 / 100.0;
    for (double mu : {1.0, 0.0}) {
      const double gamma0 = mu > 0 ? mu : 10.0;
      const double alpha0 = agd_alpha0_from_gamma0(eta, mu, gamma0);
      const Trace m = agd_momentum_run(q, x0, StepSource::constant(eta), mu, alpha0, 200);
      const Trace e = agd_estimating_run(q, x0, StepSource::constant(eta), mu, gamma0, 200);
      if (m.size() != e.size()) {
        out.fail("trace lengths differ");
        continue;
      }
      for (std::size_t k = 0; k < m.size(); ++k)
        worst = std::max(worst, (m[k].x - e[k].x).norm() / (1.0 + e[k].x.norm()));
    }
  }
  out.note(fmt("max scaled iterate difference %.2e over 10 quadratics x 2 branches x 200 iterations", worst));
  out.expect(worst <= 1e-10, "momentum and estimating-sequence iterates differ");
  return out;
}

// 6 ---------------------------------------------------------------------------
Outcome agd_rate() {
  Outcome out;
  std::mt19937_64 rng(606);
  const int d = 20;
  const Matrix B = oracle::rotated_spectrum(Vector::LinSpaced(d, 1.0, 100.0), rng);
  const QuadraticObjective q(B, oracle::gaussian(d, rng, 10.0));
  const auto ref = compute_reference_solution(q, 1e-14, 1);
  const double L = 100.0, mu = 1.0, eta = 1.0 / L;
  const Vector x0 = Vector::Zero(d);
  const Trace agd = agd_momentum_run(q, x0, StepSource::constant(eta), mu, std::sqrt(mu * eta), 500);
  const double delta0 = agd[0].f - ref.f_star;
  const double D0 = (x0 - ref.x_star).squaredNorm();
  double worst = -oracle::kInf;
  for (std::size_t k = 0; k < agd.size(); ++k) {
    const double bound = std::pow(1.0 - std::sqrt(mu / L), static_cast<double>(k)) * (delta0 + 0.5 * mu * D0);
    const double gap = agd[k].f - ref.f_star;
    worst = std::max(worst, (gap - bound) / (1.0 + std::abs(ref.f_star)));
  }
  const Trace gd = gd_run(q, x0, InverseL{}, 200);
  const double gap_agd = agd[200].f - ref.f_star;
  const double gap_gd = gd[200].f - ref.f_star;
  out.note(fmt("max scaled (gap - bound) over k <= 500: %.2e", worst));
  out.note(fmt("gap at k=200: AGD %.3e, GD %.3e", gap_agd, gap_gd));
  out.expect(agd.size() == 501, "AGD stopped early");
  out.expect(worst <= 1e-9, "accelerated rate bound violated");
  out.expect(gap_agd * 10.0 <= gap_gd, "AGD gap at k=200 is not 10x below GD");
  return out;
}

// 7 ---------------------------------------------------------------------------
Outcome exponential_search() {
  Outcome out;
  const int K = 200;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const auto q = make_power_law_quadratic(50, 3.0, 1000.0, seed);
    const auto ref = compute_reference_solution(q, 1e-12, 1);
    const double L = q.lambda_max();
    const Vector x0 = Vector::Zero(50);
    const Matrix B = q.dense();
    for (double s : {0.1, 0.5, 1.0, 2.0, 4.0, 10.0}) {
      const auto r = exponential_search_gd(q, x0, s / L, K);
      const double phi0 = s / L - oracle::quad_psi(B, q.linear_term(), x0, s / L, K);
      if ((r.case_id == 1) != (phi0 <= 0))
        out.fail("case selection disagrees with phi(eta0) at eta0 L = " + fmt("%g", s));
    }
    const auto r = exponential_search_gd(q, x0, 100.0 / L, K);
    const long budget = oracle::expsearch_budget(100.0 / L, L, K);
    double phi_eta = oracle::kInf;
    for (const auto& p : r.probes)
      if (p.eta == r.eta) phi_eta = p.phi;
    const double phi_oracle = r.eta - oracle::quad_psi(B, q.linear_term(), x0, r.eta, K);
    const auto rep = check_dominance(bound_exponential_search(q, r, ref), 1e-9);
    out.note("seed " + std::to_string(seed) + ": case " + std::to_string(r.case_id) + ", inner steps " +
             std::to_string(r.inner_gd_steps) + " / budget " + std::to_string(budget) +
             fmt(", eta L = %.4g, phi(eta) = %.3e", r.eta * L, phi_oracle) +
             fmt(", bound violation %.2e", rep.max_violation));
    out.expect(r.case_id == 2, "eta0 = 100/L did not reach case 2");
    out.expect(r.inner_gd_steps <= budget, "inner GD steps exceed the budget");
    out.expect(phi_eta <= 0 && phi_oracle <= 0, "returned eta has phi > 0");
    out.expect(rep.ok, "case 2 gap bound violated");
  }
  return out;
}

// 8 ---------------------------------------------------------------------------
Outcome edge_of_stability() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto q = make_power_law_quadratic(50, 3.0, 1000.0, seed);
    const double L = q.lambda_max();
    RunOptions o;
    o.thin = true;
    const Trace t = gd_run(q, Vector::Zero(50), Dai{}, 5000, o);
    const double etaL = t[t.size() - 2].eta * L;
    double lo = oracle::kInf, hi = 0.0;
    for (std::size_t k = t.size() - 101; k + 1 < t.size(); ++k) {
      lo = std::min(lo, t[k].eta * L);
      hi = std::max(hi, t[k].eta * L);
    }
    out.note("seed " + std::to_string(seed) + fmt(": eta L at k=4999 %.4f", etaL) +
             fmt(", range over the last 100 steps [%.4f, %.4f]", lo, hi) + ", termination " +
             std::string(to_string(t.terminated)));
    out.expect(t.size() == 5001, "run stopped before 5000 iterations");
    out.expect(etaL >= 1.6 && etaL <= 2.0, "Dai step outside [1.6/L, 2.0/L] for seed " + std::to_string(seed));
  }
  return out;
}

// 9 ---------------------------------------------------------------------------
Outcome directional_vs_classic() {
  Outcome out;
  const auto f = make_synthetic_logistic(200, 10, 2024);
  const auto ref = compute_reference_solution(f, 1e-10, 400000);
  const double L = smoothness_constant(f);
  const Vector x0 = Vector::Zero(10);
  const int iters = 2000;
  const RunOptions o = full_opts(ref);
  const Trace pol = gd_run(f, x0, Polyak{1.5, ref.f_star}, iters, o);
  const auto bp = bound_polyak(f, pol, ref, SmoothnessKind::optimal_H, 1.5);
  const auto bc = bound_classic_L(f, pol, ref, L, ClassicFlavor::polyak);
  const double vp = bp.values.back(), vc = bc.values.back();
  out.note(fmt("final Polyak bound %.4e vs 2 L Delta0 / k %.4e", vp, vc));
  out.expect(vp < vc, "directional bound is not below the classical bound");

  auto first_hit = [&](const StepSizeRule& rule) {
    RunOptions thin;
    thin.thin = true;
    const Trace t = gd_run(f, x0, rule, 20000, thin);
    for (std::size_t k = 0; k < t.size(); ++k)
      if (t[k].f - ref.f_star <= 1e-6) return static_cast<long>(k);
    return -1L;
  };
  const long k_pol = first_hit(Polyak{1.5, ref.f_star});
  const long k_ad = first_hit(StronglyAdapted{});
  const long k_inv = first_hit(InverseL{});
  out.note("iterations to gap 1e-6: Polyak " + std::to_string(k_pol) + ", adapted(D) " + std::to_string(k_ad) +
           ", 1/L " + std::to_string(k_inv));
  auto faster = [&](long a) { return a >= 0 && (k_inv < 0 || a < k_inv); };
  out.expect(faster(k_pol), "Polyak is not faster than 1/L");
  out.expect(faster(k_ad), "adapted(D) is not faster than 1/L");
  return out;
}

// 10 --------------------------------------------------------------------------
class SmoothAbs final : public Objective {
 public:
  explicit SmoothAbs(double eps) : eps_(eps) {}
  std::size_t dim() const override { return 1; }
  ObjectiveKind kind() const override { return ObjectiveKind::custom; }
  std::string tag() const override { return "smooth_abs"; }
  bool convex() const override { return true; }

 protected:
  double do_value(const Vector& x) const override { return std::sqrt(x[0] * x[0] + eps_ * eps_); }
  Vector do_gradient(const Vector& x) const override {
    return Vector::Constant(1, x[0] / std::sqrt(x[0] * x[0] + eps_ * eps_));
  }

 private:
  double eps_;
};

Outcome tightness() {
  Outcome out;
  const double eps = 1e-3;
  const SmoothAbs f(eps);
  const Vector zero = Vector::Zero(1), one = Vector::Ones(1);
  const double H = optimal_H(f, zero, one).value;
  const double lip = std::abs(f.gradient(one)[0] - f.gradient(zero)[0]);
  out.note(fmt("H = %.6f (threshold %.6f)", H, 2.0 - 4.0 * eps) + fmt(", |f'(1) - f'(0)| = %.6f", lip));
  out.expect(H >= 2.0 - 4.0 * eps, "H below 2 - 4 eps");
  out.expect(lip <= 1.0, "gradient difference above 1");
  return out;
}

// 11 --------------------------------------------------------------------------
Outcome finite_differences() {
  Outcome out;
  const auto dir = std::filesystem::temp_directory_path() / ("dirsmooth_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "data.csv");
    csv << "a,b,c,label\n";
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 60; ++i) {
      const double a = n01(rng), b = n01(rng), c = n01(rng);
      csv << a << "," << b << "," << c << "," << ((a - b + 0.5 * n01(rng)) > 0 ? 1 : 0) << "\n";
    }
  }
  std::mt19937_64 rng(78);
  std::vector<std::pair<std::string, std::unique_ptr<Objective>>> objs;
  objs.emplace_back("dense quadratic",
                    std::make_unique<QuadraticObjective>(oracle::rotated_spectrum(Vector::LinSpaced(8, 0.5, 20.0), rng),
                                                         oracle::gaussian(8, rng)));
  objs.emplace_back("diagonal quadratic", std::make_unique<QuadraticObjective>(QuadraticObjective::diagonal(
                                              Vector::LinSpaced(6, 1.0, 6.0), oracle::gaussian(6, rng))));
  objs.emplace_back("power-law quadratic",
                    std::make_unique<QuadraticObjective>(make_power_law_quadratic(30, 3.0, 1000.0, 79)));
  objs.emplace_back("synthetic logistic", std::make_unique<LogisticObjective>(make_synthetic_logistic(200, 10, 80)));
  IngestOptions ing;
  ing.add_bias = true;
  ing.standardize = true;
  objs.emplace_back("dataset logistic", std::make_unique<LogisticObjective>(load_dataset_csv(dir / "data.csv", ing)));
  std::filesystem::remove_all(dir);

  for (const auto& [name, obj] : objs) {
    const auto d = static_cast<Eigen::Index>(obj->dim());
    double worst_g = 0.0, worst_h = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = oracle::gaussian(d, rng, 0.5);
      const Vector v = oracle::gaussian(d, rng);
      const Vector fd = oracle::fd_gradient([&](const Vector& z) { return obj->value(z); }, x);
      const Vector g = obj->gradient(x);
      worst_g = std::max(worst_g, (g - fd).norm() / std::max(1e-12, fd.norm()));
      if (obj->has_hvp()) {
        const Vector fh = oracle::fd_hvp([&](const Vector& z) { return obj->gradient(z); }, x, v);
        worst_h = std::max(worst_h, (obj->hessian_vector_product(x, v) - fh).norm() / std::max(1e-12, fh.norm()));
      }
    }
    out.note(name + fmt(": gradient rel err %.2e, HVP rel err %.2e", worst_g, worst_h));
    out.expect(worst_g <= 1e-6, name + " gradient disagrees with finite differences");
    out.expect(worst_h <= 1e-6, name + " HVP disagrees with finite differences");
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria{
      {"closed-form equivalence of adapted steps", closed_forms, 10},
      {"quadratic upper bound and ordering on sampled pairs", upper_bound_suite, 30},
      {"descent identity along trajectories", descent_identity, 0},
      {"bound dominance on desk problems", bound_dominance, 120},
      {"AGD momentum and estimating-sequence equivalence", agd_equivalence, 0},
      {"AGD accelerated rate", agd_rate, 0},
      {"exponential search", exponential_search, 0},
      {"Dai step at the edge of stability", edge_of_stability, 60},
      {"directional bounds beat classical", directional_vs_classic, 0},
      {"tightness counterexample", tightness, 0},
      {"gradient and HVP finite differences", finite_differences, 0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (criteria[i].budget_s > 0 && secs > criteria[i].budget_s)
      o.fail(fmt("runtime %.1f s exceeds %.0f s", secs, criteria[i].budget_s));
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, secs);
    for (const auto& d : o.details) std::printf("       %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
