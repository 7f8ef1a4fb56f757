#include "dirsmooth/stepsizes.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dirsmooth;
using testutil::code;
using testutil::error_code;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("Dai and Cauchy steps on diag(1, 4)") {
  const auto q = QuadraticObjective::diagonal(vec2(1, 4), vec2(0, 0));
  const Vector x = vec2(1, 1);
  const double dai = std::sqrt(17.0) / (2.0 * std::sqrt(257.0));
  CHECK(dai_step(q, x) == doctest::Approx(dai).epsilon(1e-14));
  CHECK(cauchy_step(q, x) == doctest::Approx(17.0 / 65.0).epsilon(1e-14));
  CHECK(solve_strongly_adapted(q, x, SmoothnessKind::point_wise_D) == doctest::Approx(dai).epsilon(1e-10));
  CHECK(solve_strongly_adapted(q, x, SmoothnessKind::path_wise_A) == doctest::Approx(17.0 / 65.0).epsilon(1e-10));
}

TEST_CASE("strongly adapted steps reproduce the closed forms on random quadratics") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(2, 30);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = dim(rng);
    Vector eig(d);
    for (int i = 0; i < d; ++i) eig[i] = std::exp(std::uniform_real_distribution<double>(-3, 4)(rng));
    const Matrix B = oracle::rotated_spectrum(eig, rng);
    const QuadraticObjective q(B, oracle::gaussian(d, rng));
    const Vector x = oracle::gaussian(d, rng);
    const Vector g = q.gradient(x);
    CHECK(oracle::rel_err(solve_strongly_adapted(q, x, SmoothnessKind::point_wise_D), oracle::dai(B, g)) < 1e-9);
    CHECK(oracle::rel_err(solve_strongly_adapted(q, x, SmoothnessKind::path_wise_A), oracle::cauchy(B, g)) < 1e-9);
  }
}

TEST_CASE("strongly adapted D on logistic solves eta * D(x, x - eta g) = 1") {
  const auto f = make_synthetic_logistic(100, 6, 3);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = oracle::gaussian(6, rng);
    const auto s = solve_strongly_adapted_detailed(f, x, SmoothnessKind::point_wise_D);
    const Vector g = oracle::logistic_grad(f.data(), f.labels(), x);
    const Vector y = x - s.eta * g;
    const double D = oracle::D_from(g, oracle::logistic_grad(f.data(), f.labels(), y), x, y);
    CHECK(std::abs(s.eta * D - 1.0) <= 1e-9);
    CHECK(std::abs(s.residual) <= 1e-9);
    CHECK(s.eta >= 1.0 / (2.0 * *f.smoothness_constant()) * (1.0 - 1e-12));
  }
}

TEST_CASE("strongly adapted A on logistic solves eta * A(x, x - eta g) = 1") {
  const auto f = make_synthetic_logistic(100, 6, 5);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = oracle::gaussian(6, rng);
    const auto s = solve_strongly_adapted_detailed(f, x, SmoothnessKind::path_wise_A);
    const Vector y = x - s.eta * f.gradient(x);
    CHECK(std::abs(s.eta * path_wise_A(f, x, y).value - 1.0) <= 1e-8);
    CHECK(s.eta >= 1.0 / *f.smoothness_constant() * (1.0 - 1e-9));
  }
}

TEST_CASE("strongly adapted solve without Hessian-vector products") {
  class Quartic final : public Objective {
   public:
    std::size_t dim() const override { return 2; }
    ObjectiveKind kind() const override { return ObjectiveKind::custom; }
    std::string tag() const override { return "quartic"; }
    bool convex() const override { return true; }

   protected:
    double do_value(const Vector& x) const override { return 0.25 * x.array().pow(4).sum() + 0.5 * x.squaredNorm(); }
    Vector do_gradient(const Vector& x) const override { return x.array().pow(3).matrix() + x; }
  } f;
  const Vector x = vec2(1.0, -0.5);
  const double eta = solve_strongly_adapted(f, x, SmoothnessKind::point_wise_D);
  const Vector y = x - eta * f.gradient(x);
  CHECK(std::abs(eta * oracle::D_from(f.gradient(x), f.gradient(y), x, y) - 1.0) <= 1e-9);
}

TEST_CASE("a linear direction is reported as ray minimization") {
  const auto flat = QuadraticObjective::diagonal(vec2(0, 0), vec2(1, 1));
  CHECK(error_code([&] { solve_strongly_adapted(flat, vec2(0, 0), SmoothnessKind::point_wise_D); }) ==
        code(ErrorCode::ray_minimization));
  CHECK(error_code([&] { dai_step(flat, vec2(0, 0)); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { cauchy_step(flat, vec2(0, 0)); }) == code(ErrorCode::invalid_argument));
}

TEST_CASE("strongly adapted solve rejects zero gradients and other kinds") {
  const auto q = QuadraticObjective::diagonal(vec2(1, 4), vec2(0, 0));
  CHECK(error_code([&] { solve_strongly_adapted(q, vec2(0, 0), SmoothnessKind::point_wise_D); }) ==
        code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { solve_strongly_adapted(q, vec2(1, 1), SmoothnessKind::optimal_H); }) ==
        code(ErrorCode::invalid_argument));
}

TEST_CASE("Polyak step") {
  const auto q = QuadraticObjective::diagonal(vec2(1, 4), vec2(0, 0));
  const Vector x = vec2(1, 1);
  CHECK(polyak_step(q, x, 1.5, 0.0) == doctest::Approx(1.5 * 2.5 / 17.0));
  CHECK(polyak_step(q, vec2(0, 0), 1.5, 0.0) == 0.0);
  CHECK(error_code([&] { polyak_step(q, x, 1.5, 3.0); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { polyak_step(q, x, 2.0, 0.0); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { polyak_step(q, vec2(0, 0), 1.0, -1.0); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { compute_step(Polyak{1.5, std::nullopt}, q, x, 0); }) == code(ErrorCode::invalid_argument));
}

TEST_CASE("normalized schedules") {
  CHECK(normalized_schedule_step(0, Schedule::anytime, 2.0) == doctest::Approx(2.0));
  CHECK(normalized_schedule_step(3, Schedule::anytime, 2.0) == doctest::Approx(1.0));
  CHECK(normalized_schedule_step(7, Schedule::fixed_horizon, 3.0, 9) == doctest::Approx(1.0));
  CHECK(error_code([] { normalized_schedule_step(0, Schedule::fixed_horizon, 1.0, 0); }) ==
        code(ErrorCode::invalid_argument));
  CHECK(error_code([] { normalized_schedule_step(-1, Schedule::anytime, 1.0); }) == code(ErrorCode::invalid_argument));
}

TEST_CASE("compute_step dispatch and applicability") {
  const auto q = QuadraticObjective::diagonal(vec2(1, 4), vec2(0, 0));
  const auto f = make_synthetic_logistic(20, 2, 1);
  const Vector x = vec2(1, 1);
  CHECK(compute_step(InverseL{}, q, x, 0) == doctest::Approx(0.25));
  CHECK(compute_step(Constant{0.1}, q, x, 5) == 0.1);
  CHECK(compute_step(Dai{}, q, x, 0) == doctest::Approx(dai_step(q, x)));
  CHECK(error_code([&] { compute_step(Cauchy{}, f, x, 0); }) == code(ErrorCode::unsupported));
  CHECK(error_code([&] { validate_rule(Dai{}, &f); }) == code(ErrorCode::unsupported));
  CHECK(error_code([&] { validate_rule(Constant{-1.0}); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { validate_rule(StronglyAdapted{SmoothnessKind::global_L, {}}); }) ==
        code(ErrorCode::invalid_argument));
}

TEST_CASE("rule JSON round trip and tags") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {R"({"rule": "constant", "eta": 0.5})", "constant(0.5)"},
      {R"({"rule": "inverse_L"})", "inverse_L"},
      {R"({"rule": "adapted", "kind": "A"})", "adapted(A)"},
      {R"({"rule": "polyak", "gamma": 1.5})", "polyak(1.5)"},
      {R"({"rule": "normalized", "schedule": "anytime", "eta0": 1})", "normalized(anytime,1)"},
      {R"({"rule": "normalized", "schedule": "fixed_horizon", "K": 9, "eta0": 3})", "normalized(fixed_horizon:9,3)"},
      {R"({"rule": "cauchy"})", "cauchy"},
      {R"({"rule": "dai"})", "dai"},
  };
  for (const auto& [text, tag] : cases) {
    const StepSizeRule r = rule_from_json(text);
    CHECK(rule_tag(r) == tag);
    CHECK(rule_tag(rule_from_json(rule_to_json(r))) == tag);
  }
  const auto p = std::get<Polyak>(rule_from_json(R"({"rule": "polyak", "gamma": 1.1, "f_star": 2})"));
  CHECK(*p.f_star == 2.0);
  const auto a = std::get<StronglyAdapted>(rule_from_json(R"({"rule": "adapted", "grid_points": 33})"));
  CHECK(a.kind == SmoothnessKind::point_wise_D);
  CHECK(a.solver.sup.grid_points == 33);
}

TEST_CASE("rule JSON rejects unknown names, keys and invalid values") {
  CHECK(error_code([] { rule_from_json(R"({"rule": "armijo"})"); }) == code(ErrorCode::parse_error));
  CHECK(error_code([] { rule_from_json(R"({"rule": "dai", "eta": 1})"); }) == code(ErrorCode::parse_error));
  CHECK(error_code([] { rule_from_json(R"({"rule": "constant"})"); }) == code(ErrorCode::parse_error));
  CHECK(error_code([] { rule_from_json(R"({"eta": 1})"); }) == code(ErrorCode::parse_error));
  CHECK(error_code([] { rule_from_json("not json"); }) == code(ErrorCode::parse_error));
  CHECK(error_code([] { rule_from_json(R"({"rule": "polyak", "gamma": 2.5})"); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([] { rule_from_json(R"({"rule": "adapted", "kind": "Q"})"); }) == code(ErrorCode::parse_error));
}
