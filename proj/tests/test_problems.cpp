#include "dirsmooth/problems.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace dirsmooth;
using testutil::code;
using testutil::error_code;

namespace {

/// One-dimensional smoothed absolute value, the kind of objective users plug in themselves.
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
    Vector g(1);
    g[0] = x[0] / std::sqrt(x[0] * x[0] + eps_ * eps_);
    return g;
  }

 private:
  double eps_;
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("quadratic value and gradient match the dense formulas") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix B = oracle::rotated_spectrum(Vector::LinSpaced(8, 0.5, 20.0), rng);
    const Vector c = oracle::gaussian(8, rng);
    const QuadraticObjective q(B, c);
    const Vector x = oracle::gaussian(8, rng);
    CHECK(q.value(x) == doctest::Approx(oracle::quad_value(B, c, x)).epsilon(1e-12));
    CHECK(oracle::rel_err(q.gradient(x), oracle::quad_grad(B, c, x)) < 1e-12);
    CHECK(q.lambda_max() == doctest::Approx(20.0).epsilon(1e-10));
    CHECK(q.lambda_min() == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(*q.smoothness_constant() == doctest::Approx(20.0).epsilon(1e-10));
  }
}

TEST_CASE("diagonal quadratic agrees with its dense form") {
  const auto q = QuadraticObjective::diagonal(vec({1.0, 4.0}), vec({0.0, 0.0}));
  CHECK(q.is_diagonal());
  const Vector x = vec({1.0, 1.0});
  CHECK(q.value(x) == doctest::Approx(2.5));
  CHECK(q.gradient(x)[1] == doctest::Approx(4.0));
  const QuadraticObjective dense(q.dense(), vec({0.0, 0.0}));
  CHECK(dense.value(x) == doctest::Approx(q.value(x)));
  CHECK(q.hessian_vector_product(x, vec({0.0, 1.0}))[1] == doctest::Approx(4.0));
}

TEST_CASE("quadratic construction rejects invalid matrices") {
  Matrix asym(2, 2);
  asym << 1, 2, 0, 1;
  CHECK(error_code([&] { QuadraticObjective(asym, Vector::Zero(2)); }) == code(ErrorCode::invalid_argument));
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  CHECK(error_code([&] { QuadraticObjective(indefinite, Vector::Zero(2)); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { QuadraticObjective(Matrix::Identity(2, 2), Vector::Zero(3)); }) ==
        code(ErrorCode::dimension_mismatch));
  const QuadraticObjective q(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(error_code([&] { q.value(Vector::Zero(3)); }) == code(ErrorCode::dimension_mismatch));
}

TEST_CASE("logistic single row at the origin") {
  Matrix A(1, 2);
  A << 1, 0;
  const LogisticObjective f(A, vec({1.0}));
  const Vector x = Vector::Zero(2);
  CHECK(f.value(x) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const Vector g = f.gradient(x);
  CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(0.0));
  const Vector hv = f.hessian_vector_product(x, vec({1.0, 0.0}));
  CHECK(hv[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(hv[1] == doctest::Approx(0.0));
}

TEST_CASE("logistic smoothness constant is lambda_max(A^T A) / 4") {
  Matrix A(1, 2);
  A << 2, 0;
  const LogisticObjective f(A, vec({1.0}));
  CHECK(*f.smoothness_constant() == doctest::Approx(1.0).epsilon(1e-9));

  std::mt19937_64 rng(3);
  Matrix M(30, 6);
  for (Eigen::Index i = 0; i < M.rows(); ++i) M.row(i) = oracle::gaussian(6, rng).transpose();
  Vector y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y[i] = i % 2 ? 1.0 : -1.0;
  const LogisticObjective g(M, y);
  const double lam = Eigen::SelfAdjointEigenSolver<Matrix>(M.transpose() * M).eigenvalues().maxCoeff();
  CHECK(*g.smoothness_constant() == doctest::Approx(lam / 4.0).epsilon(1e-9));
}

TEST_CASE("logistic rejects labels outside {-1, +1}") {
  Matrix A = Matrix::Identity(2, 2);
  CHECK(error_code([&] { LogisticObjective(A, vec({0.0, 1.0})); }) == code(ErrorCode::invalid_argument));
  CHECK(error_code([&] { LogisticObjective(A, vec({1.0})); }) == code(ErrorCode::dimension_mismatch));
}

TEST_CASE("logistic value is stable for large margins") {
  Matrix A(2, 1);
  A << 1, -1;
  const LogisticObjective f(A, vec({1.0, 1.0}));
  const double v = f.value(vec({800.0}));
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(800.0).epsilon(1e-12));
  CHECK(f.gradient(vec({800.0})).allFinite());
}

TEST_CASE("logistic value and gradient match a per-sample oracle") {
  const LogisticObjective f = make_synthetic_logistic(50, 5, 4);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const Vector x = oracle::gaussian(5, rng);
    CHECK(oracle::rel_err(f.value(x), oracle::logistic_value(f.data(), f.labels(), x)) < 1e-12);
    CHECK(oracle::rel_err(f.gradient(x), oracle::logistic_grad(f.data(), f.labels(), x)) < 1e-12);
  }
}

TEST_CASE("finite-difference gradients and Hessian-vector products") {
  std::mt19937_64 rng(8);
  const QuadraticObjective q = make_power_law_quadratic(20, 2.0, 50.0, 9);
  const LogisticObjective lg = make_synthetic_logistic(80, 6, 10);
  const SmoothAbs sa(0.3);
  const std::vector<const Objective*> objs{&q, &lg, &sa};
  for (const Objective* f : objs) {
    const auto d = static_cast<Eigen::Index>(f->dim());
    for (int t = 0; t < 10; ++t) {
      const Vector x = oracle::gaussian(d, rng);
      const Vector v = oracle::gaussian(d, rng);
      auto val = [&](const Vector& z) { return f->value(z); };
      auto grad = [&](const Vector& z) { return f->gradient(z); };
      const Vector g = f->gradient(x);
      CHECK(oracle::rel_err(g, oracle::fd_gradient(val, x)) < 1e-6);
      if (f->has_hvp()) CHECK(oracle::rel_err(f->hessian_vector_product(x, v), oracle::fd_hvp(grad, x, v)) < 1e-6);
    }
  }
}

TEST_CASE("custom objectives without HVP or L report unsupported") {
  const SmoothAbs sa(1e-3);
  CHECK_FALSE(sa.has_hvp());
  CHECK(error_code([&] { smoothness_constant(sa); }) == code(ErrorCode::unsupported));
  CHECK(error_code([&] { sa.hessian_vector_product(Vector::Zero(1), Vector::Ones(1)); }) ==
        code(ErrorCode::unsupported));
}

TEST_CASE("power-law spectrum, rotation and seeding") {
  const auto q = make_power_law_quadratic(30, 3.0, 1000.0, 21);
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(q.dense()).eigenvalues();
  for (int i = 1; i <= 30; ++i)
    CHECK(eig[30 - i] == doctest::Approx(1000.0 * std::pow(i, -3.0)).epsilon(1e-9));
  CHECK_FALSE(q.is_diagonal());
  const auto again = make_power_law_quadratic(30, 3.0, 1000.0, 21);
  CHECK((again.dense() - q.dense()).norm() == 0.0);
  CHECK((again.linear_term() - q.linear_term()).norm() == 0.0);
  const auto other = make_power_law_quadratic(30, 3.0, 1000.0, 22);
  CHECK((other.dense() - q.dense()).norm() > 1.0);

  const auto plain = make_power_law_quadratic(4, 1.0, 8.0, 0, PowerLawOptions{false, false});
  CHECK(plain.is_diagonal());
  CHECK(plain.linear_term().norm() == 0.0);
  CHECK(plain.dense()(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("synthetic logistic is reproducible and has a finite minimizer") {
  const auto a = make_synthetic_logistic(200, 10, 7);
  const auto b = make_synthetic_logistic(200, 10, 7);
  CHECK((a.data() - b.data()).norm() == 0.0);
  CHECK((a.labels() - b.labels()).norm() == 0.0);
  const auto ref = compute_reference_solution(a, 1e-8, 100000);
  CHECK(ref.grad_norm <= 1e-8);
  CHECK(ref.method_tag == "gd-adapted-D");
  CHECK(oracle::rel_err(a.gradient(ref.x_star), Vector::Zero(10)) < 1e-8);
}

TEST_CASE("reference solution for quadratics is a direct solve") {
  const auto q = make_power_law_quadratic(40, 2.0, 100.0, 3);
  const auto ref = compute_reference_solution(q, 1e-9, 10);
  CHECK(ref.method_tag == "direct-solve");
  CHECK(q.gradient(ref.x_star).norm() <= 1e-9);

  // c outside the range of a singular B.
  const auto singular = QuadraticObjective::diagonal(vec({1.0, 0.0}), vec({1.0, 1.0}));
  CHECK(error_code([&] { compute_reference_solution(singular, 1e-9, 10); }) == code(ErrorCode::no_minimizer));
}

TEST_CASE("separable data have no minimizer") {
  Matrix A(4, 2);
  A << 1, 2, 2, 1, -1, -2, -2, -1;
  const LogisticObjective f(A, vec({1, 1, -1, -1}));
  CHECK(error_code([&] { compute_reference_solution(f, 1e-10, 100000); }) == code(ErrorCode::no_minimizer));
}

TEST_CASE("reference solver reports the best iterate when it runs out of iterations") {
  const auto f = make_synthetic_logistic(100, 5, 2);
  try {
    compute_reference_solution(f, 1e-14, 2);
    FAIL("expected not_converged");
  } catch (const NotConvergedError& e) {
    CHECK(e.code() == ErrorCode::not_converged);
    CHECK(e.best().grad_norm > 0);
    CHECK(e.best().x_star.size() == 5);
  }
}

TEST_CASE("reference JSON round trip") {
  const auto q = make_power_law_quadratic(5, 1.0, 10.0, 1);
  const auto ref = compute_reference_solution(q, 1e-10, 1);
  const auto back = reference_from_json(reference_to_json(ref));
  CHECK((back.x_star - ref.x_star).norm() == 0.0);
  CHECK(back.f_star == ref.f_star);
  CHECK(back.method_tag == ref.method_tag);
  CHECK(error_code([] { reference_from_json("{\"f_star\": 1}"); }) == code(ErrorCode::parse_error));
}

TEST_CASE("dataset CSV ingest") {
  testutil::TempDir dir("problems_csv");
  const auto path = dir / "data.csv";
  testutil::write_text(path, "a,b,label\n1,2,1\n3,4,0\n\n5,6,1\n7,8,0\n");

  const Dataset raw = read_dataset_csv(path);
  CHECK(raw.features.rows() == 4);
  CHECK(raw.features.cols() == 2);
  CHECK(raw.labels[0] == 1.0);
  CHECK(raw.labels[1] == -1.0);
  CHECK(raw.train_rows.size() == 4);
  CHECK(raw.test_rows.empty());

  IngestOptions opts;
  opts.add_bias = true;
  opts.standardize = true;
  const Dataset std_ds = read_dataset_csv(path, opts);
  CHECK(std_ds.features.cols() == 3);
  CHECK(std_ds.features.col(2).minCoeff() == 1.0);
  CHECK(std_ds.features.col(0).mean() == doctest::Approx(0.0));
  CHECK(std_ds.features.col(0).squaredNorm() / 4.0 == doctest::Approx(1.0));

  opts.train_fraction = 0.5;
  opts.split_seed = 9;
  const Dataset split = read_dataset_csv(path, opts);
  CHECK(split.train_rows.size() == 2);
  CHECK(split.test_rows.size() == 2);
  const auto f = load_dataset_csv(path, opts);
  CHECK(f.rows() == 2);
  CHECK(f.dim() == 3);
}

TEST_CASE("dataset CSV errors name the file, line and column") {
  testutil::TempDir dir("problems_csv_err");
  const auto bad = dir / "bad.csv";
  testutil::write_text(bad, "1,2,1\n3,x,0\n");
  try {
    read_dataset_csv(bad);
    FAIL("expected parse_error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    const std::string msg = e.what();
    CHECK(msg.find("bad.csv:2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
  const auto ragged = dir / "ragged.csv";
  testutil::write_text(ragged, "1,2,1\n3,0\n");
  CHECK(error_code([&] { read_dataset_csv(ragged); }) == code(ErrorCode::parse_error));
  const auto labels = dir / "labels.csv";
  testutil::write_text(labels, "1,2,3\n");
  CHECK(error_code([&] { read_dataset_csv(labels); }) == code(ErrorCode::parse_error));
  CHECK(error_code([&] { read_dataset_csv(dir / "missing.csv"); }) == code(ErrorCode::io_error));
}
