#include "dirsmooth/problems.hpp"

#include "dirsmooth/stepsizes.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace dirsmooth {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::invalid_argument, std::string(what) + " has non-finite entries");
}

}  // namespace

// ---------------------------------------------------------------------------
// Objective

void Objective::check_dim(const Vector& x, const char* what) const {
  if (static_cast<std::size_t>(x.size()) != dim()) {
    std::ostringstream os;
    os << what << " has dimension " << x.size() << ", objective expects " << dim();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
}

double Objective::value(const Vector& x) const {
  check_dim(x, "point");
  return do_value(x);
}

Vector Objective::gradient(const Vector& x) const {
  check_dim(x, "point");
  return do_gradient(x);
}

Vector Objective::hessian_vector_product(const Vector& x, const Vector& v) const {
  check_dim(x, "point");
  check_dim(v, "direction");
  if (!has_hvp()) throw Error(ErrorCode::unsupported, "objective '" + tag() + "' has no Hessian-vector product");
  return do_hvp(x, v);
}

Vector Objective::do_hvp(const Vector&, const Vector&) const {
  throw Error(ErrorCode::unsupported, "objective '" + tag() + "' has no Hessian-vector product");
}

std::optional<double> Objective::constant_chord_quotient(const Vector&) const { return std::nullopt; }

// ---------------------------------------------------------------------------
// QuadraticObjective

QuadraticObjective::QuadraticObjective(Matrix B, Vector c) : B_(std::move(B)), c_(std::move(c)) {
  if (B_.rows() != B_.cols() || B_.rows() != c_.size())
    throw Error(ErrorCode::dimension_mismatch, "quadratic needs a square B matching the length of c");
  if (c_.size() == 0) throw Error(ErrorCode::invalid_argument, "quadratic needs dimension >= 1");
  require_finite(B_, "B");
  require_finite(c_, "c");
  const double scale = std::max(1.0, B_.cwiseAbs().maxCoeff());
  if ((B_ - B_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::invalid_argument, "B is not symmetric");
  validate_and_cache_spectrum();
}

QuadraticObjective::QuadraticObjective(Vector diag, Vector c, bool)
    : diag_(std::move(diag)), c_(std::move(c)), diagonal_(true) {
  if (diag_.size() != c_.size()) throw Error(ErrorCode::dimension_mismatch, "diagonal and c lengths differ");
  if (c_.size() == 0) throw Error(ErrorCode::invalid_argument, "quadratic needs dimension >= 1");
  require_finite(diag_, "B");
  require_finite(c_, "c");
  validate_and_cache_spectrum();
}

QuadraticObjective QuadraticObjective::diagonal(Vector diagonal, Vector c) {
  return QuadraticObjective(std::move(diagonal), std::move(c), true);
}

void QuadraticObjective::validate_and_cache_spectrum() {
  if (diagonal_) {
    lambda_max_ = diag_.maxCoeff();
    lambda_min_ = diag_.minCoeff();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(B_, Eigen::EigenvaluesOnly);
    lambda_max_ = es.eigenvalues().maxCoeff();
    lambda_min_ = es.eigenvalues().minCoeff();
  }
  if (lambda_min_ < -1e-12 * std::max(std::abs(lambda_max_), 1e-300))
    throw Error(ErrorCode::invalid_argument, "B is not positive semi-definite");
  lambda_max_ = std::max(lambda_max_, 0.0);
  lambda_min_ = std::max(lambda_min_, 0.0);
}

std::string QuadraticObjective::tag() const {
  std::ostringstream os;
  os << "quadratic(d=" << dim() << (diagonal_ ? ",diag" : "") << ")";
  return os.str();
}

Vector QuadraticObjective::apply(const Vector& v) const {
  if (diagonal_) return diag_.cwiseProduct(v);
  return B_ * v;
}

Matrix QuadraticObjective::dense() const {
  if (diagonal_) return diag_.asDiagonal();
  return B_;
}

double QuadraticObjective::do_value(const Vector& x) const { return 0.5 * x.dot(apply(x)) - c_.dot(x); }

Vector QuadraticObjective::do_gradient(const Vector& x) const { return apply(x) - c_; }

Vector QuadraticObjective::do_hvp(const Vector&, const Vector& v) const { return apply(v); }

std::optional<double> QuadraticObjective::constant_chord_quotient(const Vector& direction) const {
  check_dim(direction, "direction");
  const double nn = direction.squaredNorm();
  if (nn == 0.0) return std::nullopt;
  return direction.dot(apply(direction)) / nn;
}

// ---------------------------------------------------------------------------
// LogisticObjective

LogisticObjective::LogisticObjective(Matrix A, Vector labels) : A_(std::move(A)), y_(std::move(labels)) {
  if (A_.rows() != y_.size()) throw Error(ErrorCode::dimension_mismatch, "data rows and label count differ");
  if (A_.rows() == 0 || A_.cols() == 0) throw Error(ErrorCode::invalid_argument, "logistic data is empty");
  require_finite(A_, "data matrix");
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    if (y_[i] != 1.0 && y_[i] != -1.0)
      throw Error(ErrorCode::invalid_argument, "labels must be -1 or +1 (row " + std::to_string(i) + ")");
  }
  L_ = power_iteration_gram(A_) / 4.0;
}

std::string LogisticObjective::tag() const {
  std::ostringstream os;
  os << "logistic(n=" << rows() << ",d=" << dim() << ")";
  return os.str();
}

double LogisticObjective::do_value(const Vector& x) const {
  const Vector m = y_.cwiseProduct(A_ * x);
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) s += softplus(-m[i]);
  return s;
}

Vector LogisticObjective::do_gradient(const Vector& x) const {
  const Vector m = y_.cwiseProduct(A_ * x);
  Vector w(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) w[i] = -y_[i] * sigmoid(-m[i]);
  return A_.transpose() * w;
}

Vector LogisticObjective::do_hvp(const Vector& x, const Vector& v) const {
  const Vector m = A_ * x;
  Vector av = A_ * v;
  for (Eigen::Index i = 0; i < m.size(); ++i) av[i] *= sigmoid(m[i]) * sigmoid(-m[i]);
  return A_.transpose() * av;
}

bool LogisticObjective::separates(const Vector& x) const {
  check_dim(x, "point");
  return (y_.cwiseProduct(A_ * x).array() > 0.0).all();
}

double power_iteration_gram(const Matrix& M, double rel_tol, int max_iters) {
  if (M.cols() == 0) return 0.0;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector v(M.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = M.transpose() * (M * v);
    const double next = v.dot(w);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 0 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      // One more Rayleigh quotient on the normalized iterate.
      return std::max(next, v.dot(M.transpose() * (M * v)));
    }
    lambda = next;
  }
  throw Error(ErrorCode::not_converged, "power iteration did not converge");
}

double smoothness_constant(const Objective& obj) {
  if (obj.kind() != ObjectiveKind::quadratic && obj.kind() != ObjectiveKind::logistic)
    throw Error(ErrorCode::unsupported, "no smoothness constant for objective '" + obj.tag() + "'");
  auto L = obj.smoothness_constant();
  if (!L) throw Error(ErrorCode::unsupported, "no smoothness constant for objective '" + obj.tag() + "'");
  return *L;
}

// ---------------------------------------------------------------------------
// Generators

QuadraticObjective make_power_law_quadratic(int d, double alpha, double L, std::uint64_t seed,
                                            const PowerLawOptions& options) {
  if (d < 1) throw Error(ErrorCode::invalid_argument, "power-law quadratic needs d >= 1");
  if (!(alpha > 0) || !(L > 0)) throw Error(ErrorCode::invalid_argument, "power-law quadratic needs alpha > 0 and L > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  Vector lambda(d);
  for (int i = 0; i < d; ++i) lambda[i] = L * std::pow(static_cast<double>(i + 1), -alpha);

  Vector c = Vector::Zero(d);
  Matrix Q;
  if (options.rotate && d > 1) {
    Matrix G(d, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < d; ++i) G(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(G);
    Q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j)
      if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  }
  if (options.random_linear_term)
    for (int i = 0; i < d; ++i) c[i] = normal(rng);

  if (Q.size() == 0) return QuadraticObjective::diagonal(lambda, c);
  Matrix B = Q * lambda.asDiagonal() * Q.transpose();
  B = 0.5 * (B + B.transpose()).eval();
  return QuadraticObjective(std::move(B), std::move(c));
}

LogisticObjective make_synthetic_logistic(int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw Error(ErrorCode::invalid_argument, "synthetic logistic needs n >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Vector w(d);
  for (int j = 0; j < d; ++j) w[j] = normal(rng);
  Matrix A(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = normal(rng);
  Vector y(n);
  const Vector logits = A * w;
  for (int i = 0; i < n; ++i) y[i] = uniform(rng) < sigmoid(logits[i]) ? 1.0 : -1.0;
  return LogisticObjective(std::move(A), std::move(y));
}

// ---------------------------------------------------------------------------
// Dataset ingestion

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open dataset '" + path.string() + "'");
  if (!(options.train_fraction > 0.0 && options.train_fraction <= 1.0))
    throw Error(ErrorCode::invalid_argument, "train_fraction must lie in (0, 1]");

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t arity = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> vals(fields.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], vals[j])) {
        numeric = false;
        bad_col = j + 1;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && arity == 0) {
        arity = fields.size();  // header row
        continue;
      }
      throw Error(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": column " +
                                              std::to_string(bad_col) + " is not a number");
    }
    if (arity == 0) arity = fields.size();
    if (fields.size() != arity)
      throw Error(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(arity) + " columns, found " +
                                              std::to_string(fields.size()));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw Error(ErrorCode::parse_error, "dataset '" + path.string() + "' has no rows");
  if (arity < 2) throw Error(ErrorCode::parse_error, "dataset needs at least one feature column and a label");

  const std::size_t n = rows.size();
  const std::size_t d_raw = arity - 1;
  bool zero_one = true;
  bool pm_one = true;
  for (const auto& r : rows) {
    const double lab = r.back();
    zero_one = zero_one && (lab == 0.0 || lab == 1.0);
    pm_one = pm_one && (lab == -1.0 || lab == 1.0);
  }
  if (!zero_one && !pm_one) throw Error(ErrorCode::parse_error, "labels must be {0,1} or {-1,+1}");

  Dataset ds;
  const std::size_t d = d_raw + (options.add_bias ? 1 : 0);
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d_raw; ++j) ds.features(i, j) = rows[i][j];
    const double lab = rows[i].back();
    ds.labels[i] = (zero_one && !pm_one) ? (lab == 1.0 ? 1.0 : -1.0) : lab;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (options.train_fraction < 1.0) {
    std::mt19937_64 rng(options.split_seed);
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    ds.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  } else {
    ds.train_rows = order;
  }

  if (options.standardize) {
    for (std::size_t j = 0; j < d_raw; ++j) {
      double mean = 0.0;
      for (auto i : ds.train_rows) mean += ds.features(i, j);
      mean /= static_cast<double>(ds.train_rows.size());
      double var = 0.0;
      for (auto i : ds.train_rows) var += (ds.features(i, j) - mean) * (ds.features(i, j) - mean);
      const double sd = std::sqrt(var / static_cast<double>(ds.train_rows.size()));
      for (std::size_t i = 0; i < n; ++i) {
        ds.features(i, j) -= mean;
        if (sd > 0) ds.features(i, j) /= sd;
      }
    }
  }
  if (options.add_bias) ds.features.col(static_cast<Eigen::Index>(d_raw)).setOnes();
  return ds;
}

LogisticObjective load_dataset_csv(const std::filesystem::path& path, const IngestOptions& options) {
  Dataset ds = read_dataset_csv(path, options);
  Matrix A(static_cast<Eigen::Index>(ds.train_rows.size()), ds.features.cols());
  Vector y(static_cast<Eigen::Index>(ds.train_rows.size()));
  for (std::size_t r = 0; r < ds.train_rows.size(); ++r) {
    A.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(ds.train_rows[r]));
    y[static_cast<Eigen::Index>(r)] = ds.labels[static_cast<Eigen::Index>(ds.train_rows[r])];
  }
  return LogisticObjective(std::move(A), std::move(y));
}

// ---------------------------------------------------------------------------
// Reference solutions

ReferenceSolution compute_reference_solution(const Objective& obj, double tol, int max_iters) {
  if (!(tol > 0)) throw Error(ErrorCode::invalid_argument, "reference tolerance must be positive");
  if (!obj.convex()) throw Error(ErrorCode::invalid_argument, "reference solution needs a convex objective");

  if (const auto* q = dynamic_cast<const QuadraticObjective*>(&obj)) {
    const Matrix B = q->dense();
    Vector x = B.ldlt().solve(q->linear_term());
    // One step of iterative refinement.
    x += B.ldlt().solve(q->linear_term() - B * x);
    ReferenceSolution ref{x, q->value(x), q->gradient(x).norm(), tol, "direct-solve"};
    // The residual of a direct solve sits at round-off, so the tolerance is relative to L|x| + |c|.
    const double scale = std::max(1.0, q->lambda_max() * x.norm() + q->linear_term().norm());
    if (x.allFinite() && ref.grad_norm <= tol * scale) return ref;
    if (!x.allFinite() || ref.grad_norm > std::sqrt(tol) * scale)
      throw Error(ErrorCode::no_minimizer, "quadratic has no minimizer (c outside the range of B)");
    throw NotConvergedError("direct solve residual " + std::to_string(ref.grad_norm) + " above tolerance", ref);
  }

  const auto* logistic = dynamic_cast<const LogisticObjective*>(&obj);
  StronglyAdapted rule{SmoothnessKind::point_wise_D, RootSolveConfig{}};
  Vector x = Vector::Zero(static_cast<Eigen::Index>(obj.dim()));
  ReferenceSolution best{x, obj.value(x), obj.gradient(x).norm(), tol, "gd-adapted-D"};
  for (int k = 0; k < max_iters; ++k) {
    const Vector g = obj.gradient(x);
    const double gn = g.norm();
    const double f = obj.value(x);
    if (gn < best.grad_norm || (gn == best.grad_norm && f < best.f_star)) best = {x, f, gn, tol, "gd-adapted-D"};
    if (gn <= tol) return best;
    if (logistic && logistic->separates(x))
      throw Error(ErrorCode::no_minimizer, "data are linearly separable; the loss has no finite minimizer");
    double eta;
    try {
      eta = solve_strongly_adapted(obj, x, rule.kind, rule.solver);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ray_minimization)
        throw Error(ErrorCode::no_minimizer, "objective decreases along the whole ray; no finite minimizer");
      throw;
    }
    x -= eta * g;
  }
  const Vector g = obj.gradient(x);
  if (g.norm() < best.grad_norm) best = {x, obj.value(x), g.norm(), tol, "gd-adapted-D"};
  if (best.grad_norm <= tol) return best;
  throw NotConvergedError("reference solver hit max_iters with gradient norm " + std::to_string(best.grad_norm), best);
}

std::string reference_to_json(const ReferenceSolution& ref) {
  nlohmann::json j;
  j["x_star"] = std::vector<double>(ref.x_star.data(), ref.x_star.data() + ref.x_star.size());
  j["f_star"] = ref.f_star;
  j["grad_norm"] = ref.grad_norm;
  j["tol"] = ref.tolerance;
  j["method_tag"] = ref.method_tag;
  return j.dump(2);
}

ReferenceSolution reference_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ReferenceSolution ref;
    const auto xs = j.at("x_star").get<std::vector<double>>();
    ref.x_star = Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
    ref.f_star = j.at("f_star").get<double>();
    ref.grad_norm = j.at("grad_norm").get<double>();
    ref.tolerance = j.value("tol", 0.0);
    ref.method_tag = j.value("method_tag", std::string{});
    return ref;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("reference JSON: ") + e.what());
  }
}

}  // namespace dirsmooth
