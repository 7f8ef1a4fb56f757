#pragma once

#include "dirsmooth/core.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dirsmooth {

enum class ObjectiveKind { quadratic, logistic, custom };

/// A differentiable objective f : R^d -> R.
///
/// Public entry points validate dimensions and forward to the protected
/// `do_*` hooks, so subclasses only implement the math. Instances are
/// immutable after construction and may be shared across threads.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual ObjectiveKind kind() const = 0;
  virtual std::string tag() const = 0;
  /// Whether the upper-bound and lower-bound properties that need convexity apply.
  virtual bool convex() const = 0;
  virtual bool has_hvp() const { return false; }

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Vector hessian_vector_product(const Vector& x, const Vector& v) const;

  /// Closed-form chord quotient (y-x)^T B (y-x) / |y-x|^2 when the Hessian is
  /// constant, so the quotient does not depend on the position along the chord.
  virtual std::optional<double> constant_chord_quotient(const Vector& direction) const;

  /// Global Lipschitz constant of the gradient when the objective knows it.
  virtual std::optional<double> smoothness_constant() const { return std::nullopt; }

 protected:
  virtual double do_value(const Vector& x) const = 0;
  virtual Vector do_gradient(const Vector& x) const = 0;
  virtual Vector do_hvp(const Vector& x, const Vector& v) const;

  void check_dim(const Vector& x, const char* what) const;
};

/// f(x) = x^T B x / 2 - c^T x with B symmetric positive semi-definite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix B, Vector c);
  /// Diagonal representation: B = diag(diagonal).
  static QuadraticObjective diagonal(Vector diagonal, Vector c);

  std::size_t dim() const override { return static_cast<std::size_t>(c_.size()); }
  ObjectiveKind kind() const override { return ObjectiveKind::quadratic; }
  std::string tag() const override;
  bool convex() const override { return true; }
  bool has_hvp() const override { return true; }
  std::optional<double> constant_chord_quotient(const Vector& direction) const override;
  std::optional<double> smoothness_constant() const override { return lambda_max_; }

  /// B * v without forming B for the diagonal representation.
  Vector apply(const Vector& v) const;
  Matrix dense() const;
  const Vector& linear_term() const { return c_; }
  bool is_diagonal() const { return diagonal_; }
  double lambda_max() const { return lambda_max_; }
  double lambda_min() const { return lambda_min_; }

 protected:
  double do_value(const Vector& x) const override;
  Vector do_gradient(const Vector& x) const override;
  Vector do_hvp(const Vector& x, const Vector& v) const override;

 private:
  QuadraticObjective(Vector diag, Vector c, bool);
  void validate_and_cache_spectrum();

  Matrix B_;
  Vector diag_;
  Vector c_;
  bool diagonal_ = false;
  double lambda_max_ = 0.0;
  double lambda_min_ = 0.0;
};

/// Unregularized logistic loss f(x) = sum_i log(1 + exp(-y_i a_i^T x)).
class LogisticObjective final : public Objective {
 public:
  LogisticObjective(Matrix A, Vector labels);

  std::size_t dim() const override { return static_cast<std::size_t>(A_.cols()); }
  ObjectiveKind kind() const override { return ObjectiveKind::logistic; }
  std::string tag() const override;
  bool convex() const override { return true; }
  bool has_hvp() const override { return true; }
  /// lambda_max(A^T A) / 4 by power iteration (1e-10 relative), computed once.
  std::optional<double> smoothness_constant() const override { return L_; }

  const Matrix& data() const { return A_; }
  const Vector& labels() const { return y_; }
  std::size_t rows() const { return static_cast<std::size_t>(A_.rows()); }
  /// True when every sample is classified with a strictly positive margin at x,
  /// which certifies linear separability (no finite minimizer).
  bool separates(const Vector& x) const;

 protected:
  double do_value(const Vector& x) const override;
  Vector do_gradient(const Vector& x) const override;
  Vector do_hvp(const Vector& x, const Vector& v) const override;

 private:
  Matrix A_;
  Vector y_;
  double L_ = 0.0;
};

/// Largest eigenvalue of the PSD matrix M^T M by power iteration.
double power_iteration_gram(const Matrix& M, double rel_tol = 1e-10, int max_iters = 100000);

/// Smoothness constant of quadratic and logistic objectives; throws `unsupported` otherwise.
double smoothness_constant(const Objective& obj);

struct PowerLawOptions {
  bool rotate = true;
  bool random_linear_term = true;
};

/// Eigenvalues lambda_i = L * i^{-alpha}, i = 1..d, under a seeded random rotation.
QuadraticObjective make_power_law_quadratic(int d, double alpha, double L, std::uint64_t seed,
                                            const PowerLawOptions& options = {});

/// Gaussian features with labels drawn from a logistic model around a random
/// weight vector, so the classes overlap.
LogisticObjective make_synthetic_logistic(int n, int d, std::uint64_t seed);

struct IngestOptions {
  bool add_bias = false;
  bool standardize = false;
  /// Fraction of rows kept for training; 1.0 disables the split.
  double train_fraction = 1.0;
  std::uint64_t split_seed = 0;
};

struct Dataset {
  Matrix features;
  Vector labels;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

/// Reads a comma-separated file: features then a final label column.
/// A non-numeric first row is treated as a header.
Dataset read_dataset_csv(const std::filesystem::path& path, const IngestOptions& options = {});
LogisticObjective load_dataset_csv(const std::filesystem::path& path, const IngestOptions& options = {});

struct ReferenceSolution {
  Vector x_star;
  double f_star = 0.0;
  double grad_norm = 0.0;
  double tolerance = 0.0;
  std::string method_tag;
};

/// Raised when the reference solver exhausts its budget; carries the best iterate.
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, ReferenceSolution best)
      : Error(ErrorCode::not_converged, what), best_(std::move(best)) {}
  const ReferenceSolution& best() const noexcept { return best_; }

 private:
  ReferenceSolution best_;
};

ReferenceSolution compute_reference_solution(const Objective& obj, double tol, int max_iters);

std::string reference_to_json(const ReferenceSolution& ref);
ReferenceSolution reference_from_json(const std::string& text);

}  // namespace dirsmooth
