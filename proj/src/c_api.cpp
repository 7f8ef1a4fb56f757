#include "dirsmooth/c_api.h"

#include "dirsmooth/bounds.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <initializer_list>
#include <limits>
#include <memory>
#include <new>
#include <string>

using dirsmooth::Error;
using dirsmooth::ErrorCode;
using json = nlohmann::json;

struct ds_objective {
  std::unique_ptr<dirsmooth::Objective> obj;
};
struct ds_reference {
  dirsmooth::ReferenceSolution ref;
};
struct ds_trace {
  dirsmooth::Trace trace;
};
struct ds_bound {
  dirsmooth::BoundSeries series;
};
struct ds_expsearch {
  dirsmooth::ExpSearchResult result;
};

namespace {

thread_local std::string g_last_error;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

int fail(int code, const std::string& what) {
  g_last_error = what;
  return code;
}

template <class F>
int guarded(F&& body) {
  try {
    body();
    return DS_OK;
  } catch (const Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(DS_PARSE_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DS_INTERNAL, e.what());
  } catch (...) {
    return fail(DS_INTERNAL, "unknown exception");
  }
}

[[noreturn]] void raise(ErrorCode code, const std::string& what) { throw Error(code, what); }

void require(const void* p, const char* name) {
  if (p == nullptr) raise(ErrorCode::invalid_argument, std::string(name) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_object(const char* text, const char* what) {
  require(text, what);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::parse_error, std::string(what) + ": " + e.what());
  }
  if (!j.is_object()) raise(ErrorCode::parse_error, std::string(what) + ": expected a JSON object");
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) raise(ErrorCode::parse_error, std::string(what) + ": unknown key '" + key + "'");
  }
}

dirsmooth::Vector to_vector(const double* data, std::size_t n) {
  dirsmooth::Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = data[i];
  return v;
}

dirsmooth::Vector json_vector(const json& j) {
  const auto vals = j.get<std::vector<double>>();
  return to_vector(vals.data(), vals.size());
}

dirsmooth::Matrix json_matrix(const json& j) {
  if (!j.is_array() || j.empty()) raise(ErrorCode::parse_error, "matrix must be a non-empty array of rows");
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const std::size_t cols = rows.front().size();
  dirsmooth::Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) raise(ErrorCode::dimension_mismatch, "matrix rows have unequal length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

void check_dim(const dirsmooth::Objective& obj, std::size_t n) {
  if (n != obj.dim())
    raise(ErrorCode::dimension_mismatch,
          "expected length " + std::to_string(obj.dim()) + ", got " + std::to_string(n));
}

std::unique_ptr<dirsmooth::Objective> make_objective(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "power_law_quadratic") {
    check_keys(j, {"type", "d", "alpha", "L", "seed", "rotate", "random_linear_term"}, "objective");
    dirsmooth::PowerLawOptions o;
    o.rotate = j.value("rotate", true);
    o.random_linear_term = j.value("random_linear_term", true);
    return std::make_unique<dirsmooth::QuadraticObjective>(dirsmooth::make_power_law_quadratic(
        j.at("d").get<int>(), j.at("alpha").get<double>(), j.value("L", 1.0), j.value("seed", std::uint64_t{0}), o));
  }
  if (type == "quadratic") {
    check_keys(j, {"type", "B", "diag", "c"}, "objective");
    if (j.contains("B") == j.contains("diag")) raise(ErrorCode::parse_error, "quadratic needs exactly one of B, diag");
    if (j.contains("diag")) {
      dirsmooth::Vector diag = json_vector(j["diag"]);
      dirsmooth::Vector c = j.contains("c") ? json_vector(j["c"]) : dirsmooth::Vector::Zero(diag.size());
      return std::make_unique<dirsmooth::QuadraticObjective>(
          dirsmooth::QuadraticObjective::diagonal(std::move(diag), std::move(c)));
    }
    dirsmooth::Matrix B = json_matrix(j["B"]);
    dirsmooth::Vector c = j.contains("c") ? json_vector(j["c"]) : dirsmooth::Vector::Zero(B.cols());
    return std::make_unique<dirsmooth::QuadraticObjective>(std::move(B), std::move(c));
  }
  if (type == "synthetic_logistic") {
    check_keys(j, {"type", "n", "d", "seed"}, "objective");
    return std::make_unique<dirsmooth::LogisticObjective>(dirsmooth::make_synthetic_logistic(
        j.at("n").get<int>(), j.at("d").get<int>(), j.value("seed", std::uint64_t{0})));
  }
  if (type == "logistic") {
    check_keys(j, {"type", "A", "y"}, "objective");
    return std::make_unique<dirsmooth::LogisticObjective>(json_matrix(j.at("A")), json_vector(j.at("y")));
  }
  if (type == "dataset") {
    check_keys(j, {"type", "path", "bias", "standardize", "train_fraction", "split_seed"}, "objective");
    dirsmooth::IngestOptions o;
    o.add_bias = j.value("bias", false);
    o.standardize = j.value("standardize", false);
    o.train_fraction = j.value("train_fraction", 1.0);
    o.split_seed = j.value("split_seed", std::uint64_t{0});
    return std::make_unique<dirsmooth::LogisticObjective>(
        dirsmooth::load_dataset_csv(j.at("path").get<std::string>(), o));
  }
  raise(ErrorCode::parse_error, "unknown objective type '" + type + "'");
}

dirsmooth::StepSource make_step_source(const json& j) {
  const std::string src = j.at("source").get<std::string>();
  if (src == "constant") {
    check_keys(j, {"source", "eta"}, "steps");
    return dirsmooth::StepSource::constant(j.at("eta").get<double>());
  }
  if (src == "inverse_L") {
    check_keys(j, {"source"}, "steps");
    return dirsmooth::StepSource::inverse_L();
  }
  if (src == "sequence") {
    check_keys(j, {"source", "etas"}, "steps");
    return dirsmooth::StepSource::sequence(j.at("etas").get<std::vector<double>>());
  }
  if (src == "adapted") {
    check_keys(j, {"source", "kind", "fixed_point_passes"}, "steps");
    auto s = dirsmooth::StepSource::adapted(dirsmooth::parse_smoothness_kind(j.value("kind", std::string("D"))));
    s.fixed_point_passes = j.value("fixed_point_passes", 20);
    return s;
  }
  raise(ErrorCode::parse_error, "unknown step source '" + src + "'");
}

dirsmooth::Vector start_point(const json& j, const dirsmooth::Objective& obj) {
  if (!j.contains("x0")) return dirsmooth::Vector::Zero(static_cast<Eigen::Index>(obj.dim()));
  dirsmooth::Vector x0 = json_vector(j["x0"]);
  check_dim(obj, static_cast<std::size_t>(x0.size()));
  return x0;
}

dirsmooth::Schedule parse_schedule(const std::string& s) {
  if (s == "anytime") return dirsmooth::Schedule::anytime;
  if (s == "fixed_horizon") return dirsmooth::Schedule::fixed_horizon;
  raise(ErrorCode::parse_error, "unknown schedule '" + s + "'");
}

const json& need(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) raise(ErrorCode::parse_error, std::string(where) + ": missing key '" + key + "'");
  return j.at(key);
}

void validate_run(const json& j) {
  check_keys(j,
             {"algorithm", "rule", "iters", "x0", "pair_metrics", "skip_path_wise", "grad_tol", "thin", "seed",
              "mu_star", "schedule", "eta0", "K", "mu", "alpha0", "gamma0", "steps"},
             "run");
  if (need(j, "iters", "run").get<int>() < 0) raise(ErrorCode::invalid_argument, "iters must be non-negative");
  const std::string alg = j.value("algorithm", std::string("gd"));
  if (alg == "gd") {
    dirsmooth::validate_rule(dirsmooth::rule_from_json(need(j, "rule", "gd run").dump()));
  } else if (alg == "normalized_gd") {
    parse_schedule(j.value("schedule", std::string("anytime")));
    if (!(need(j, "eta0", "normalized_gd run").get<double>() > 0))
      raise(ErrorCode::invalid_argument, "eta0 must be positive");
    if (j.value("K", 0) < 0) raise(ErrorCode::invalid_argument, "K must be non-negative");
  } else if (alg == "agd_momentum" || alg == "agd_estimating") {
    make_step_source(need(j, "steps", "AGD run"));
    if (!(j.value("mu", 0.0) >= 0)) raise(ErrorCode::invalid_argument, "mu must be non-negative");
    if (alg == "agd_momentum") {
      const double a = need(j, "alpha0", "agd_momentum run").get<double>();
      if (!(a > 0 && a <= 1)) raise(ErrorCode::invalid_argument, "alpha0 must lie in (0, 1]");
    } else if (!(need(j, "gamma0", "agd_estimating run").get<double>() > 0)) {
      raise(ErrorCode::invalid_argument, "gamma0 must be positive");
    }
  } else {
    raise(ErrorCode::parse_error, "unknown algorithm '" + alg + "'");
  }
  if (alg != "gd" && j.contains("rule")) raise(ErrorCode::parse_error, "key 'rule' applies to gd only");
}

dirsmooth::Trace run_from_json(const dirsmooth::Objective& obj, const json& j,
                               const dirsmooth::ReferenceSolution* ref) {
  validate_run(j);
  dirsmooth::RunOptions opts;
  opts.pair_metrics = j.value("pair_metrics", false);
  opts.skip_path_wise = j.value("skip_path_wise", false);
  opts.grad_tol = j.value("grad_tol", 0.0);
  opts.thin = j.value("thin", false);
  opts.seed = j.value("seed", std::uint64_t{0});
  opts.reference = j.value("mu_star", true) ? ref : nullptr;
  const int iters = j.at("iters").get<int>();
  const dirsmooth::Vector x0 = start_point(j, obj);
  const std::string alg = j.value("algorithm", std::string("gd"));

  if (alg == "gd") {
    dirsmooth::StepSizeRule rule = dirsmooth::rule_from_json(j.at("rule").dump());
    if (auto* p = std::get_if<dirsmooth::Polyak>(&rule); p != nullptr && !p->f_star) {
      if (ref == nullptr) raise(ErrorCode::invalid_argument, "polyak rule needs f_star or a reference solution");
      p->f_star = ref->f_star;
    }
    return dirsmooth::gd_run(obj, x0, rule, iters, opts);
  }
  if (alg == "normalized_gd") {
    return dirsmooth::normalized_gd_run(obj, x0, parse_schedule(j.value("schedule", std::string("anytime"))),
                                        j.at("eta0").get<double>(), iters, opts, j.value("K", 0));
  }
  if (alg == "agd_momentum") {
    return dirsmooth::agd_momentum_run(obj, x0, make_step_source(j.at("steps")), j.value("mu", 0.0),
                                       j.at("alpha0").get<double>(), iters, opts);
  }
  return dirsmooth::agd_estimating_run(obj, x0, make_step_source(j.at("steps")), j.value("mu", 0.0),
                                       j.at("gamma0").get<double>(), iters, opts);
}

const std::initializer_list<const char*> kBoundNames = {"sc_split", "sc_iterates", "convex_avg",       "agd",
                                                        "polyak",   "polyak_alternate", "ngd", "classic_L"};

void validate_bound(const json& j) {
  check_keys(j, {"bound", "M", "gamma", "product_range", "offset", "L", "flavor"}, "bound");
  const std::string name = j.at("bound").get<std::string>();
  bool known = false;
  for (const char* n : kBoundNames) known = known || name == n;
  if (!known) raise(ErrorCode::parse_error, "unknown bound '" + name + "'");
  if (j.contains("M")) dirsmooth::parse_smoothness_kind(j["M"].get<std::string>());
  if (j.contains("gamma")) j["gamma"].get<double>();
  const std::string range = j.value("product_range", std::string("before_k"));
  if (range != "before_k" && range != "through_k") raise(ErrorCode::parse_error, "unknown product_range");
  const std::string off = j.value("offset", std::string("verbatim"));
  if (off != "verbatim" && off != "path_max") raise(ErrorCode::parse_error, "unknown offset");
  const std::string flavor = j.value("flavor", std::string("gd"));
  if (flavor != "gd" && flavor != "polyak") raise(ErrorCode::parse_error, "unknown flavor");
}

dirsmooth::BoundSeries bound_from_json(const dirsmooth::Objective& obj, const dirsmooth::Trace& trace,
                                       const dirsmooth::ReferenceSolution& ref, const json& j) {
  validate_bound(j);
  const std::string name = j.at("bound").get<std::string>();
  auto M = [&](const char* fallback) { return dirsmooth::parse_smoothness_kind(j.value("M", std::string(fallback))); };
  auto gamma = [&] {
    if (j.contains("gamma")) return j["gamma"].get<double>();
    if (trace.rule)
      if (const auto* p = std::get_if<dirsmooth::Polyak>(&*trace.rule)) return p->gamma;
    raise(ErrorCode::invalid_argument, "bound needs gamma");
  };
  if (name == "sc_split") {
    const std::string range = j.value("product_range", std::string("before_k"));
    return dirsmooth::bound_sc_split(obj, trace, ref, M("D"),
                                     range == "before_k" ? dirsmooth::SplitProductRange::before_k
                                                         : dirsmooth::SplitProductRange::through_k);
  }
  if (name == "sc_iterates") return dirsmooth::bound_sc_iterates(obj, trace, ref, M("D"));
  if (name == "convex_avg") return dirsmooth::bound_convex_avg(obj, trace, ref, M("D"));
  if (name == "agd") return dirsmooth::bound_agd(obj, trace, ref);
  if (name == "polyak") return dirsmooth::bound_polyak(obj, trace, ref, M("H"), gamma());
  if (name == "polyak_alternate") return dirsmooth::bound_polyak_alternate(obj, trace, ref, gamma());
  if (name == "ngd") {
    const std::string off = j.value("offset", std::string("verbatim"));
    return dirsmooth::bound_ngd(obj, trace, ref, M("D"),
                                off == "verbatim" ? dirsmooth::NgdOffset::verbatim : dirsmooth::NgdOffset::path_max);
  }
  if (name == "classic_L") {
    const double L = j.contains("L") ? j["L"].get<double>() : dirsmooth::smoothness_constant(obj);
    const std::string flavor = j.value("flavor", std::string("gd"));
    return dirsmooth::bound_classic_L(obj, trace, ref, L,
                                      flavor == "gd" ? dirsmooth::ClassicFlavor::gd : dirsmooth::ClassicFlavor::polyak);
  }
  raise(ErrorCode::parse_error, "unknown bound '" + name + "'");
}

double opt_or_nan(const std::optional<double>& v) { return v ? *v : kNaN; }

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

extern "C" {

const char* ds_version(void) { return "1.0.0"; }

const char* ds_last_error(void) { return g_last_error.c_str(); }

const char* ds_status_name(int status) {
  if (status == DS_OK) return "ok";
  if (status == DS_INTERNAL) return "internal";
  if (status >= 1 && status <= 12) return dirsmooth::to_string(static_cast<ErrorCode>(status)).data();
  return "unknown";
}

void ds_string_free(char* s) { std::free(s); }

int ds_objective_create(const char* spec_json, ds_objective** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    const json j = parse_object(spec_json, "objective");
    auto h = std::make_unique<ds_objective>();
    h->obj = make_objective(j);
    *out = h.release();
  });
}

void ds_objective_free(ds_objective* obj) { delete obj; }

int ds_objective_dim(const ds_objective* obj, size_t* out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = obj->obj->dim();
  });
}

int ds_objective_tag(const ds_objective* obj, char** out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = dup_string(obj->obj->tag());
  });
}

int ds_objective_value(const ds_objective* obj, const double* x, size_t n, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(x, "x");
    require(out, "out");
    check_dim(*obj->obj, n);
    *out = obj->obj->value(to_vector(x, n));
  });
}

int ds_objective_gradient(const ds_objective* obj, const double* x, size_t n, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(x, "x");
    require(out, "out");
    check_dim(*obj->obj, n);
    const dirsmooth::Vector g = obj->obj->gradient(to_vector(x, n));
    std::memcpy(out, g.data(), n * sizeof(double));
  });
}

int ds_objective_hvp(const ds_objective* obj, const double* x, const double* v, size_t n, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(x, "x");
    require(v, "v");
    require(out, "out");
    check_dim(*obj->obj, n);
    const dirsmooth::Vector hv = obj->obj->hessian_vector_product(to_vector(x, n), to_vector(v, n));
    std::memcpy(out, hv.data(), n * sizeof(double));
  });
}

int ds_objective_smoothness_constant(const ds_objective* obj, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = dirsmooth::smoothness_constant(*obj->obj);
  });
}

int ds_smoothness(const ds_objective* obj, const char* kind, const double* x, const double* y, size_t n,
                  double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(kind, "kind");
    require(x, "x");
    require(y, "y");
    require(out, "out");
    check_dim(*obj->obj, n);
    *out = dirsmooth::evaluate_smoothness(*obj->obj, dirsmooth::parse_smoothness_kind(kind), to_vector(x, n),
                                          to_vector(y, n))
               .value;
  });
}

int ds_directional_mu(const ds_objective* obj, const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(x, "x");
    require(y, "y");
    require(out, "out");
    check_dim(*obj->obj, n);
    *out = dirsmooth::directional_mu(*obj->obj, to_vector(x, n), to_vector(y, n)).value;
  });
}

int ds_step_size(const ds_objective* obj, const char* rule_json, const double* x, size_t n, int k, double* out) {
  return guarded([&] {
    require(obj, "objective");
    require(rule_json, "rule");
    require(x, "x");
    require(out, "out");
    check_dim(*obj->obj, n);
    const auto rule = dirsmooth::rule_from_json(rule_json);
    dirsmooth::validate_rule(rule, obj->obj.get());
    *out = dirsmooth::compute_step(rule, *obj->obj, to_vector(x, n), k);
  });
}

int ds_reference_compute(const ds_objective* obj, double tol, int max_iters, ds_reference** out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<ds_reference>();
    h->ref = dirsmooth::compute_reference_solution(*obj->obj, tol, max_iters);
    *out = h.release();
  });
}

int ds_reference_from_json(const char* text, ds_reference** out) {
  return guarded([&] {
    require(text, "json");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<ds_reference>();
    h->ref = dirsmooth::reference_from_json(text);
    *out = h.release();
  });
}

int ds_reference_to_json(const ds_reference* ref, char** out) {
  return guarded([&] {
    require(ref, "reference");
    require(out, "out");
    *out = dup_string(dirsmooth::reference_to_json(ref->ref));
  });
}

int ds_reference_f_star(const ds_reference* ref, double* out) {
  return guarded([&] {
    require(ref, "reference");
    require(out, "out");
    *out = ref->ref.f_star;
  });
}

void ds_reference_free(ds_reference* ref) { delete ref; }

int ds_run(const ds_objective* obj, const char* run_json, const ds_reference* ref, ds_trace** out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = nullptr;
    const json j = parse_object(run_json, "run");
    auto h = std::make_unique<ds_trace>();
    h->trace = run_from_json(*obj->obj, j, ref != nullptr ? &ref->ref : nullptr);
    *out = h.release();
  });
}

int ds_run_validate(const char* run_json) {
  return guarded([&] { validate_run(parse_object(run_json, "run")); });
}

void ds_trace_free(ds_trace* trace) { delete trace; }

int ds_trace_length(const ds_trace* trace, size_t* out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    *out = trace->trace.size();
  });
}

int ds_trace_record(const ds_trace* trace, size_t k, ds_record* out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    if (k >= trace->trace.size()) raise(ErrorCode::invalid_argument, "record index out of range");
    const auto& r = trace->trace[k];
    *out = ds_record{r.k, r.f, r.grad_norm, r.eta, opt_or_nan(r.D), opt_or_nan(r.A), opt_or_nan(r.H),
                     opt_or_nan(r.mu_star)};
  });
}

int ds_trace_iterate(const ds_trace* trace, size_t k, double* out, size_t n) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    if (k >= trace->trace.size()) raise(ErrorCode::invalid_argument, "record index out of range");
    const auto& x = trace->trace[k].x;
    if (x.size() == 0) raise(ErrorCode::missing_metrics, "trace was recorded without iterates");
    if (static_cast<std::size_t>(x.size()) != n) raise(ErrorCode::dimension_mismatch, "iterate length mismatch");
    std::memcpy(out, x.data(), n * sizeof(double));
  });
}

int ds_trace_csv(const ds_trace* trace, char** out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    *out = dup_string(dirsmooth::trace_csv(trace->trace));
  });
}

int ds_trace_to_json(const ds_trace* trace, char** out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    *out = dup_string(dirsmooth::trace_to_json(trace->trace));
  });
}

int ds_trace_meta_json(const ds_trace* trace, char** out) {
  return guarded([&] {
    require(trace, "trace");
    require(out, "out");
    *out = dup_string(dirsmooth::trace_meta_json(trace->trace));
  });
}

int ds_trace_from_json(const char* text, ds_trace** out) {
  return guarded([&] {
    require(text, "json");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<ds_trace>();
    h->trace = dirsmooth::trace_from_json(text);
    *out = h.release();
  });
}

int ds_bound_evaluate(const ds_objective* obj, const ds_trace* trace, const ds_reference* ref,
                      const char* selection_json, ds_bound** out) {
  return guarded([&] {
    require(obj, "objective");
    require(trace, "trace");
    require(ref, "reference");
    require(out, "out");
    *out = nullptr;
    const json j = parse_object(selection_json, "bound");
    auto h = std::make_unique<ds_bound>();
    h->series = bound_from_json(*obj->obj, trace->trace, ref->ref, j);
    *out = h.release();
  });
}

int ds_bound_validate(const char* selection_json) {
  return guarded([&] { validate_bound(parse_object(selection_json, "bound")); });
}

void ds_bound_free(ds_bound* bound) { delete bound; }

int ds_bound_length(const ds_bound* bound, size_t* out) {
  return guarded([&] {
    require(bound, "bound");
    require(out, "out");
    *out = bound->series.values.size();
  });
}

int ds_bound_values(const ds_bound* bound, double* out, size_t n) {
  return guarded([&] {
    require(bound, "bound");
    require(out, "out");
    if (n != bound->series.values.size()) raise(ErrorCode::dimension_mismatch, "bound length mismatch");
    std::memcpy(out, bound->series.values.data(), n * sizeof(double));
  });
}

int ds_bound_dominance(const ds_bound* bound, double rel_tol, ds_dominance* out) {
  return guarded([&] {
    require(bound, "bound");
    require(out, "out");
    const auto r = dirsmooth::check_dominance(bound->series, rel_tol);
    *out = ds_dominance{r.ok ? 1 : 0, r.max_violation, r.index, r.checked};
  });
}

int ds_bound_csv(const ds_bound* bound, char** out) {
  return guarded([&] {
    require(bound, "bound");
    require(out, "out");
    *out = dup_string(dirsmooth::bound_csv(bound->series));
  });
}

int ds_bound_name(const ds_bound* bound, char** out) {
  return guarded([&] {
    require(bound, "bound");
    require(out, "out");
    *out = dup_string(bound->series.name);
  });
}

int ds_expsearch_run(const ds_objective* obj, const char* text, ds_expsearch** out) {
  return guarded([&] {
    require(obj, "objective");
    require(out, "out");
    *out = nullptr;
    const json j = parse_object(text, "expsearch");
    check_keys(j, {"eta0", "K", "kind", "x0", "pair_metrics", "max_outer"}, "expsearch");
    dirsmooth::ExpSearchOptions o;
    o.kind = dirsmooth::parse_smoothness_kind(j.value("kind", std::string("D")));
    o.max_outer = j.value("max_outer", 64);
    o.trace_options.pair_metrics = j.value("pair_metrics", false);
    auto h = std::make_unique<ds_expsearch>();
    h->result = dirsmooth::exponential_search_gd(*obj->obj, start_point(j, *obj->obj), j.at("eta0").get<double>(),
                                                 j.at("K").get<int>(), o);
    *out = h.release();
  });
}

void ds_expsearch_free(ds_expsearch* es) { delete es; }

int ds_expsearch_summary(const ds_objective* obj, const ds_expsearch* es, char** out) {
  return guarded([&] {
    require(es, "expsearch");
    require(out, "out");
    const auto& r = es->result;
    json j;
    j["case"] = r.case_id;
    j["eta"] = finite_or_string(r.eta);
    j["eta0"] = finite_or_string(r.eta0);
    j["K"] = r.K;
    j["inner_gd_steps"] = r.inner_gd_steps;
    j["budget"] = nullptr;
    if (obj != nullptr) {
      if (const auto L = obj->obj->smoothness_constant())
        j["budget"] = dirsmooth::exponential_search_budget(r.eta0, *L, r.K);
    }
    j["eta_hi"] = r.eta_hi ? finite_or_string(*r.eta_hi) : json(nullptr);
    j["psi_hi"] = r.psi_hi ? finite_or_string(*r.psi_hi) : json(nullptr);
    auto& probes = j["probes"] = json::array();
    for (const auto& p : r.probes)
      probes.push_back({{"eta", finite_or_string(p.eta)},
                        {"psi", finite_or_string(p.psi)},
                        {"phi", finite_or_string(p.phi)},
                        {"finite", p.finite},
                        {"steps", p.steps}});
    *out = dup_string(j.dump(2));
  });
}

int ds_expsearch_trace(const ds_expsearch* es, ds_trace** out) {
  return guarded([&] {
    require(es, "expsearch");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<ds_trace>();
    h->trace = es->result.trace;
    *out = h.release();
  });
}

int ds_expsearch_bound(const ds_objective* obj, const ds_expsearch* es, const ds_reference* ref, ds_bound** out) {
  return guarded([&] {
    require(obj, "objective");
    require(es, "expsearch");
    require(ref, "reference");
    require(out, "out");
    *out = nullptr;
    auto h = std::make_unique<ds_bound>();
    h->series = dirsmooth::bound_exponential_search(*obj->obj, es->result, ref->ref);
    *out = h.release();
  });
}

}  // extern "C"
