// dirsmooth: experiment harness over the C API.
//
//   dirsmooth run       --config cfg.json --out dir
//   dirsmooth compare   --config cfg.json --out dir
//   dirsmooth bounds    --config cfg.json --trace t.json --reference r.json --out dir
//   dirsmooth expsearch --config cfg.json --out dir
//
// Exit codes: 0 success, 1 validation, 2 runtime failure in at least one cell.

#include "dirsmooth/c_api.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  ApiError(int status, const std::string& what) : std::runtime_error(what), status(status) {}
  int status;
};

struct Free {
  void operator()(ds_objective* p) const { ds_objective_free(p); }
  void operator()(ds_reference* p) const { ds_reference_free(p); }
  void operator()(ds_trace* p) const { ds_trace_free(p); }
  void operator()(ds_bound* p) const { ds_bound_free(p); }
  void operator()(ds_expsearch* p) const { ds_expsearch_free(p); }
  void operator()(char* p) const { ds_string_free(p); }
};
template <class T>
using Owned = std::unique_ptr<T, Free>;

void check(int status, const std::string& context) {
  if (status != DS_OK)
    throw ApiError(status, context + ": " + ds_status_name(status) + ": " + ds_last_error());
}

std::string take(char* s) {
  Owned<char> owned(s);
  return std::string(s);
}

// ---------------------------------------------------------------------------
// Seeding and hashing.

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration.

struct Settings {
  fs::path config_path;
  fs::path out = "out";
  std::optional<std::uint64_t> seed;
  int workers = 0;
  bool paper_scale = false;
};

struct RuleEntry {
  json run;                          // run description without iters / seed
  std::optional<std::vector<double>> eta0_grid;
};

struct Config {
  json problem;
  std::vector<RuleEntry> rules;
  int iters = 2000;
  std::vector<std::uint64_t> seeds;
  std::optional<std::uint64_t> master_seed;
  bool pairs = false;
  bool skip_path_wise = false;
  bool mu_star = true;
  bool save_iterates = false;
  std::vector<json> bounds;
  double ref_tol = 1e-8;
  int ref_max_iters = 200000;
  json expsearch = json::object();
  json effective;  // normalized config the hash is taken over
};

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ValidationError(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> default_eta0_grid() {
  std::vector<double> g(20);
  for (int i = 0; i < 20; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -8.0 + 9.0 * i / 19.0);
  return g;
}

RuleEntry parse_rule_entry(const json& e, std::size_t index) {
  const std::string where = "rules[" + std::to_string(index) + "]";
  RuleEntry r;
  if (e.is_string()) {
    r.run = {{"algorithm", "gd"}, {"rule", {{"rule", e}}}};
  } else if (e.is_object() && e.contains("algorithm")) {
    r.run = e;
    if (r.run.contains("eta0_grid")) {
      const json& g = r.run["eta0_grid"];
      if (g.is_string() && g == "default") {
        r.eta0_grid = default_eta0_grid();
      } else if (g.is_array() && !g.empty()) {
        r.eta0_grid = g.get<std::vector<double>>();
      } else {
        throw ValidationError(where + ": eta0_grid must be \"default\" or a non-empty list");
      }
      if (r.run.value("algorithm", std::string()) != "normalized_gd")
        throw ValidationError(where + ": eta0_grid applies to normalized_gd only");
      if (r.run.contains("eta0")) throw ValidationError(where + ": give eta0 or eta0_grid, not both");
      r.run.erase("eta0");
      r.run.erase("eta0_grid");
    }
  } else if (e.is_object() && e.contains("rule")) {
    r.run = {{"algorithm", "gd"}, {"rule", e}};
  } else {
    throw ValidationError(where + ": expected a rule name, a rule object or an algorithm object");
  }
  for (const char* reserved : {"iters", "seed", "pair_metrics", "skip_path_wise", "mu_star", "thin"})
    if (r.run.contains(reserved)) throw ValidationError(where + ": '" + reserved + "' is set at the top level");
  json probe = r.run;
  probe["iters"] = 0;
  if (r.eta0_grid) probe["eta0"] = r.eta0_grid->front();
  const int st = ds_run_validate(probe.dump().c_str());
  if (st != DS_OK) throw ValidationError(where + ": " + ds_last_error());
  return r;
}

json normalize_problem(json p, bool paper_scale) {
  if (!p.is_object() || !p.contains("type") || !p["type"].is_string())
    throw ValidationError("problem: needs a string field 'type'");
  const std::string type = p["type"];
  if (type == "power_law_quadratic") {
    if (paper_scale || !p.contains("d")) p["d"] = paper_scale ? 300 : 50;
    if (!p.contains("alpha")) p["alpha"] = 3.0;
    if (!p.contains("L")) p["L"] = 1000.0;
  } else if (type == "synthetic_logistic") {
    if (!p.contains("n")) p["n"] = 200;
    if (!p.contains("d")) p["d"] = 10;
  } else if (type == "dataset") {
    if (!p.contains("path")) throw ValidationError("problem: dataset needs 'path'");
    if (!fs::exists(p["path"].get<std::string>()))
      throw ValidationError("problem: dataset file not found: " + p["path"].get<std::string>());
  } else if (type != "quadratic" && type != "logistic") {
    throw ValidationError("problem: unknown type '" + type + "'");
  }
  return p;
}

/// Objective spec for one seed: generated problems take the cell seed unless pinned.
json problem_for_seed(const json& problem, std::uint64_t seed) {
  json p = problem;
  const std::string type = p["type"];
  if ((type == "power_law_quadratic" || type == "synthetic_logistic") && !p.contains("seed")) p["seed"] = seed;
  return p;
}

Config load_config(const Settings& s, bool need_rules) {
  if (s.config_path.empty()) throw ValidationError("--config is required");
  std::ifstream in(s.config_path);
  if (!in) throw ValidationError("cannot open config " + s.config_path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  require_keys(j, {"problem", "rules", "iters", "seeds", "metrics", "bounds", "reference", "expsearch"}, "config");

  Config c;
  try {
    if (!j.contains("problem")) throw ValidationError("config: 'problem' is required");
    c.problem = normalize_problem(j["problem"], s.paper_scale);

    if (j.contains("rules")) {
      if (!j["rules"].is_array()) throw ValidationError("config: 'rules' must be a list");
      for (std::size_t i = 0; i < j["rules"].size(); ++i) c.rules.push_back(parse_rule_entry(j["rules"][i], i));
    }
    if (need_rules && c.rules.empty()) throw ValidationError("config: 'rules' must list at least one rule");

    if (j.contains("iters")) c.iters = j["iters"].get<int>();
    if (s.paper_scale) c.iters = 20000;
    if (c.iters < 0) throw ValidationError("config: iters must be non-negative");

    const int default_count = s.paper_scale ? 20 : 5;
    if (j.contains("seeds") && j["seeds"].is_array()) {
      c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
      if (c.seeds.empty()) throw ValidationError("config: 'seeds' list is empty");
      if (s.seed) {
        c.master_seed = *s.seed;
        c.seeds.clear();
      }
    } else {
      int count = default_count;
      std::uint64_t master = 0;
      if (j.contains("seeds")) {
        require_keys(j["seeds"], {"master", "count"}, "seeds");
        master = j["seeds"].value("master", std::uint64_t{0});
        count = j["seeds"].value("count", default_count);
      }
      if (s.paper_scale) count = 20;
      if (count < 1) throw ValidationError("seeds: count must be positive");
      c.master_seed = s.seed.value_or(master);
      c.seeds.resize(static_cast<std::size_t>(count));
    }
    if (c.master_seed) {
      const std::size_t n = c.seeds.empty() ? j["seeds"].size() : c.seeds.size();
      c.seeds.assign(n, 0);
      std::uint64_t state = *c.master_seed;
      for (auto& seed : c.seeds) seed = splitmix64(state);
    }

    if (j.contains("metrics")) {
      const json& m = j["metrics"];
      require_keys(m, {"pairs", "skip_path_wise", "mu_star", "save_iterates"}, "metrics");
      c.pairs = m.value("pairs", false);
      c.skip_path_wise = m.value("skip_path_wise", false);
      c.mu_star = m.value("mu_star", true);
      c.save_iterates = m.value("save_iterates", false);
    }

    if (j.contains("bounds")) {
      if (!j["bounds"].is_array()) throw ValidationError("config: 'bounds' must be a list");
      for (const auto& b : j["bounds"]) {
        json sel = b.is_string() ? json{{"bound", b}} : b;
        const int st = ds_bound_validate(sel.dump().c_str());
        if (st != DS_OK) throw ValidationError(std::string("bounds: ") + ds_last_error());
        c.bounds.push_back(sel);
      }
    }

    if (j.contains("reference")) {
      require_keys(j["reference"], {"tol", "max_iters"}, "reference");
      c.ref_tol = j["reference"].value("tol", c.ref_tol);
      c.ref_max_iters = j["reference"].value("max_iters", c.ref_max_iters);
    }
    if (j.contains("expsearch")) {
      c.expsearch = j["expsearch"];
      require_keys(c.expsearch, {"eta0", "eta0_scale", "K", "kind", "max_outer"}, "expsearch");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }

  json rules = json::array();
  for (const auto& r : c.rules) {
    json e = r.run;
    if (r.eta0_grid) e["eta0_grid"] = *r.eta0_grid;
    rules.push_back(e);
  }
  c.effective = {{"problem", c.problem},
                 {"rules", rules},
                 {"iters", c.iters},
                 {"seeds", c.seeds},
                 {"metrics",
                  {{"pairs", c.pairs},
                   {"skip_path_wise", c.skip_path_wise},
                   {"mu_star", c.mu_star},
                   {"save_iterates", c.save_iterates}}},
                 {"bounds", c.bounds},
                 {"reference", {{"tol", c.ref_tol}, {"max_iters", c.ref_max_iters}}},
                 {"expsearch", c.expsearch}};
  return c;
}

// ---------------------------------------------------------------------------
// Output helpers.

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, text);
  fs::rename(tmp, path);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') ? c : '_';
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class F>
void parallel_for(std::size_t n, int workers, F&& body) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) body(i);
  };
  const int extra = std::min<int>(workers, static_cast<int>(n)) - 1;
  std::vector<std::thread> pool;
  for (int t = 0; t < extra; ++t) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

std::string bound_label(const json& sel) {
  std::string s = sel.at("bound").get<std::string>();
  for (const char* key : {"M", "gamma", "product_range", "offset", "flavor"}) {
    if (!sel.contains(key)) continue;
    s += "_";
    s += sel[key].is_string() ? sel[key].get<std::string>() : fmt(sel[key].get<double>());
  }
  return slug(s);
}

// ---------------------------------------------------------------------------
// Experiment execution shared by run and compare.

struct SeedState {
  std::uint64_t seed = 0;
  Owned<ds_objective> objective;
  Owned<ds_reference> reference;
  std::optional<double> f_star;
  std::string error;
  std::string reference_path;
};

struct BoundOutcome {
  std::string label;
  std::string csv;
  bool evaluated = false;
  ds_dominance dominance{};
  std::string error;
};

struct CellResult {
  std::size_t rule_index = 0;
  std::size_t seed_index = 0;
  bool ok = false;
  std::string error;
  std::string tag;
  std::string termination;
  std::string message;
  double wall_clock = 0.0;
  std::optional<double> selected_eta0;
  std::string trace_csv;
  std::string trace_json;
  std::vector<double> f;
  std::vector<double> eta;
  std::vector<BoundOutcome> bounds;
};

Owned<ds_objective> make_objective(const json& spec) {
  ds_objective* obj = nullptr;
  check(ds_objective_create(spec.dump().c_str(), &obj), "problem");
  return Owned<ds_objective>(obj);
}

Owned<ds_trace> run_one(const ds_objective* obj, const json& run, const ds_reference* ref) {
  ds_trace* t = nullptr;
  check(ds_run(obj, run.dump().c_str(), ref, &t), "run");
  return Owned<ds_trace>(t);
}

double final_f(const ds_trace* t) {
  std::size_t n = 0;
  check(ds_trace_length(t, &n), "trace");
  ds_record r{};
  check(ds_trace_record(t, n - 1, &r), "trace");
  return r.f;
}

void execute_cell(const Config& cfg, const SeedState& seed_state, std::size_t ri, std::size_t si,
                  const fs::path& out, CellResult& cell) {
  const auto t0 = std::chrono::steady_clock::now();
  cell.rule_index = ri;
  cell.seed_index = si;
  try {
    if (!seed_state.objective) throw std::runtime_error("problem unavailable: " + seed_state.error);
    const ds_objective* obj = seed_state.objective.get();
    const ds_reference* ref = seed_state.reference.get();
    const RuleEntry& entry = cfg.rules[ri];

    json run = entry.run;
    run["iters"] = cfg.iters;
    run["seed"] = seed_state.seed;

    if (entry.eta0_grid) {
      // Grid search on the final training loss; ties keep the smaller eta0.
      json probe = run;
      probe["thin"] = true;
      probe["mu_star"] = false;
      double best = std::numeric_limits<double>::infinity();
      for (double eta0 : *entry.eta0_grid) {
        probe["eta0"] = eta0;
        ds_trace* t = nullptr;
        if (ds_run(obj, probe.dump().c_str(), nullptr, &t) != DS_OK) continue;
        Owned<ds_trace> owned(t);
        const double f = final_f(t);
        if (std::isfinite(f) && f < best) {
          best = f;
          cell.selected_eta0 = eta0;
        }
      }
      if (!cell.selected_eta0) throw std::runtime_error("no eta0 in the grid produced a finite run");
      run["eta0"] = *cell.selected_eta0;
    }

    run["pair_metrics"] = cfg.pairs;
    run["skip_path_wise"] = cfg.skip_path_wise;
    run["mu_star"] = cfg.mu_star;
    run["thin"] = !cfg.save_iterates && cfg.bounds.empty();
    Owned<ds_trace> trace = run_one(obj, run, ref);

    const json meta = json::parse(take([&] {
      char* s = nullptr;
      check(ds_trace_meta_json(trace.get(), &s), "trace");
      return s;
    }()));
    cell.tag = meta.value("rule_tag", std::string());
    cell.termination = meta.value("terminated", std::string());
    cell.message = meta.value("message", std::string());

    std::size_t n = 0;
    check(ds_trace_length(trace.get(), &n), "trace");
    for (std::size_t k = 0; k < n; ++k) {
      ds_record r{};
      check(ds_trace_record(trace.get(), k, &r), "trace");
      cell.f.push_back(r.f);
      cell.eta.push_back(r.eta);
    }

    const std::string stem = "r" + std::to_string(ri) + "_s" + std::to_string(si);
    cell.trace_csv = "traces/" + stem + ".csv";
    char* csv = nullptr;
    check(ds_trace_csv(trace.get(), &csv), "trace");
    write_file(out / cell.trace_csv, take(csv));
    if (cfg.save_iterates) {
      cell.trace_json = "traces/" + stem + ".json";
      char* tj = nullptr;
      check(ds_trace_to_json(trace.get(), &tj), "trace");
      write_file(out / cell.trace_json, take(tj));
    }

    for (std::size_t b = 0; b < cfg.bounds.size(); ++b) {
      BoundOutcome bo;
      bo.label = bound_label(cfg.bounds[b]);
      if (ref == nullptr) {
        bo.error = "no reference solution";
      } else {
        ds_bound* bound = nullptr;
        const int st = ds_bound_evaluate(obj, trace.get(), ref, cfg.bounds[b].dump().c_str(), &bound);
        if (st != DS_OK) {
          bo.error = std::string(ds_status_name(st)) + ": " + ds_last_error();
        } else {
          Owned<ds_bound> owned(bound);
          check(ds_bound_dominance(bound, 1e-9, &bo.dominance), "bound");
          bo.csv = "bounds/" + stem + "_b" + std::to_string(b) + "_" + bo.label + ".csv";
          char* bcsv = nullptr;
          check(ds_bound_csv(bound, &bcsv), "bound");
          write_file(out / bo.csv, take(bcsv));
          bo.evaluated = true;
        }
      }
      cell.bounds.push_back(std::move(bo));
    }
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  cell.wall_clock = seconds_since(t0);
}

std::vector<SeedState> prepare_seeds(const Config& cfg, const fs::path& out, int workers) {
  std::vector<SeedState> seeds(cfg.seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t si) {
    SeedState& s = seeds[si];
    s.seed = cfg.seeds[si];
    try {
      s.objective = make_objective(problem_for_seed(cfg.problem, s.seed));
    } catch (const std::exception& e) {
      s.error = e.what();
      return;
    }
    ds_reference* ref = nullptr;
    const int st = ds_reference_compute(s.objective.get(), cfg.ref_tol, cfg.ref_max_iters, &ref);
    if (st != DS_OK) {
      s.error = std::string("reference: ") + ds_status_name(st) + ": " + ds_last_error();
      return;
    }
    s.reference.reset(ref);
    double f_star = 0.0;
    check(ds_reference_f_star(ref, &f_star), "reference");
    s.f_star = f_star;
    char* rj = nullptr;
    check(ds_reference_to_json(ref, &rj), "reference");
    s.reference_path = "references/s" + std::to_string(si) + ".json";
    write_file(out / s.reference_path, take(rj));
  });
  return seeds;
}

std::vector<std::string> rule_labels(const Config& cfg, const std::vector<CellResult>& cells) {
  std::vector<std::string> labels(cfg.rules.size());
  for (std::size_t ri = 0; ri < labels.size(); ++ri) {
    for (const auto& c : cells)
      if (c.rule_index == ri && c.ok && !c.tag.empty()) {
        labels[ri] = c.tag;
        break;
      }
    if (labels[ri].empty()) labels[ri] = "rule" + std::to_string(ri);
  }
  std::map<std::string, int> seen;
  for (const auto& l : labels) ++seen[l];
  for (std::size_t ri = 0; ri < labels.size(); ++ri)
    if (seen[labels[ri]] > 1) labels[ri] += "#" + std::to_string(ri);
  return labels;
}

struct GapStats {
  std::vector<int> n;
  std::vector<double> gap_mean, gap_std, eta_mean, eta_std;
};

GapStats gap_stats(const Config& cfg, const std::vector<SeedState>& seeds, const std::vector<CellResult>& cells,
                   std::size_t ri) {
  const std::size_t len = static_cast<std::size_t>(cfg.iters) + 1;
  std::vector<std::vector<double>> gaps(len), etas(len);
  for (const auto& c : cells) {
    if (c.rule_index != ri || !c.ok || !seeds[c.seed_index].f_star) continue;
    for (std::size_t k = 0; k < c.f.size() && k < len; ++k) {
      gaps[k].push_back(c.f[k] - *seeds[c.seed_index].f_star);
      etas[k].push_back(c.eta[k]);
    }
  }
  GapStats s;
  auto mean_std = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
  };
  for (std::size_t k = 0; k < len; ++k) {
    s.n.push_back(static_cast<int>(gaps[k].size()));
    const auto [gm, gs] = mean_std(gaps[k]);
    const auto [em, es] = mean_std(etas[k]);
    s.gap_mean.push_back(gm);
    s.gap_std.push_back(gs);
    s.eta_mean.push_back(em);
    s.eta_std.push_back(es);
  }
  return s;
}

std::string aggregate_csv(const Config& cfg, const std::vector<GapStats>& stats, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << "rule_index,rule,k,n,gap_mean,gap_std,eta_mean,eta_std\n";
  for (std::size_t ri = 0; ri < stats.size(); ++ri) {
    const auto& s = stats[ri];
    for (std::size_t k = 0; k <= static_cast<std::size_t>(cfg.iters); ++k) {
      if (s.n[k] == 0) continue;
      os << ri << ',' << labels[ri] << ',' << k << ',' << s.n[k] << ',' << fmt(s.gap_mean[k]) << ','
         << fmt(s.gap_std[k]) << ',' << fmt(s.eta_mean[k]) << ',' << fmt(s.eta_std[k]) << '\n';
    }
  }
  return os.str();
}

std::string compare_csv(const Config& cfg, const std::vector<GapStats>& stats, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os << 'k';
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (std::size_t k = 0; k <= static_cast<std::size_t>(cfg.iters); ++k) {
    os << k;
    for (const auto& s : stats) os << ',' << (s.n[k] > 0 ? fmt(s.gap_mean[k]) : std::string());
    os << '\n';
  }
  return os.str();
}

json manifest_base(const std::string& command, const Settings& s, const Config& cfg) {
  json m;
  m["command"] = command;
  m["artifact_version"] = ds_version();
  m["config_hash"] = "fnv1a64:" + fnv1a64_hex(cfg.effective.dump());
  m["paper_scale"] = s.paper_scale;
  m["seed_splitter"] = cfg.master_seed ? "splitmix64" : "explicit";
  if (cfg.master_seed) m["master_seed"] = *cfg.master_seed;
  m["seeds"] = cfg.seeds;
  m["config"] = cfg.effective;
  return m;
}

int cmd_experiments(const Settings& s, bool compare) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = load_config(s, true);
  if (compare && cfg.rules.size() < 2) throw ValidationError("compare needs at least 2 rules");

  const int workers = resolve_workers(s.workers);
  fs::create_directories(s.out);
  // Problem construction errors surface before any run.
  try {
    make_objective(problem_for_seed(cfg.problem, cfg.seeds.front()));
  } catch (const ApiError& e) {
    throw ValidationError(e.what());
  }

  std::vector<SeedState> seeds = prepare_seeds(cfg, s.out, workers);
  std::vector<CellResult> cells(cfg.rules.size() * seeds.size());
  parallel_for(cells.size(), workers, [&](std::size_t i) {
    execute_cell(cfg, seeds[i % seeds.size()], i / seeds.size(), i % seeds.size(), s.out, cells[i]);
  });

  const auto labels = rule_labels(cfg, cells);
  std::vector<GapStats> stats;
  for (std::size_t ri = 0; ri < cfg.rules.size(); ++ri) stats.push_back(gap_stats(cfg, seeds, cells, ri));

  json m = manifest_base(compare ? "compare" : "run", s, cfg);
  json files = json::array();
  bool failed = false;
  auto& refs = m["references"] = json::array();
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    json r{{"seed_index", si}, {"seed", seeds[si].seed}};
    if (seeds[si].reference) {
      r["status"] = "ok";
      r["path"] = seeds[si].reference_path;
      r["f_star"] = num(*seeds[si].f_star);
      files.push_back(seeds[si].reference_path);
    } else {
      r["status"] = "failed";
      r["error"] = seeds[si].error;
      failed = true;
    }
    refs.push_back(r);
  }
  auto& jcells = m["cells"] = json::array();
  for (const auto& c : cells) {
    json jc{{"rule_index", c.rule_index},
            {"rule", labels[c.rule_index]},
            {"seed_index", c.seed_index},
            {"seed", seeds[c.seed_index].seed},
            {"status", c.ok ? "ok" : "failed"},
            {"wall_clock_s", c.wall_clock}};
    if (!c.ok) {
      jc["error"] = c.error;
      failed = true;
    } else {
      jc["termination"] = c.termination;
      if (!c.message.empty()) jc["message"] = c.message;
      jc["iterations"] = c.f.empty() ? 0 : c.f.size() - 1;
      jc["trace_csv"] = c.trace_csv;
      files.push_back(c.trace_csv);
      if (!c.trace_json.empty()) {
        jc["trace_json"] = c.trace_json;
        files.push_back(c.trace_json);
      }
      if (c.selected_eta0) jc["selected_eta0"] = *c.selected_eta0;
      auto& jb = jc["bounds"] = json::array();
      for (const auto& b : c.bounds) {
        json e{{"bound", b.label}};
        if (b.evaluated) {
          e["csv"] = b.csv;
          e["dominates"] = b.dominance.ok != 0;
          e["max_violation"] = num(b.dominance.max_violation);
          e["index"] = b.dominance.index;
          e["checked"] = b.dominance.checked;
          files.push_back(b.csv);
        } else {
          e["error"] = b.error;
        }
        jb.push_back(e);
      }
    }
    jcells.push_back(jc);
  }

  write_file(s.out / "aggregate.csv", aggregate_csv(cfg, stats, labels));
  m["aggregate_csv"] = "aggregate.csv";
  files.push_back("aggregate.csv");
  if (compare) {
    write_file(s.out / "compare.csv", compare_csv(cfg, stats, labels));
    m["compare_csv"] = "compare.csv";
    files.push_back("compare.csv");
  }
  m["files"] = files;
  m["wall_clock_s"] = seconds_since(t0);
  write_atomic(s.out / "manifest.json", m.dump(2) + "\n");

  std::size_t n_ok = 0;
  for (const auto& c : cells) n_ok += c.ok ? 1 : 0;
  std::cout << (compare ? "compare" : "run") << ": " << n_ok << "/" << cells.size() << " cells ok, manifest "
            << (s.out / "manifest.json").string() << "\n";
  for (const auto& c : cells)
    if (!c.ok) std::cerr << "cell r" << c.rule_index << " s" << c.seed_index << ": " << c.error << "\n";
  return failed ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------------------
// bounds

std::string read_text(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(std::string("cannot open ") + what + " " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cmd_bounds(const Settings& s, const fs::path& trace_path, const fs::path& ref_path) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = load_config(s, false);
  if (cfg.bounds.empty()) throw ValidationError("config: 'bounds' must list at least one selection");

  ds_trace* t = nullptr;
  if (ds_trace_from_json(read_text(trace_path, "trace").c_str(), &t) != DS_OK)
    throw ValidationError(std::string("trace: ") + ds_last_error());
  Owned<ds_trace> trace(t);
  ds_reference* r = nullptr;
  if (ds_reference_from_json(read_text(ref_path, "reference").c_str(), &r) != DS_OK)
    throw ValidationError(std::string("reference: ") + ds_last_error());
  Owned<ds_reference> ref(r);

  char* meta_s = nullptr;
  check(ds_trace_meta_json(trace.get(), &meta_s), "trace");
  const json meta = json::parse(take(meta_s));
  const std::uint64_t seed = meta.value("seed", std::uint64_t{0});
  Owned<ds_objective> obj = make_objective(problem_for_seed(cfg.problem, seed));

  json m = manifest_base("bounds", s, cfg);
  m["trace"] = trace_path.string();
  m["reference"] = ref_path.string();
  json files = json::array();
  auto& jb = m["bounds"] = json::array();
  bool failed = false;
  fs::create_directories(s.out);
  for (std::size_t b = 0; b < cfg.bounds.size(); ++b) {
    const std::string label = bound_label(cfg.bounds[b]);
    json e{{"bound", label}};
    ds_bound* bound = nullptr;
    const int st = ds_bound_evaluate(obj.get(), trace.get(), ref.get(), cfg.bounds[b].dump().c_str(), &bound);
    if (st != DS_OK) {
      failed = true;
      e["error"] = std::string(ds_status_name(st)) + ": " + ds_last_error();
      std::cout << label << ": " << ds_status_name(st) << ": " << ds_last_error() << "\n";
      jb.push_back(e);
      continue;
    }
    Owned<ds_bound> owned(bound);
    ds_dominance d{};
    check(ds_bound_dominance(bound, 1e-9, &d), "bound");
    const std::string path = "bounds/b" + std::to_string(b) + "_" + label + ".csv";
    char* csv = nullptr;
    check(ds_bound_csv(bound, &csv), "bound");
    write_file(s.out / path, take(csv));
    files.push_back(path);
    e["csv"] = path;
    e["dominates"] = d.ok != 0;
    e["max_violation"] = num(d.max_violation);
    e["index"] = d.index;
    e["checked"] = d.checked;
    jb.push_back(e);
    std::printf("%s: max_violation=%.3e at k=%d over %d indices -> %s\n", label.c_str(), d.max_violation, d.index,
                d.checked, d.ok ? "dominates" : "VIOLATED");
  }
  m["files"] = files;
  m["wall_clock_s"] = seconds_since(t0);
  write_atomic(s.out / "manifest.json", m.dump(2) + "\n");
  return failed ? kExitRuntime : kExitOk;
}

// ---------------------------------------------------------------------------
// expsearch

struct ExpSearchFlags {
  std::optional<double> eta0;
  std::optional<double> eta0_scale;
  std::optional<int> K;
  std::optional<std::string> kind;
};

int cmd_expsearch(const Settings& s, const ExpSearchFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  const Config cfg = load_config(s, false);
  Owned<ds_objective> obj;
  try {
    obj = make_objective(problem_for_seed(cfg.problem, cfg.seeds.front()));
  } catch (const ApiError& e) {
    throw ValidationError(e.what());
  }

  json es = cfg.expsearch;
  if (flags.eta0 && flags.eta0_scale) throw ValidationError("expsearch: give exactly one of --eta0, --eta0-scale");
  if (flags.eta0) {
    es["eta0"] = *flags.eta0;
    es.erase("eta0_scale");
  }
  if (flags.eta0_scale) {
    es["eta0_scale"] = *flags.eta0_scale;
    es.erase("eta0");
  }
  if (flags.K) es["K"] = *flags.K;
  if (flags.kind) es["kind"] = *flags.kind;
  if (es.contains("eta0") == es.contains("eta0_scale"))
    throw ValidationError("expsearch: give exactly one of eta0, eta0_scale");
  if (!es.contains("K")) es["K"] = 200;
  if (es.contains("eta0_scale")) {
    double L = 0.0;
    const int st = ds_objective_smoothness_constant(obj.get(), &L);
    if (st != DS_OK) throw ValidationError(std::string("expsearch: eta0_scale needs L: ") + ds_last_error());
    es["eta0"] = es["eta0_scale"].get<double>() / L;
    es.erase("eta0_scale");
  }

  ds_expsearch* raw = nullptr;
  const int st = ds_expsearch_run(obj.get(), es.dump().c_str(), &raw);
  if (st == DS_PARSE_ERROR || st == DS_INVALID_ARGUMENT) throw ValidationError(std::string("expsearch: ") + ds_last_error());
  check(st, "expsearch");
  Owned<ds_expsearch> result(raw);

  char* sum = nullptr;
  check(ds_expsearch_summary(obj.get(), result.get(), &sum), "expsearch");
  json summary = json::parse(take(sum));
  summary["seed"] = cfg.seeds.front();

  fs::create_directories(s.out);
  json files = json::array();
  ds_trace* tr = nullptr;
  check(ds_expsearch_trace(result.get(), &tr), "expsearch");
  Owned<ds_trace> trace(tr);
  char* csv = nullptr;
  check(ds_trace_csv(trace.get(), &csv), "trace");
  write_file(s.out / "expsearch_trace.csv", take(csv));
  files.push_back("expsearch_trace.csv");

  bool failed = false;
  ds_reference* ref = nullptr;
  const int rst = ds_reference_compute(obj.get(), cfg.ref_tol, cfg.ref_max_iters, &ref);
  if (rst != DS_OK) {
    summary["bound"] = {{"error", std::string(ds_status_name(rst)) + ": " + ds_last_error()}};
    failed = true;
  } else {
    Owned<ds_reference> owned_ref(ref);
    ds_bound* bound = nullptr;
    const int bst = ds_expsearch_bound(obj.get(), result.get(), ref, &bound);
    if (bst != DS_OK) {
      summary["bound"] = {{"error", std::string(ds_status_name(bst)) + ": " + ds_last_error()}};
      failed = true;
    } else {
      Owned<ds_bound> owned(bound);
      std::size_t n = 0;
      check(ds_bound_length(bound, &n), "bound");
      std::vector<double> values(n);
      check(ds_bound_values(bound, values.data(), n), "bound");
      ds_dominance d{};
      check(ds_bound_dominance(bound, 1e-9, &d), "bound");
      summary["bound"] = {{"value", num(values.back())},
                          {"dominates", d.ok != 0},
                          {"max_violation", num(d.max_violation)}};
    }
  }
  write_file(s.out / "expsearch.json", summary.dump(2) + "\n");
  files.push_back("expsearch.json");

  json m = manifest_base("expsearch", s, cfg);
  m["files"] = files;
  m["wall_clock_s"] = seconds_since(t0);
  write_atomic(s.out / "manifest.json", m.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return failed ? kExitRuntime : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional-smoothness step sizes, optimizers and bounds"};
  app.require_subcommand(1);
  app.fallthrough();

  Settings s;
  std::uint64_t seed = 0;
  app.add_option("--config", s.config_path, "Experiment configuration (JSON)");
  app.add_option("--out", s.out, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Master seed; per-cell seeds are derived with splitmix64");
  app.add_option("--workers", s.workers, "Concurrent cells (default: hardware threads)")->check(CLI::NonNegativeNumber);
  app.add_flag("--paper-scale", s.paper_scale, "d=300, 20000 iterations, 20 seeds");

  auto* run = app.add_subcommand("run", "Run every (rule x seed) cell and write traces");
  auto* compare = app.add_subcommand("compare", "Run at least two rules and align their gaps");
  auto* bounds = app.add_subcommand("bounds", "Evaluate bounds on a saved trace");
  fs::path trace_path, ref_path;
  bounds->add_option("--trace", trace_path, "Trace JSON with iterates")->required();
  bounds->add_option("--reference", ref_path, "Reference solution JSON")->required();
  auto* expsearch = app.add_subcommand("expsearch", "Gradient descent with exponential search");
  ExpSearchFlags es;
  expsearch->add_option("--eta0", es.eta0, "Initial step size");
  expsearch->add_option("--eta0-scale", es.eta0_scale, "Initial step size as a multiple of 1/L");
  expsearch->add_option("--K", es.K, "Horizon")->check(CLI::PositiveNumber);
  expsearch->add_option("--kind", es.kind, "Smoothness used for the inner criterion (D or A)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (seed_opt->count() > 0) s.seed = seed;

  try {
    if (run->parsed()) return cmd_experiments(s, false);
    if (compare->parsed()) return cmd_experiments(s, true);
    if (bounds->parsed()) return cmd_bounds(s, trace_path, ref_path);
    if (expsearch->parsed()) return cmd_expsearch(s, es);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
