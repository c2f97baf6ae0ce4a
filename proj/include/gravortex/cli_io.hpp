#pragma once

// Run configuration, dispatch and result serialization for the command-line
// tool. A configuration is a JSON document; parsing rejects unknown keys and
// reports the offending field path, and serialization writes every field,
// defaults included, so that the echoed configuration in a result record is
// enough to re-run it.
//
// Physical normalization: both model surfaces have area 2*pi, so the
// Bradlow bound reads N < tau/2, and |phi|_0^2 is scaled to maximum 1.

#include "bundle.hpp"
#include "equations.hpp"
#include "geometry.hpp"
#include "solvers.hpp"
#include "stability.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#ifndef GRAVORTEX_VERSION
#define GRAVORTEX_VERSION "0.1.0"
#endif

namespace gravortex {

using json = nlohmann::json;

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolverFailure = 2;

/// An invalid configuration, with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error((path.empty() ? std::string("config") : path) + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class Command { Classify, SolveVortex, SolveGravitating, SolveEB, SweepAlpha, Triple, Oracle };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::Classify: return "classify";
    case Command::SolveVortex: return "solve_vortex";
    case Command::SolveGravitating: return "solve_gravitating";
    case Command::SolveEB: return "solve_eb";
    case Command::SweepAlpha: return "sweep_alpha";
    case Command::Triple: return "triple";
    case Command::Oracle: return "oracle";
  }
  return "?";
}

inline std::optional<Command> command_from_string(const std::string& s) {
  for (Command c : {Command::Classify, Command::SolveVortex, Command::SolveGravitating, Command::SolveEB,
                    Command::SweepAlpha, Command::Triple, Command::Oracle})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

/// One divisor point. The location may be omitted for commands that only
/// look at multiplicities (classify, oracle).
struct DivisorEntry {
  std::optional<ChartPoint> point;
  int multiplicity = 1;
  friend bool operator==(const DivisorEntry&, const DivisorEntry&) = default;
};

/// Used when a configuration names the model but not the resolution.
inline int default_resolution(Model m) { return m == Model::Sphere ? 48 : 64; }

struct SurfaceConfig {
  Model model = Model::Torus;
  int resolution = 64;  // torus: nodes per axis; sphere: maximal harmonic degree
  friend bool operator==(const SurfaceConfig&, const SurfaceConfig&) = default;
};

struct ContinuationConfig {
  int steps = 5;
  int max_step_halvings = 10;
  friend bool operator==(const ContinuationConfig&, const ContinuationConfig&) = default;
};

struct SweepConfig {
  std::vector<Rational> alphas;
  /// With warm starts each alpha continues from the previous solution;
  /// without, each alpha is solved by its own continuation from 0.
  bool warm_start = true;
  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct TripleConfig {
  TripleInvariants triple;
  Rational sigma{0};
  std::optional<TripleInvariants> subtriple;
  bool strict = true;

  friend bool operator==(const TripleConfig& a, const TripleConfig& b) {
    auto same = [](const TripleInvariants& x, const TripleInvariants& y) {
      return x.n1 == y.n1 && x.n2 == y.n2 && x.d1 == y.d1 && x.d2 == y.d2;
    };
    if (a.subtriple.has_value() != b.subtriple.has_value()) return false;
    if (a.subtriple && !same(*a.subtriple, *b.subtriple)) return false;
    return same(a.triple, b.triple) && a.sigma == b.sigma && a.strict == b.strict;
  }
};

struct OutputConfig {
  std::string field_csv;  // empty: no field dump
  std::string summary_csv = "sweep_summary.csv";
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct RunConfig {
  Command command = Command::Classify;
  SurfaceConfig surface;
  int genus = 1;  // defaults to the genus of surface.model when not given
  std::vector<DivisorEntry> divisor;
  std::optional<Rational> tau;
  Rational alpha{0};
  ContinuationConfig continuation;
  SweepConfig sweep;
  SolverConfig solver;
  TripleConfig triple;
  OutputConfig output;

  std::vector<int> multiplicities() const {
    std::vector<int> m;
    for (const auto& d : divisor) m.push_back(d.multiplicity);
    return m;
  }
  int degree() const {
    int n = 0;
    for (const auto& d : divisor) n += d.multiplicity;
    return n;
  }
};

inline bool operator==(const SolverConfig& a, const SolverConfig& b) {
  return a.newton_tol == b.newton_tol && a.max_newton_iters == b.max_newton_iters && a.damping == b.damping &&
         a.linear_tol == b.linear_tol && a.divergence_norm == b.divergence_norm;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.command == b.command && a.surface == b.surface && a.genus == b.genus && a.divisor == b.divisor &&
         a.tau == b.tau && a.alpha == b.alpha && a.continuation == b.continuation && a.sweep == b.sweep &&
         a.solver == b.solver && a.triple == b.triple && a.output == b.output;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}
inline std::string join_path(const std::string& base, std::size_t index) {
  return base + "[" + std::to_string(index) + "]";
}

inline void reject_unknown(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(join_path(path, key), "unknown key");
}

inline const json* member(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ConfigError(path, "integer out of range");
  return static_cast<int>(x);
}

inline double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

inline bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

inline std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

/// Accepts "p/q", decimal strings and JSON numbers. Numbers are read through
/// their shortest decimal form, so 0.01 means exactly 1/100.
inline Rational get_rational(const json& v, const std::string& path) {
  std::string text;
  if (v.is_string())
    text = v.get<std::string>();
  else if (v.is_number())
    text = v.dump();
  else
    throw ConfigError(path, "expected a rational (\"p/q\", decimal string or number)");
  try {
    return parse_rational(text);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

inline TripleInvariants get_triple(const json& v, const std::string& path) {
  reject_unknown(v, path, {"n1", "n2", "d1", "d2"});
  TripleInvariants t;
  for (const char* k : {"n1", "n2", "d1", "d2"})
    if (!member(v, k)) throw ConfigError(join_path(path, k), "missing");
  t.n1 = get_int(v["n1"], join_path(path, "n1"));
  t.n2 = get_int(v["n2"], join_path(path, "n2"));
  t.d1 = get_int(v["d1"], join_path(path, "d1"));
  t.d2 = get_int(v["d2"], join_path(path, "d2"));
  return t;
}

inline json triple_json(const TripleInvariants& t) {
  return {{"n1", t.n1}, {"n2", t.n2}, {"d1", t.d1}, {"d2", t.d2}};
}

inline Model get_model(const json& v, const std::string& path) {
  const auto s = get_string(v, path);
  if (s == "sphere") return Model::Sphere;
  if (s == "torus") return Model::Torus;
  throw ConfigError(path, "expected \"sphere\" or \"torus\", got \"" + s + "\"");
}

inline Damping get_damping(const json& v, const std::string& path) {
  const auto s = get_string(v, path);
  if (s == "backtracking") return Damping::Backtracking;
  if (s == "none") return Damping::None;
  throw ConfigError(path, "expected \"backtracking\" or \"none\"");
}

inline std::vector<DivisorEntry> get_divisor(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected a list of points");
  std::vector<DivisorEntry> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto p = join_path(path, i);
    const json& e = v[i];
    reject_unknown(e, p, {"x", "y", "point", "multiplicity"});
    DivisorEntry d;
    if (!member(e, "multiplicity")) throw ConfigError(join_path(p, "multiplicity"), "missing");
    d.multiplicity = get_int(e["multiplicity"], join_path(p, "multiplicity"));
    if (d.multiplicity < 1) throw ConfigError(join_path(p, "multiplicity"), "must be a positive integer");
    const bool has_x = member(e, "x"), has_y = member(e, "y"), has_point = member(e, "point");
    if (has_point) {
      if (has_x || has_y) throw ConfigError(p, "give either x and y or point, not both");
      if (get_string(e["point"], join_path(p, "point")) != "inf")
        throw ConfigError(join_path(p, "point"), "the only named point is \"inf\"");
      d.point = ChartPoint::at_infinity();
    } else if (has_x || has_y) {
      if (!has_x || !has_y) throw ConfigError(p, "x and y must be given together");
      d.point = ChartPoint{get_double(e["x"], join_path(p, "x")), get_double(e["y"], join_path(p, "y")), false};
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  reject_unknown(j, "", {"command", "surface", "genus", "divisor", "tau", "alpha", "continuation", "sweep",
                         "solver", "triple", "output"});
  RunConfig c;
  const json* cmd = member(j, "command");
  if (!cmd) throw ConfigError("command", "missing");
  const auto name = get_string(*cmd, "command");
  const auto parsed = command_from_string(name);
  if (!parsed) throw ConfigError("command", "unknown command \"" + name + "\"");
  c.command = *parsed;

  if (const json* s = member(j, "surface")) {
    reject_unknown(*s, "surface", {"model", "resolution"});
    if (const json* m = member(*s, "model")) c.surface.model = get_model(*m, "surface.model");
    if (const json* r = member(*s, "resolution"))
      c.surface.resolution = get_int(*r, "surface.resolution");
    else
      c.surface.resolution = default_resolution(c.surface.model);
  }
  c.genus = c.surface.model == Model::Sphere ? 0 : 1;
  if (const json* g = member(j, "genus")) {
    c.genus = get_int(*g, "genus");
    if (c.genus < 0) throw ConfigError("genus", "must be >= 0");
  }
  if (const json* d = member(j, "divisor")) c.divisor = get_divisor(*d, "divisor");
  if (const json* t = member(j, "tau"); t && !t->is_null()) {
    c.tau = get_rational(*t, "tau");
    if (*c.tau <= kZero) throw ConfigError("tau", "must be positive");
  }
  if (const json* a = member(j, "alpha")) c.alpha = get_rational(*a, "alpha");

  if (const json* s = member(j, "continuation")) {
    reject_unknown(*s, "continuation", {"steps", "max_step_halvings"});
    if (const json* v = member(*s, "steps")) c.continuation.steps = get_int(*v, "continuation.steps");
    if (const json* v = member(*s, "max_step_halvings"))
      c.continuation.max_step_halvings = get_int(*v, "continuation.max_step_halvings");
    if (c.continuation.steps < 1) throw ConfigError("continuation.steps", "must be >= 1");
    if (c.continuation.max_step_halvings < 0)
      throw ConfigError("continuation.max_step_halvings", "must be >= 0");
  }

  if (const json* s = member(j, "sweep")) {
    reject_unknown(*s, "sweep", {"alphas", "alpha_max", "steps", "warm_start"});
    const json* list = member(*s, "alphas");
    const json* amax = member(*s, "alpha_max");
    const json* steps = member(*s, "steps");
    if (list && (amax || steps)) throw ConfigError("sweep", "give either alphas or alpha_max with steps");
    if (list) {
      if (!list->is_array()) throw ConfigError("sweep.alphas", "expected a list");
      for (std::size_t i = 0; i < list->size(); ++i)
        c.sweep.alphas.push_back(get_rational((*list)[i], join_path("sweep.alphas", i)));
    } else if (amax || steps) {
      if (!amax) throw ConfigError("sweep.alpha_max", "missing");
      if (!steps) throw ConfigError("sweep.steps", "missing");
      const Rational top = get_rational(*amax, "sweep.alpha_max");
      const int n = get_int(*steps, "sweep.steps");
      if (n < 1) throw ConfigError("sweep.steps", "must be >= 1");
      for (int k = 0; k <= n; ++k) c.sweep.alphas.push_back(top * Rational(k, n));
    }
    if (const json* w = member(*s, "warm_start")) c.sweep.warm_start = get_bool(*w, "sweep.warm_start");
  }

  if (const json* s = member(j, "solver")) {
    reject_unknown(*s, "solver", {"newton_tol", "max_newton_iters", "damping", "linear_tol", "divergence_norm"});
    if (const json* v = member(*s, "newton_tol")) c.solver.newton_tol = get_double(*v, "solver.newton_tol");
    if (const json* v = member(*s, "max_newton_iters"))
      c.solver.max_newton_iters = get_int(*v, "solver.max_newton_iters");
    if (const json* v = member(*s, "damping")) c.solver.damping = get_damping(*v, "solver.damping");
    if (const json* v = member(*s, "linear_tol")) c.solver.linear_tol = get_double(*v, "solver.linear_tol");
    if (const json* v = member(*s, "divergence_norm"))
      c.solver.divergence_norm = get_double(*v, "solver.divergence_norm");
    try {
      c.solver.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("solver", e.what());
    }
  }

  if (const json* s = member(j, "triple")) {
    reject_unknown(*s, "triple", {"n1", "n2", "d1", "d2", "sigma", "subtriple", "strict"});
    json base = json::object();
    for (const char* k : {"n1", "n2", "d1", "d2"})
      if (const json* v = member(*s, k)) base[k] = *v;
    if (!base.empty()) c.triple.triple = get_triple(base, "triple");
    if (const json* v = member(*s, "sigma")) c.triple.sigma = get_rational(*v, "triple.sigma");
    if (const json* v = member(*s, "subtriple"); v && !v->is_null())
      c.triple.subtriple = get_triple(*v, "triple.subtriple");
    if (const json* v = member(*s, "strict")) c.triple.strict = get_bool(*v, "triple.strict");
  }

  if (const json* s = member(j, "output")) {
    reject_unknown(*s, "output", {"field_csv", "summary_csv"});
    if (const json* v = member(*s, "field_csv")) c.output.field_csv = get_string(*v, "output.field_csv");
    if (const json* v = member(*s, "summary_csv")) c.output.summary_csv = get_string(*v, "output.summary_csv");
  }
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const RunConfig& c) {
  json divisor = json::array();
  for (const auto& d : c.divisor) {
    json e = {{"multiplicity", d.multiplicity}};
    if (d.point && d.point->infinity)
      e["point"] = "inf";
    else if (d.point) {
      e["x"] = d.point->x;
      e["y"] = d.point->y;
    }
    divisor.push_back(e);
  }
  json alphas = json::array();
  for (const auto& a : c.sweep.alphas) alphas.push_back(to_string(a));
  return {
      {"command", to_string(c.command)},
      {"surface", {{"model", to_string(c.surface.model)}, {"resolution", c.surface.resolution}}},
      {"genus", c.genus},
      {"divisor", divisor},
      {"tau", c.tau ? json(to_string(*c.tau)) : json(nullptr)},
      {"alpha", to_string(c.alpha)},
      {"continuation", {{"steps", c.continuation.steps}, {"max_step_halvings", c.continuation.max_step_halvings}}},
      {"sweep", {{"alphas", alphas}, {"warm_start", c.sweep.warm_start}}},
      {"solver",
       {{"newton_tol", c.solver.newton_tol},
        {"max_newton_iters", c.solver.max_newton_iters},
        {"damping", c.solver.damping == Damping::Backtracking ? "backtracking" : "none"},
        {"linear_tol", c.solver.linear_tol},
        {"divergence_norm", c.solver.divergence_norm}}},
      {"triple",
       {{"n1", c.triple.triple.n1},
        {"n2", c.triple.triple.n2},
        {"d1", c.triple.triple.d1},
        {"d2", c.triple.triple.d2},
        {"sigma", to_string(c.triple.sigma)},
        {"subtriple", c.triple.subtriple ? detail::triple_json(*c.triple.subtriple) : json(nullptr)},
        {"strict", c.triple.strict}}},
      {"output", {{"field_csv", c.output.field_csv}, {"summary_csv", c.output.summary_csv}}},
  };
}

inline json to_json(const IdentityReport& r) {
  return {{"degree_identity", r.degree_identity},
          {"volume_identity", r.volume_identity},
          {"gauss_bonnet", r.gauss_bonnet},
          {"min_density", r.min_density}};
}

inline json to_json(const SolveReport& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"final_residual", r.final_residual},
          {"alpha_reached", r.alpha_reached},
          {"failure_reason", r.failure_reason ? json(to_string(*r.failure_reason)) : json(nullptr)},
          {"bradlow_satisfied", r.bradlow_satisfied},
          {"residual_history", r.residual_history}};
}

// ---------------------------------------------------------------------------
// Running

/// One JSON result record and the process exit code it implies.
struct ResultRecord {
  json record;
  int exit_code = kExitSuccess;

  /// Compact single-line JSON.
  std::string dump() const { return record.dump(); }
};

/// Writes x, y, f, v, density = e^{2f}|phi|_0^2 and the scalar curvature S
/// of the solution metric at every node. Torus rows use the unit-cell
/// coordinates; sphere rows use colatitude and longitude.
inline void write_field_csv(const std::string& path, const FieldState& s) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  const auto& grid = s.spec.grid;
  ScalarField curvature(grid, grid.base_scalar_curvature());
  try {
    curvature = scalar_curvature(grid, metric_exponent(s));
  } catch (const std::invalid_argument&) {
    curvature = ScalarField(grid, std::numeric_limits<double>::quiet_NaN());
  }
  out << "x,y,f,v,density,S\n" << std::setprecision(17);
  const auto rows = grid.row_coords(), cols = grid.col_coords();
  std::size_t k = 0;
  for (double x : rows)
    for (double y : cols) {
      const double density = std::exp(2.0 * s.f[k]) * s.spec.section.norm_sq[k];
      out << x << ',' << y << ',' << s.f[k] << ',' << s.v[k] << ',' << density << ',' << curvature[k] << '\n';
      ++k;
    }
}

namespace detail {

inline const Rational& require_tau(const RunConfig& c) {
  if (!c.tau) throw ConfigError("tau", "missing");
  return *c.tau;
}

inline void require_divisor(const RunConfig& c, bool located) {
  if (c.divisor.empty()) throw ConfigError("divisor", "needs at least one point");
  if (!located) return;
  for (std::size_t i = 0; i < c.divisor.size(); ++i)
    if (!c.divisor[i].point) throw ConfigError(join_path("divisor", i), "this command needs x and y (or point)");
}

inline Divisor build_divisor(const RunConfig& c) {
  std::vector<DivisorPoint> pts;
  for (const auto& d : c.divisor) pts.push_back({*d.point, d.multiplicity});
  try {
    return Divisor(std::move(pts));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("divisor", e.what());
  }
}

struct Problem {
  SurfaceGrid grid;
  SectionData section;
  double tau = 0.0;
};

inline Problem build_problem(const RunConfig& c) {
  require_divisor(c, true);
  Problem p;
  p.tau = to_double(require_tau(c));
  try {
    p.grid = build_grid(c.surface.model, c.surface.resolution);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("surface.resolution", e.what());
  }
  const Divisor d = build_divisor(c);
  try {
    p.section = section_norm_sq(p.grid, d);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("divisor", e.what());
  }
  return p;
}

inline json base_record(const RunConfig& c) {
  return {{"version", GRAVORTEX_VERSION},
          {"command", to_string(c.command)},
          {"config", to_json(c)},
          {"grid_checksum", nullptr},
          {"identity_report", nullptr},
          {"wall_time_s", 0.0}};
}

inline json solve_result(const FieldState& s, const SolveReport& r) {
  json out = to_json(r);
  out["kind"] = to_string(s.spec.kind);
  out["alpha"] = s.spec.alpha;
  out["c"] = s.spec.c;
  out["c_prime"] = s.spec.c_prime;
  json direct = nullptr;
  if (r.converged && s.spec.kind != EquationKind::Vortex) {
    try {
      direct = direct_gve_residual(s).max_abs();
    } catch (const std::invalid_argument&) {
    }
  }
  out["direct_residual"] = direct;
  return out;
}

inline ResultRecord finish_solve(const RunConfig& c, const SurfaceGrid& grid, const FieldState& s,
                                 const SolveReport& r) {
  ResultRecord rec{base_record(c), r.converged ? kExitSuccess : kExitSolverFailure};
  rec.record["grid_checksum"] = grid.checksum();
  rec.record["result"] = solve_result(s, r);
  rec.record["identity_report"] = to_json(r.identity_report);
  if (!c.output.field_csv.empty()) write_field_csv(c.output.field_csv, s);
  return rec;
}

inline ResultRecord run_classify(const RunConfig& c) {
  require_divisor(c, false);
  const auto cls = classify_divisor(c.multiplicities());
  ResultRecord rec{base_record(c)};
  rec.record["result"] = {{"verdict", to_string(cls.verdict)},
                          {"witness", cls.witness},
                          {"degree", c.degree()},
                          {"multiplicities", c.multiplicities()}};
  return rec;
}

inline ResultRecord run_oracle(const RunConfig& c) {
  require_divisor(c, false);
  const Rational& tau = require_tau(c);
  const auto v = existence_oracle(c.genus, c.multiplicities(), tau, c.alpha);
  const int n = c.degree();
  ResultRecord rec{base_record(c)};
  json star = nullptr;
  if (c.genus >= 2 && bradlow_check(n, tau)) star = to_string(alpha_star(c.genus, tau, n));
  rec.record["result"] = {
      {"verdict", to_string(v.verdict)},
      {"theorem_tag", v.theorem_tag.empty() ? json(nullptr) : json(v.theorem_tag)},
      {"divisor_class", to_string(classify_divisor(c.multiplicities()).verdict)},
      {"bradlow", bradlow_check(n, tau)},
      {"topological_constant", to_string(topological_constant(2 - 2 * c.genus, c.alpha, tau, n))},
      {"eb_coupling", to_string(eb_coupling(tau, n))},
      {"alpha_star", star}};
  return rec;
}

inline ResultRecord run_triple(const RunConfig& c) {
  const auto& t = c.triple;
  try {
    validate_triple(t.triple);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("triple", e.what());
  }
  const auto slope = sigma_slope(t.triple, t.sigma);
  const auto range = sigma_range(t.triple);
  json destab = nullptr;
  if (t.subtriple) {
    try {
      destab = destabilizes(t.triple, *t.subtriple, t.sigma, t.strict);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("triple.subtriple", e.what());
    }
  }
  ResultRecord rec{base_record(c)};
  rec.record["result"] = {{"sigma_degree", to_string(slope.degree)},
                          {"sigma_slope", to_string(slope.slope)},
                          {"sigma_m", to_string(range.sigma_m)},
                          {"sigma_max", range.sigma_max ? json(to_string(*range.sigma_max)) : json(nullptr)},
                          {"admits_sigma", range.admits(t.sigma)},
                          {"destabilizes", destab}};
  return rec;
}

inline ResultRecord run_solve(const RunConfig& c) {
  const Problem p = build_problem(c);
  switch (c.command) {
    case Command::SolveVortex: {
      auto [s, r] = solve_vortex(p.grid, p.section, p.tau, c.solver);
      return finish_solve(c, p.grid, s, r);
    }
    case Command::SolveEB: {
      if (c.surface.model != Model::Sphere)
        throw ConfigError("surface.model", "the Einstein-Bogomol'nyi equations need the sphere");
      const Rational coupling = eb_coupling(require_tau(c), c.degree());
      if (c.alpha != kZero && c.alpha != coupling)
        throw ConfigError("alpha", "must be 0 (implied) or 1/(tau N) = " + to_string(coupling));
      auto [s, r] = solve_eb(p.grid, p.section, p.tau, c.solver);
      return finish_solve(c, p.grid, s, r);
    }
    case Command::SolveGravitating: {
      if (c.alpha < kZero) throw ConfigError("alpha", "must be >= 0");
      const auto schedule = ContinuationSchedule::uniform(to_double(c.alpha), c.continuation.steps);
      auto sch = schedule;
      sch.max_step_halvings = c.continuation.max_step_halvings;
      auto [s, r] = solve_gravitating(p.grid, p.section, p.tau, to_double(c.alpha), sch, c.solver);
      return finish_solve(c, p.grid, s, r);
    }
    default: break;
  }
  throw std::logic_error("run_solve: not a solve command");
}

inline void validate_sweep(const RunConfig& c) {
  const auto& a = c.sweep.alphas;
  if (a.empty()) throw ConfigError("sweep.alphas", "empty alpha list");
  if (a.front() != kZero) throw ConfigError("sweep.alphas[0]", "the first alpha must be 0");
  for (std::size_t i = 1; i < a.size(); ++i)
    if (!(a[i] > a[i - 1])) throw ConfigError(join_path("sweep.alphas", i), "alphas must increase strictly");
}

}  // namespace detail

inline std::string sweep_summary_csv(const std::vector<ResultRecord>& records) {
  std::ostringstream os;
  os << "alpha,converged,final_residual,min_density,gauss_bonnet\n" << std::setprecision(17);
  for (const auto& r : records) {
    const auto& res = r.record["result"];
    const auto& id = r.record["identity_report"];
    os << res["sweep_alpha"].get<std::string>() << ',' << (res["converged"].get<bool>() ? "true" : "false")
       << ',' << res["final_residual"].get<double>() << ',' << id["min_density"].get<double>() << ','
       << id["gauss_bonnet"].get<double>() << '\n';
  }
  return os.str();
}

/// One record per alpha of a Gravitating sweep, stopping after the first
/// failure. The summary CSV is written to config.output.summary_csv when it
/// is not empty.
inline std::vector<ResultRecord> sweep_alpha(const RunConfig& c) {
  if (c.command != Command::SweepAlpha) throw ConfigError("command", "expected sweep_alpha");
  detail::validate_sweep(c);
  const auto p = detail::build_problem(c);
  std::vector<ResultRecord> out;

  auto record = [&](const Rational& alpha, const FieldState& s, const SolveReport& r) {
    ResultRecord rec{detail::base_record(c), r.converged ? kExitSuccess : kExitSolverFailure};
    rec.record["grid_checksum"] = p.grid.checksum();
    rec.record["result"] = detail::solve_result(s, r);
    rec.record["result"]["sweep_alpha"] = to_string(alpha);
    rec.record["identity_report"] = to_json(r.identity_report);
    out.push_back(std::move(rec));
  };

  if (c.sweep.warm_start) {
    auto [vortex, vrep] = solve_vortex(p.grid, p.section, p.tau, c.solver);
    FieldState state = FieldState::zero(ProblemSpec::gravitating(p.section, p.tau, 0.0));
    state.f = vortex.f;
    vrep.identity_report = identity_report(state);
    record(c.sweep.alphas.front(), state, vrep);
    if (vrep.converged)
      for (std::size_t k = 1; k < c.sweep.alphas.size(); ++k) {
        const auto r =
            continue_to_alpha(state, to_double(c.sweep.alphas[k]), c.continuation.max_step_halvings, c.solver);
        record(c.sweep.alphas[k], state, r);
        if (!r.converged) break;
      }
  } else {
    for (const auto& alpha : c.sweep.alphas) {
      auto sch = ContinuationSchedule::uniform(to_double(alpha), c.continuation.steps);
      sch.max_step_halvings = c.continuation.max_step_halvings;
      auto [s, r] = solve_gravitating(p.grid, p.section, p.tau, to_double(alpha), sch, c.solver);
      record(alpha, s, r);
      if (!r.converged) break;
    }
  }
  if (!c.output.summary_csv.empty()) {
    std::ofstream f(c.output.summary_csv);
    if (!f) throw std::runtime_error("cannot open " + c.output.summary_csv + " for writing");
    f << sweep_summary_csv(out);
  }
  return out;
}

/// Dispatches the configured command. Sweeps return a summary record
/// listing the per-alpha results and the largest converged alpha; a sweep
/// counts as a solver failure only when its alpha = 0 anchor fails.
inline ResultRecord run(const RunConfig& c) {
  const auto start = std::chrono::steady_clock::now();
  ResultRecord rec;
  switch (c.command) {
    case Command::Classify: rec = detail::run_classify(c); break;
    case Command::Oracle: rec = detail::run_oracle(c); break;
    case Command::Triple: rec = detail::run_triple(c); break;
    case Command::SolveVortex:
    case Command::SolveEB:
    case Command::SolveGravitating: rec = detail::run_solve(c); break;
    case Command::SweepAlpha: {
      const auto points = sweep_alpha(c);
      rec.record = detail::base_record(c);
      rec.record["grid_checksum"] = points.front().record["grid_checksum"];
      json list = json::array();
      json frontier = nullptr;
      for (const auto& pt : points) {
        list.push_back(pt.record["result"]);
        if (pt.record["result"]["converged"].get<bool>()) frontier = pt.record["result"]["sweep_alpha"];
      }
      rec.record["result"] = {{"points", list}, {"frontier_alpha", frontier}};
      rec.record["identity_report"] = points.back().record["identity_report"];
      rec.exit_code = points.front().exit_code;
      break;
    }
  }
  rec.record["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Sets a value at a dotted path ("solver.newton_tol", "divisor.0.x") in a
/// configuration document. The value is read as JSON when it parses and as
/// a string otherwise, so `tau=5/2` and `surface.model=sphere` both work.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("", "override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::string path;
  std::size_t pos = 0;
  while (true) {
    const auto dot = key.find('.', pos);
    const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) throw ConfigError(key, "empty path segment");
    const bool index = std::all_of(part.begin(), part.end(), [](char ch) { return ch >= '0' && ch <= '9'; });
    json* next = nullptr;
    if (index && node->is_null()) *node = json::array();
    if (index && node->is_array()) {
      const auto i = std::stoul(part);
      if (i > node->size()) throw ConfigError(detail::join_path(path, i), "index past the end of the list");
      if (i == node->size()) node->push_back(json::object());
      next = &(*node)[i];
      path = detail::join_path(path, i);
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError(path, "cannot set a key inside a non-object");
      next = &(*node)[part];
      path = detail::join_path(path, part);
    }
    node = next;
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  *node = value;
}

}  // namespace gravortex
