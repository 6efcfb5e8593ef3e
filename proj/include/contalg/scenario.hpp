#pragma once

// Scenario configuration: a JSON document declaring an algebroid, a
// Lagrangian or Hamiltonian, an initial state and optional integrator,
// check, Legendre and Hamilton-Jacobi blocks. Errors name the offending
// field path.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "contalg/algebroid.hpp"
#include "contalg/expr.hpp"
#include "contalg/hamilton_jacobi.hpp"
#include "contalg/hamiltonian.hpp"
#include "contalg/lagrangian.hpp"

namespace contalg {

using json = nlohmann::json;

struct CheckSpec {
  std::string name;
  double tolerance = 0.0;
};

struct IntegratorSpec {
  std::string method = "rk4";  // rk4 | adaptive
  double h = 1e-3;
  double tol = 1e-10;
  double t_end = 1.0;
  int sample_every = 1;
};

struct SamplingSpec {
  int samples = 50;
  double radius = 1.0;
};

struct LegendreSpec {
  double t_end = 5.0;
  double h = 1e-3;
  int sample_every = 1;
  double tolerance = 1e-6;
};

struct ProjectedSpec {
  Vector q0;
  double t_end = 3.0;
  double h = 1e-3;
  int sample_every = 1;
  double tolerance = 1e-6;
};

struct HJSpec {
  std::optional<std::string> f;               // 1-jet specification
  std::vector<std::string> gamma_0;           // explicit specification
  std::optional<std::string> gamma_s;
  std::map<std::string, double> parameters;
  HJSection section = HJSection::hamiltonian;
  double level = 0.0;
  double lo = -1.0;
  double hi = 1.0;
  int points = 100;
  double tolerance = 1e-10;
  std::optional<ProjectedSpec> projected;
};

struct Scenario {
  std::string name;
  std::optional<AlgebroidModel> model;
  Side side = Side::lagrangian;
  std::string expression;
  std::map<std::string, double> parameters;
  ScalarField field;
  State initial;
  std::optional<IntegratorSpec> integrator;
  std::vector<CheckSpec> checks;
  std::uint64_t seed = 1;
  SamplingSpec sampling;
  std::optional<LegendreSpec> legendre;
  std::optional<HJSpec> hj;

  const AlgebroidModel& algebroid() const { return *model; }
  ContactLagrangianSystem lagrangian_system() const {
    if (side != Side::lagrangian) throw ConfigError("system.side: a Lagrangian system is required here");
    return ContactLagrangianSystem(*model, field);
  }
  ContactHamiltonianSystem hamiltonian_system() const {
    if (side != Side::hamiltonian) throw ConfigError("system.side: a Hamiltonian system is required here");
    return ContactHamiltonianSystem(*model, field);
  }

  /// Tolerance for a named check, or `fallback` if the config does not set one.
  double tolerance(const std::string& name, double fallback) const {
    for (const auto& c : checks) {
      if (c.name == name) return c.tolerance;
    }
    return fallback;
  }
};

namespace detail {

/// A JSON node together with its path, for error messages.
class Node {
public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Node at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) throw ConfigError(child_path(key) + ": missing");
    return Node((*j_)[key], child_path(key));
  }

  Node at(std::size_t i) const {
    if (!j_->is_array() || i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
    return Node((*j_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  int integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<int>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  Vector vector(int expected) const {
    const std::size_t n = size();
    if (static_cast<int>(n) != expected) {
      fail("expected " + std::to_string(expected) + " entries, got " + std::to_string(n));
    }
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = at(i).number();
    return v;
  }

  double number_or(const char* key, double fallback) const { return has(key) ? at(key).number() : fallback; }
  int integer_or(const char* key, int fallback) const { return has(key) ? at(key).integer() : fallback; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_ + ": " + what); }

private:
  std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* j_;
  std::string path_;
};

inline std::map<std::string, double> read_parameters(const Node& node) {
  std::map<std::string, double> out;
  if (!node.raw().is_object()) node.fail("expected an object of name: number");
  for (auto it = node.raw().begin(); it != node.raw().end(); ++it) {
    out[it.key()] = Node(it.value(), node.path() + "." + it.key()).number();
  }
  return out;
}

/// Wraps expression errors with the config path of the offending string.
template <typename F>
auto with_path(const Node& node, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(node.path() + ": " + e.message(), e.offset());
  } catch (const ConfigError&) {
    throw;
  } catch (const DimensionError& e) {
    throw ConfigError(node.path() + ": " + e.what());
  }
}

inline ScalarField base_expr(const Node& node, int n, const std::map<std::string, double>& params = {}) {
  return with_path(node, [&] { return expr::base_field(node.string(), n, params); });
}

/// "so3" or a list of [c, a, b, value] entries with 1-based indices.
inline StructureTensor read_constants(const Node& node, std::optional<int> rank) {
  if (node.raw().is_string()) {
    if (node.string() != "so3") node.fail("unknown structure constants '" + node.string() + "'");
    return so3_constants();
  }
  if (!rank) node.fail("explicit structure constants need a 'rank' entry alongside");
  StructureTensor c(*rank);
  for (std::size_t k = 0; k < node.size(); ++k) {
    const Node e = node.at(k);
    if (e.size() != 4) e.fail("expected [c, a, b, value]");
    const int g = e.at(std::size_t{0}).integer() - 1;
    const int a = e.at(std::size_t{1}).integer() - 1;
    const int b = e.at(std::size_t{2}).integer() - 1;
    for (int idx : {g, a, b}) {
      if (idx < 0 || idx >= *rank) e.fail("index out of range 1.." + std::to_string(*rank));
    }
    if (a == b) e.fail("a and b must differ");
    c.set(g, a, b, e.at(std::size_t{3}).number());
  }
  return c;
}

inline std::vector<std::vector<ScalarField>> read_field_table(const Node& node, int rows, int cols, int n,
                                                              const std::map<std::string, double>& params) {
  if (static_cast<int>(node.size()) != rows) node.fail("expected " + std::to_string(rows) + " rows");
  std::vector<std::vector<ScalarField>> out;
  for (int r = 0; r < rows; ++r) {
    const Node row = node.at(static_cast<std::size_t>(r));
    if (static_cast<int>(row.size()) != cols) row.fail("expected " + std::to_string(cols) + " entries");
    std::vector<ScalarField> fields;
    for (int c = 0; c < cols; ++c) fields.push_back(base_expr(row.at(static_cast<std::size_t>(c)), n, params));
    out.push_back(std::move(fields));
  }
  return out;
}

inline AlgebroidModel read_algebroid(const Node& node, bool validated) {
  ValidationOptions opt;
  opt.enabled = validated;
  const std::string kind = node.at("kind").string();
  const auto params = node.has("parameters") ? read_parameters(node.at("parameters")) : std::map<std::string, double>{};
  auto rank = [&]() -> std::optional<int> {
    if (node.has("rank")) return node.at("rank").integer();
    return std::nullopt;
  };

  try {
    if (kind == "tangent_bundle") {
      const int n = node.at("n").integer();
      if (n < 1) node.at("n").fail("must be >= 1");
      return tangent_bundle(n);
    }
    if (kind == "lie_algebra") {
      return lie_algebra(read_constants(node.at("constants"), rank()), node.at("constants").raw().is_string()
                                                                           ? node.at("constants").string()
                                                                           : "lie_algebra",
                         opt);
    }
    if (kind == "action_so3_on_r3") return action_so3_on_r3();
    if (kind == "action_algebroid") {
      const StructureTensor c = read_constants(node.at("constants"), rank());
      const int n = node.at("n").integer();
      return action_algebroid(n, c, read_field_table(node.at("generators"), c.rank(), n, n, params),
                              "action_algebroid", opt);
    }
    if (kind == "atiyah_trivial") {
      const StructureTensor c = read_constants(node.at("constants"), rank());
      const int k = node.at("k").integer();
      return atiyah_trivial(k, c, read_field_table(node.at("connection"), c.rank(), k, k, params),
                            read_field_table(node.at("curvature"), c.rank(), StructureTensor::pairs(k), k, params),
                            "atiyah_trivial", opt);
    }
    if (kind == "custom") {
      const int n = node.at("n").integer();
      const int m = node.at("m").integer();
      if (n < 0 || m < 1) node.fail("need n >= 0 and m >= 1");
      std::vector<ScalarField> anchor;
      if (n > 0) {
        for (const auto& row : read_field_table(node.at("anchor"), n, m, n, params)) {
          anchor.insert(anchor.end(), row.begin(), row.end());
        }
      }
      // structure: list of {"c", "a", "b", "expr"} with 1-based indices and a < b
      std::vector<ScalarField> structure(static_cast<std::size_t>(m * StructureTensor::pairs(m)),
                                         ScalarField::constant(n, 0, 0.0));
      if (node.has("structure")) {
        const Node list = node.at("structure");
        for (std::size_t e = 0; e < list.size(); ++e) {
          const Node entry = list.at(e);
          const int g = entry.at("c").integer() - 1;
          const int a = entry.at("a").integer() - 1;
          const int b = entry.at("b").integer() - 1;
          if (g < 0 || g >= m || a < 0 || b >= m || a >= b) entry.fail("need 1 <= c <= m and 1 <= a < b <= m");
          structure[static_cast<std::size_t>(g * StructureTensor::pairs(m) + StructureTensor::pair_index(m, a, b))] =
              base_expr(entry.at("expr"), n, params);
        }
      }
      AlgebroidModel model(n, m, std::move(anchor), std::move(structure),
                           node.has("label") ? node.at("label").string() : "custom");
      validate(model, opt);
      return model;
    }
  } catch (const DimensionError& e) {
    throw ConfigError(node.path() + ": " + e.what());
  }
  node.at("kind").fail("unknown algebroid kind '" + kind + "'");
}

inline IntegratorSpec read_integrator(const Node& node) {
  IntegratorSpec s;
  if (node.has("method")) s.method = node.at("method").string();
  if (s.method != "rk4" && s.method != "adaptive") node.at("method").fail("expected 'rk4' or 'adaptive'");
  s.t_end = node.at("t_end").number();
  if (!(s.t_end > 0.0)) node.at("t_end").fail("must be positive");
  if (s.method == "rk4") {
    s.h = node.at("h").number();
    if (!(s.h > 0.0)) node.at("h").fail("must be positive");
  } else {
    s.tol = node.at("tol").number();
    if (!(s.tol > 0.0)) node.at("tol").fail("must be positive");
  }
  s.sample_every = node.integer_or("sample_every", 1);
  if (s.sample_every < 1) node.at("sample_every").fail("must be >= 1");
  return s;
}

inline HJSpec read_hj(const Node& node, int n) {
  HJSpec s;
  if (node.has("parameters")) s.parameters = read_parameters(node.at("parameters"));
  const bool jet = node.has("f");
  const bool expl = node.has("gamma_0") || node.has("gamma_s");
  if (jet && expl) node.fail("give either 'f' or 'gamma_0'/'gamma_s', not both");
  if (!jet && !expl) node.fail("missing 'f' or 'gamma_0'/'gamma_s'");
  if (jet) {
    s.f = node.at("f").string();
  } else {
    const Node g0 = node.at("gamma_0");
    for (std::size_t a = 0; a < g0.size(); ++a) s.gamma_0.push_back(g0.at(a).string());
    s.gamma_s = node.at("gamma_s").string();
  }
  if (node.has("section")) {
    const std::string sec = node.at("section").string();
    if (sec == "hamiltonian") {
      s.section = HJSection::hamiltonian;
    } else if (sec == "evolution") {
      s.section = HJSection::evolution;
    } else {
      node.at("section").fail("expected 'hamiltonian' or 'evolution'");
    }
  }
  s.level = node.number_or("level", 0.0);
  if (node.has("grid")) {
    const Node g = node.at("grid");
    s.lo = g.number_or("lo", s.lo);
    s.hi = g.number_or("hi", s.hi);
    s.points = g.integer_or("points", s.points);
    if (s.points < 1) g.at("points").fail("must be >= 1");
  }
  s.tolerance = node.number_or("tolerance", s.tolerance);
  if (node.has("projected")) {
    const Node p = node.at("projected");
    ProjectedSpec ps;
    ps.q0 = p.at("q0").vector(n);
    ps.t_end = p.number_or("t_end", ps.t_end);
    ps.h = p.number_or("h", ps.h);
    ps.sample_every = p.integer_or("sample_every", ps.sample_every);
    ps.tolerance = p.number_or("tolerance", ps.tolerance);
    if (!(ps.t_end > 0.0) || !(ps.h > 0.0) || ps.sample_every < 1) p.fail("t_end, h and sample_every must be positive");
    s.projected = ps;
  }
  return s;
}

}  // namespace detail

/// Builds a scenario from a parsed JSON document. With `validated` false
/// the algebroid is built without checking the structure equations, so
/// that a check run can report them.
inline Scenario load_scenario(const json& doc, bool validated = true) {
  const detail::Node root(doc, "");
  if (!doc.is_object()) root.fail("config must be a JSON object");
  Scenario sc;
  sc.name = root.has("name") ? root.at("name").string() : "scenario";
  sc.model = detail::read_algebroid(root.at("algebroid"), validated);
  const int n = sc.model->n();
  const int m = sc.model->m();

  const detail::Node sys = root.at("system");
  const std::string side = sys.at("side").string();
  if (side == "lagrangian") {
    sc.side = Side::lagrangian;
  } else if (side == "hamiltonian") {
    sc.side = Side::hamiltonian;
  } else {
    sys.at("side").fail("expected 'lagrangian' or 'hamiltonian'");
  }
  sc.expression = sys.at("expression").string();
  if (sys.has("parameters")) sc.parameters = detail::read_parameters(sys.at("parameters"));
  const expr::Context ctx{n, m, sc.side == Side::lagrangian ? expr::Chart::lagrangian : expr::Chart::hamiltonian, {}};
  sc.field = detail::with_path(sys.at("expression"), [&] { return expr::field(sc.expression, ctx, sc.parameters); });

  const detail::Node init = root.at("initial_state");
  sc.initial.q = n > 0 ? init.at("q").vector(n) : (init.has("q") ? init.at("q").vector(0) : Vector(0));
  sc.initial.w = init.at("w").vector(m);
  sc.initial.s = init.number_or("s", 0.0);
  sc.initial.side = sc.side;

  if (root.has("integrator")) sc.integrator = detail::read_integrator(root.at("integrator"));
  if (root.has("checks")) {
    const detail::Node list = root.at("checks");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const detail::Node c = list.at(k);
      sc.checks.push_back({c.at("name").string(), c.at("tolerance").number()});
    }
  }
  if (root.has("seed")) {
    const detail::Node s = root.at("seed");
    if (!s.raw().is_number_unsigned()) s.fail("expected a non-negative integer");
    sc.seed = s.raw().get<std::uint64_t>();
  }
  if (root.has("sampling")) {
    const detail::Node s = root.at("sampling");
    sc.sampling.samples = s.integer_or("samples", sc.sampling.samples);
    sc.sampling.radius = s.number_or("radius", sc.sampling.radius);
    if (sc.sampling.samples < 1) s.at("samples").fail("must be >= 1");
  }
  if (root.has("legendre")) {
    const detail::Node l = root.at("legendre");
    if (sc.side != Side::lagrangian) l.fail("requires a Lagrangian system");
    LegendreSpec ls;
    ls.t_end = l.number_or("t_end", ls.t_end);
    ls.h = l.number_or("h", ls.h);
    ls.sample_every = l.integer_or("sample_every", ls.sample_every);
    ls.tolerance = l.number_or("tolerance", ls.tolerance);
    if (!(ls.t_end > 0.0) || !(ls.h > 0.0) || ls.sample_every < 1) l.fail("t_end, h and sample_every must be positive");
    sc.legendre = ls;
  }
  if (root.has("hj")) {
    if (sc.side != Side::hamiltonian) root.at("hj").fail("requires a Hamiltonian system");
    sc.hj = detail::read_hj(root.at("hj"), n);
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path, bool validated = true) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return load_scenario(doc, validated);
}

/// The HJ section of a scenario as a SectionGamma, with its generating
/// function when it is a 1-jet.
inline std::pair<SectionGamma, std::optional<ScalarField>> hj_section(const Scenario& sc) {
  const HJSpec& s = *sc.hj;
  const int n = sc.algebroid().n();
  if (s.f) {
    ScalarField f = expr::base_field(*s.f, n, s.parameters);
    return {one_jet(sc.algebroid(), f), f};
  }
  std::vector<ScalarField> g0;
  for (const auto& text : s.gamma_0) g0.push_back(expr::base_field(text, n, s.parameters));
  if (static_cast<int>(g0.size()) != sc.algebroid().m()) throw ConfigError("hj.gamma_0: expected m entries");
  return {SectionGamma::explicit_fields(std::move(g0), expr::base_field(*s.gamma_s, n, s.parameters)), std::nullopt};
}

}  // namespace contalg
