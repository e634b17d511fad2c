#include "momentsos/cli.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace momentsos::cli {

const char* to_string(ProblemErrorCode code) {
  switch (code) {
    case ProblemErrorCode::Io:
      return "io";
    case ProblemErrorCode::Syntax:
      return "syntax";
    case ProblemErrorCode::Schema:
      return "schema";
    case ProblemErrorCode::UnknownKind:
      return "unknown-kind";
    case ProblemErrorCode::UndeclaredVariable:
      return "undeclared-variable";
    case ProblemErrorCode::DegreeMismatch:
      return "degree-mismatch";
  }
  return "unknown";
}

ProblemFileError::ProblemFileError(ProblemErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

namespace {

using nlohmann::json;

[[noreturn]] void fail(ProblemErrorCode code, const std::string& path, const std::string& what) {
  throw ProblemFileError(code, (path.empty() ? std::string("/") : path) + ": " + what);
}

// A JSON value together with its field path, for diagnostics.
struct Field {
  const json& value;
  std::string path;

  bool has(const char* key) const { return value.is_object() && value.contains(key); }

  Field at(const char* key) const {
    if (!value.is_object()) fail(ProblemErrorCode::Schema, path, "expected an object");
    const auto it = value.find(key);
    if (it == value.end()) fail(ProblemErrorCode::Schema, path, std::string("missing field '") + key + "'");
    return {*it, path + "/" + key};
  }

  Field at(std::size_t i) const { return {value[i], path + "/" + std::to_string(i)}; }

  const json& array() const {
    if (!value.is_array()) fail(ProblemErrorCode::Schema, path, "expected an array");
    return value;
  }

  double number() const {
    if (!value.is_number()) fail(ProblemErrorCode::Schema, path, "expected a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) fail(ProblemErrorCode::Schema, path, "expected a finite number");
    return v;
  }

  int integer() const {
    if (!value.is_number_integer()) fail(ProblemErrorCode::Schema, path, "expected an integer");
    return value.get<int>();
  }

  std::string string() const {
    if (!value.is_string()) fail(ProblemErrorCode::Schema, path, "expected a string");
    return value.get<std::string>();
  }
};

class Reader {
 public:
  explicit Reader(std::vector<std::string> variables) : vars_(std::move(variables)) {}

  int n() const { return static_cast<int>(vars_.size()); }

  Monomial powers(const Field& f) const {
    std::vector<int> e(vars_.size(), 0);
    if (!f.value.is_object()) fail(ProblemErrorCode::Schema, f.path, "expected an object of exponents");
    for (const auto& [name, v] : f.value.items()) {
      const auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) {
        fail(ProblemErrorCode::UndeclaredVariable, f.path + "/" + name, "undeclared variable '" + name + "'");
      }
      const int p = Field{v, f.path + "/" + name}.integer();
      if (p < 0) fail(ProblemErrorCode::Schema, f.path + "/" + name, "exponents must be non-negative");
      e[static_cast<std::size_t>(it - vars_.begin())] = p;
    }
    return Monomial(std::move(e));
  }

  // [{"coefficient": c, "powers": {"x": 2}}, ...]; a missing powers field is the constant term.
  Polynomial polynomial(const Field& f) const {
    Polynomial p(n());
    const auto& terms = f.array();
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const Field t = f.at(i);
      const double c = t.at("coefficient").number();
      const Monomial m = t.has("powers") ? powers(t.at("powers")) : Monomial::zero(n());
      p.add_term(m, c);
    }
    return p;
  }

  std::vector<Polynomial> polynomials(const Field& f) const {
    std::vector<Polynomial> out;
    for (std::size_t i = 0; i < f.array().size(); ++i) out.push_back(polynomial(f.at(i)));
    return out;
  }

  // {"constraints": [...], "ball_radius_sq": M}; both optional.
  SemialgebraicSet set(const Field& f) const {
    if (!f.value.is_object()) fail(ProblemErrorCode::Schema, f.path, "expected an object");
    std::vector<Polynomial> gs = f.has("constraints") ? polynomials(f.at("constraints")) : std::vector<Polynomial>{};
    std::optional<double> ball;
    if (f.has("ball_radius_sq")) {
      ball = f.at("ball_radius_sq").number();
      if (*ball <= 0.0) fail(ProblemErrorCode::Schema, f.path + "/ball_radius_sq", "must be positive");
    }
    return SemialgebraicSet(n(), std::move(gs), ball);
  }

  // Either plain values indexed by the graded monomial order, or
  // [{"powers": {...}, "value": v}, ...].
  std::vector<KnownMoment> moments(const Field& f) const {
    const auto& list = f.array();
    std::vector<KnownMoment> out;
    if (!list.empty() && list.front().is_number()) {
      int top = 0;
      while (basis_size(n(), top) < list.size()) ++top;
      const auto basis = canonical_basis(n(), top);
      for (std::size_t i = 0; i < list.size(); ++i) out.push_back({basis[i], f.at(i).number()});
      return out;
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Field m = f.at(i);
      const Monomial alpha = m.has("powers") ? powers(m.at("powers")) : Monomial::zero(n());
      out.push_back({alpha, m.at("value").number()});
    }
    return out;
  }

 private:
  std::vector<std::string> vars_;
};

std::vector<std::string> read_variables(const Field& f) {
  std::vector<std::string> vars;
  const auto& list = f.array();
  if (list.empty()) fail(ProblemErrorCode::Schema, f.path, "at least one variable is required");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string name = f.at(i).string();
    if (name.empty()) fail(ProblemErrorCode::Schema, f.path + "/" + std::to_string(i), "empty variable name");
    if (std::find(vars.begin(), vars.end(), name) != vars.end()) {
      fail(ProblemErrorCode::Schema, f.path + "/" + std::to_string(i), "duplicate variable '" + name + "'");
    }
    vars.push_back(name);
  }
  return vars;
}

GpmConstraint gpm_constraint(const Reader& r, const Field& f, std::size_t measures) {
  const Field terms = f.at("terms");
  if (terms.array().size() != measures) {
    fail(ProblemErrorCode::Schema, terms.path,
         "expected one polynomial per measure (" + std::to_string(measures) + ")");
  }
  return {r.polynomials(terms), f.at("rhs").number()};
}

GpmProblem read_gpm(const Reader& r, const Field& root) {
  GpmProblem g;
  if (root.has("sense")) {
    const Field s = root.at("sense");
    const std::string v = s.string();
    if (v == "min") {
      g.sense = Sense::Minimize;
    } else if (v == "max") {
      g.sense = Sense::Maximize;
    } else {
      fail(ProblemErrorCode::Schema, s.path, "sense must be 'min' or 'max'");
    }
  }
  const Field ms = root.at("measures");
  for (std::size_t i = 0; i < ms.array().size(); ++i) {
    const Field m = ms.at(i);
    g.measures.push_back({r.set(m), r.polynomial(m.at("cost"))});
  }
  if (g.measures.empty()) fail(ProblemErrorCode::Schema, ms.path, "at least one measure is required");
  for (const char* key : {"equalities", "inequalities"}) {
    if (!root.has(key)) continue;
    const Field list = root.at(key);
    auto& dest = std::string(key) == "equalities" ? g.equalities : g.inequalities;
    for (std::size_t k = 0; k < list.array().size(); ++k) dest.push_back(gpm_constraint(r, list.at(k), g.measures.size()));
  }
  return g;
}

BoxBounds read_box(const Field& f, int n) {
  BoxBounds b;
  for (const char* key : {"lo", "hi"}) {
    const Field side = f.at(key);
    if (side.array().size() != static_cast<std::size_t>(n)) {
      fail(ProblemErrorCode::Schema, side.path, "expected one bound per variable");
    }
    auto& dest = std::string(key) == "lo" ? b.lo : b.hi;
    for (std::size_t i = 0; i < side.array().size(); ++i) dest.push_back(side.at(i).number());
  }
  for (int i = 0; i < n; ++i) {
    if (!(b.lo[static_cast<std::size_t>(i)] < b.hi[static_cast<std::size_t>(i)])) {
      fail(ProblemErrorCode::Schema, f.path, "lo must be below hi in every coordinate");
    }
  }
  return b;
}

ProblemFile read(const json& doc) {
  const Field root{doc, ""};
  if (!doc.is_object()) fail(ProblemErrorCode::Schema, "", "expected an object at the top level");
  ProblemFile pf;
  const Field version = root.at("version");
  pf.version = version.integer();
  if (pf.version != 1) fail(ProblemErrorCode::Schema, version.path, "unsupported version " + std::to_string(pf.version));
  const Field kind = root.at("kind");
  pf.kind = kind.string();
  static const std::vector<std::string> kinds{"pop", "sos-check", "gpm", "volume", "prob-bound", "superres"};
  if (std::find(kinds.begin(), kinds.end(), pf.kind) == kinds.end()) {
    fail(ProblemErrorCode::UnknownKind, kind.path, "unknown kind '" + pf.kind + "'");
  }
  pf.variables = read_variables(root.at("variables"));
  const Reader r(pf.variables);

  if (pf.kind == "pop") {
    pf.data = PopProblem(r.polynomial(root.at("objective")), r.set(root));
  } else if (pf.kind == "sos-check") {
    pf.data = SosCheckProblem{r.polynomial(root.at("polynomial"))};
  } else if (pf.kind == "gpm") {
    pf.data = read_gpm(r, root);
  } else if (pf.kind == "volume") {
    pf.data = VolumeSpec{r.set(root), read_box(root.at("box"), r.n())};
  } else if (pf.kind == "prob-bound") {
    ProbBoundSpec spec{r.set(root.at("omega1")), r.set(root.at("omega2")), r.moments(root.at("moments"))};
    if (root.has("direction")) {
      const Field dir = root.at("direction");
      const std::string v = dir.string();
      if (v == "upper") {
        spec.direction = Direction::Upper;
      } else if (v == "lower") {
        spec.direction = Direction::Lower;
      } else {
        fail(ProblemErrorCode::Schema, dir.path, "direction must be 'upper' or 'lower'");
      }
    }
    pf.data = std::move(spec);
  } else {
    const Field t = root.at("t");
    SuperResSpec spec{t.integer(), r.set(root.at("omega")), r.moments(root.at("moments"))};
    if (spec.t < 0) fail(ProblemErrorCode::Schema, t.path, "t must be non-negative");
    for (std::size_t i = 0; i < spec.moments.size(); ++i) {
      if (spec.moments[i].alpha.degree() > spec.t) {
        fail(ProblemErrorCode::DegreeMismatch, "/moments/" + std::to_string(i),
             "moment of degree " + std::to_string(spec.moments[i].alpha.degree()) + " exceeds t = " +
                 std::to_string(spec.t));
      }
    }
    pf.data = std::move(spec);
  }
  return pf;
}

}  // namespace

ProblemFile parse_problem(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ProblemFileError(ProblemErrorCode::Syntax, "line " + std::to_string(line) + ": malformed JSON");
  }
  try {
    return read(doc);
  } catch (const ProblemFileError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProblemFileError(ProblemErrorCode::Schema, e.what());
  }
}

ProblemFile parse_problem_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProblemFileError(ProblemErrorCode::Io, path.string() + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_problem(buf.str());
  } catch (const ProblemFileError& e) {
    throw ProblemFileError(e.code(), path.string() + ":" + e.what());
  }
}

}  // namespace momentsos::cli
