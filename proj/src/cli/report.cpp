#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace momentsos::cli {

using nlohmann::json;

std::string human(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

namespace {

json spectrum(const Eigen::VectorXd& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

std::string point(const std::vector<double>& x, const std::vector<std::string>& variables) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) s += ", ";
    if (i < variables.size()) s += variables[i] + " = ";
    s += human(x[i]);
  }
  return s + ")";
}

}  // namespace

json to_json(const RankReport& r) {
  return {{"d", r.d},
          {"s", r.s},
          {"rank_full", r.rank_full},
          {"rank_sub", r.rank_sub},
          {"passed", r.passed},
          {"singular_values_full", spectrum(r.singular_values_full)},
          {"singular_values_sub", spectrum(r.singular_values_sub)}};
}

json to_json(const AtomicMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) {
    json p = json::array();
    for (double v : a.point) p.push_back(number(v));
    atoms.push_back({{"point", p}, {"weight", number(a.weight)}});
  }
  return atoms;
}

json to_json(const LevelResult& level) {
  json j{{"d", level.d},
         {"rho", number(level.rho)},
         {"rho_star", number(level.rho_star)},
         {"primal_status", conic::to_string(level.primal_status)},
         {"dual_status", conic::to_string(level.dual_status)},
         {"primal_iterations", level.primal_iterations},
         {"dual_iterations", level.dual_iterations},
         {"regularized", level.regularized},
         {"certified", level.certified()},
         {"note", level.note}};
  j["rank"] = level.rank ? to_json(*level.rank) : json(nullptr);
  j["atoms"] = level.atoms ? to_json(*level.atoms) : json(nullptr);
  return j;
}

json to_json(const BoundEntry& e) {
  json j{{"d", e.d}, {"bound", number(e.bound)}, {"status", conic::to_string(e.status)}, {"note", e.note}};
  j["atoms"] = e.atoms ? to_json(*e.atoms) : json(nullptr);
  return j;
}

json to_json(const SuperResolutionResult& r) {
  json j{{"d", r.d},
         {"tv_bound", number(r.tv_bound)},
         {"status", conic::to_string(r.status)},
         {"residual", number(r.residual)},
         {"note", r.note}};
  j["rank_plus"] = r.rank_plus ? to_json(*r.rank_plus) : json(nullptr);
  j["rank_minus"] = r.rank_minus ? to_json(*r.rank_minus) : json(nullptr);
  j["measure"] = r.measure ? to_json(*r.measure) : json(nullptr);
  return j;
}

json to_json(const SosMembership& m) {
  if (const auto* c = std::get_if<SosCertificate>(&m)) {
    json terms = json::array();
    for (const auto& t : c->terms) {
      json squares = json::array();
      for (const auto& f : t.factors) squares.push_back(f.to_string());
      terms.push_back({{"multiplier", t.multiplier.to_string()}, {"squares", squares}});
    }
    return {{"result", "Certified"},
            {"lambda", number(c->lambda)},
            {"residual_norm", number(c->residual_norm)},
            {"terms", terms}};
  }
  const auto& n = std::get<NotCertified>(m);
  json j{{"result", "NotCertified"}, {"reason", n.reason}, {"status", conic::to_string(n.status)}};
  if (n.evidence) {
    json e = json::array();
    for (double v : *n.evidence) e.push_back(number(v));
    j["evidence"] = e;
  } else {
    j["evidence"] = nullptr;
  }
  return j;
}

void print(std::ostream& out, const RankReport& r) {
  out << "  rank M_" << r.d << " = " << r.rank_full << ", rank M_" << r.d - r.s << " = " << r.rank_sub
      << (r.passed ? " (passed)" : " (failed)") << '\n';
}

void print(std::ostream& out, const AtomicMeasure& m, const std::vector<std::string>& variables) {
  for (const auto& a : m.atoms) out << "  atom " << point(a.point, variables) << " weight " << human(a.weight) << '\n';
}

void print(std::ostream& out, const LevelResult& level, const std::vector<std::string>& variables) {
  out << "order " << level.d << ": rho = " << human(level.rho) << " [" << conic::to_string(level.primal_status)
      << "], rho* = " << human(level.rho_star) << " [" << conic::to_string(level.dual_status) << "], "
      << human(level.seconds) << " s\n";
  if (level.rank) print(out, *level.rank);
  if (level.regularized) out << "  moments from the minimum-trace resolve\n";
  if (level.atoms) print(out, *level.atoms, variables);
  if (!level.note.empty()) out << "  note: " << level.note << '\n';
}

void print(std::ostream& out, const BoundEntry& e, const std::vector<std::string>& variables) {
  out << "order " << e.d << ": bound = " << human(e.bound) << " [" << conic::to_string(e.status) << "]\n";
  if (e.atoms) print(out, *e.atoms, variables);
  if (!e.note.empty()) out << "  note: " << e.note << '\n';
}

void print(std::ostream& out, const SuperResolutionResult& r, const std::vector<std::string>& variables) {
  out << "order " << r.d << ": total variation bound = " << human(r.tv_bound) << " [" << conic::to_string(r.status)
      << "]\n";
  if (r.rank_plus) {
    out << " phi+:";
    print(out, *r.rank_plus);
  }
  if (r.rank_minus) {
    out << " phi-:";
    print(out, *r.rank_minus);
  }
  if (r.measure) {
    print(out, *r.measure, variables);
    out << "  moment residual " << human(r.residual) << '\n';
  }
  if (!r.note.empty()) out << "  note: " << r.note << '\n';
}

void print(std::ostream& out, const SosMembership& m) {
  if (const auto* c = std::get_if<SosCertificate>(&m)) {
    std::size_t squares = 0;
    for (const auto& t : c->terms) squares += t.factors.size();
    out << "Certified: sum of " << squares << " squares (residual " << human(c->residual_norm) << ")\n";
    for (const auto& t : c->terms) {
      for (const auto& f : t.factors) out << "  (" << f.to_string() << ")^2\n";
    }
    return;
  }
  const auto& n = std::get<NotCertified>(m);
  out << "NotCertified: " << n.reason << " [" << conic::to_string(n.status) << "]\n";
}

}  // namespace momentsos::cli
