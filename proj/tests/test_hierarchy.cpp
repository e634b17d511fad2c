#include "doctest.h"
#include "support.hpp"

#include "momentsos/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

using namespace momentsos;
using testing_support::Rng;
using testing_support::uniform;
using testing_support::uniform_int;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Polynomial x_var(int n, int i) { return Polynomial::variable(n, i); }

PopProblem unit_interval_quartic() {
  const auto x = x_var(1, 0);
  return PopProblem(x * x * x * x - x * x, SemialgebraicSet(1, {Polynomial::constant(1, 1.0) - x * x}));
}

SemialgebraicSet unit_box(int n, double lo = -1.0, double hi = 1.0) {
  const std::vector<double> l(static_cast<std::size_t>(n), lo);
  const std::vector<double> h(static_cast<std::size_t>(n), hi);
  return box_set(l, h);
}

Polynomial motzkin() {
  return Polynomial(2, {{{4, 2}, 1.0}, {{2, 4}, 1.0}, {{2, 2}, -3.0}, {{0, 0}, 1.0}});
}

// Minimum of f over a uniform grid of the box, used as an upper estimate of f*.
double grid_minimum(const Polynomial& f, const SemialgebraicSet& set, double lo, double hi, int steps) {
  const int n = f.num_vars();
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  std::vector<double> x(static_cast<std::size_t>(n));
  double best = kInf;
  while (true) {
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = lo + (hi - lo) * idx[static_cast<std::size_t>(i)] / steps;
    if (set.contains(x, 1e-12)) best = std::min(best, f.eval(x));
    int i = 0;
    while (i < n && ++idx[static_cast<std::size_t>(i)] > steps) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  return best;
}

Polynomial random_poly(Rng& rng, int n, int deg) {
  Polynomial p(n);
  for (const auto& alpha : canonical_basis(n, deg)) {
    if (uniform(rng, 0.0, 1.0) < 0.7) p.add_term(alpha, uniform(rng, -1.0, 1.0));
  }
  return p;
}

}  // namespace

TEST_CASE("minimal order and rank offset") {
  const PopProblem q = unit_interval_quartic();
  CHECK(min_order(q) == 2);
  CHECK(rank_offset(q) == 1);
  const auto x = x_var(1, 0);
  const PopProblem free(x * x, SemialgebraicSet(1));
  CHECK(min_order(free) == 1);
  CHECK(rank_offset(free) == 1);
  const PopProblem ball(x, SemialgebraicSet(1, {}, 4.0));
  CHECK(min_order(ball) == 1);
  CHECK_THROWS_AS(build_primal_relaxation(q, 1), OrderError);
  CHECK_THROWS_AS(PopProblem(x, SemialgebraicSet(2)), DimensionError);
}

TEST_CASE("relaxation block layout") {
  const PrimalRelaxation rel = build_primal_relaxation(unit_interval_quartic(), 2);
  CHECK(rel.program.num_constraints() == 5);
  REQUIRE(rel.program.blocks().size() == 3);
  CHECK(rel.program.blocks()[0].size == 3);
  CHECK(rel.program.blocks()[1].size == 2);
  CHECK(rel.program.blocks()[2].kind == conic::ConeKind::Free);
  CHECK(rel.index.free_block == 2);
}

TEST_CASE("unconstrained square has bound zero and a Dirac at the origin") {
  const auto x = x_var(1, 0);
  const PopProblem p(x * x, SemialgebraicSet(1));
  const PrimalRelaxation rel = build_primal_relaxation(p, 1);
  const auto sol = conic::solve(rel.program);
  REQUIRE(sol.status == conic::SolveStatus::Optimal);
  CHECK(std::abs(rel.bound(sol)) <= 1e-7);
  const auto y = rel.moments(sol);
  CHECK(std::abs(y.values()[0] - 1.0) <= 1e-7);
  CHECK(std::abs(y.values()[1]) <= 1e-6);
  CHECK(std::abs(y.values()[2]) <= 1e-6);
}

TEST_CASE("moment relaxation on small examples") {
  const auto x = x_var(1, 0);
  const auto one = Polynomial::constant(1, 1.0);
  {
    const PopProblem p(-x, SemialgebraicSet(1, {x * (one - x)}));
    const PrimalRelaxation rel = build_primal_relaxation(p, 1);
    const auto sol = conic::solve(rel.program);
    REQUIRE(sol.status == conic::SolveStatus::Optimal);
    CHECK(std::abs(rel.bound(sol) + 1.0) <= 1e-6);
  }
  {
    const PopProblem p = unit_interval_quartic();
    const PrimalRelaxation rel = build_primal_relaxation(p, 2);
    const auto sol = conic::solve(rel.program);
    REQUIRE(sol.status == conic::SolveStatus::Optimal);
    CHECK(std::abs(rel.bound(sol) + 0.25) <= 5e-7);
  }
}

TEST_CASE("dual SOS bounds") {
  const auto x = x_var(1, 0);
  const PopProblem p(x * x + Polynomial::constant(1, 1.0), SemialgebraicSet(1));
  const DualSos sos = build_dual_sos(p, 1);
  const auto sol = conic::solve(sos.program);
  REQUIRE(sol.status == conic::SolveStatus::Optimal);
  CHECK(std::abs(sos.bound(sol) - 1.0) <= 1e-7);

  const DualSos q = build_dual_sos(unit_interval_quartic(), 2);
  const auto qs = conic::solve(q.program);
  REQUIRE(qs.status == conic::SolveStatus::Optimal);
  CHECK(std::abs(q.bound(qs) + 0.25) <= 5e-7);
}

TEST_CASE("Motzkin polynomial has no SOS lower bound at order 3") {
  const PopProblem p(motzkin(), SemialgebraicSet(2));
  const auto sol = conic::solve(build_dual_sos(p, 3).program);
  CHECK(sol.status == conic::SolveStatus::PrimalInfeasible);
  HierarchyOptions opt;
  const HierarchyResult h = solve_hierarchy(p, 3, opt);
  REQUIRE(h.levels.size() == 1);
  CHECK(h.levels[0].rho_star == -kInf);
  CHECK(h.levels[0].rho == -kInf);
  CHECK_FALSE(h.converged_order.has_value());
}

TEST_CASE("SOS membership") {
  const auto x = x_var(2, 0);
  const auto y = x_var(2, 1);
  SUBCASE("(x + y)^2 has a single square") {
    const Polynomial f = (x + y) * (x + y);
    const auto res = sos_membership(f);
    REQUIRE(std::holds_alternative<SosCertificate>(res));
    const auto& cert = std::get<SosCertificate>(res);
    REQUIRE(cert.terms.size() == 1);
    CHECK(cert.terms[0].factors.size() == 1);
    CHECK(cert.residual_norm <= 1e-6);
    const Polynomial& q = cert.terms[0].factors[0];
    const double sx = q.coefficient(Monomial({1, 0}));
    CHECK(std::abs(std::abs(sx) - 1.0) <= 1e-5);
    CHECK(std::abs(q.coefficient(Monomial({0, 1})) - sx) <= 1e-5);
  }
  SUBCASE("x^2 - 1 is negative at the origin") {
    const auto res = sos_membership(x * x - Polynomial::constant(2, 1.0));
    CHECK(std::holds_alternative<NotCertified>(res));
  }
  SUBCASE("odd degree") {
    CHECK(std::holds_alternative<NotCertified>(sos_membership(x * x * x)));
  }
  SUBCASE("Motzkin comes with a separating functional") {
    const Polynomial f = motzkin();
    const auto res = sos_membership(f);
    REQUIRE(std::holds_alternative<NotCertified>(res));
    const auto& nc = std::get<NotCertified>(res);
    CHECK(nc.status == conic::SolveStatus::PrimalInfeasible);
    REQUIRE(nc.evidence.has_value());
    const PseudoMomentSequence l(2, 3, *nc.evidence);
    CHECK(riesz(l, f) < 0.0);
    const Eigen::MatrixXd m = moment_matrix(l, 3);
    CHECK(testing_support::min_eigenvalue(m) >= -1e-8 * std::max(1.0, m.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("SOS membership without a strictly feasible Gram matrix") {
  // No x^4 or y^4 term, so the rows of x^2 and y^2 in any Gram matrix vanish.
  const auto x = x_var(2, 0);
  const auto y = x_var(2, 1);
  const auto one = Polynomial::constant(2, 1.0);
  const Polynomial q1 = x * y + x - 0.5 * y + one;
  const Polynomial q2 = x * y - 2.0 * x + y;
  const Polynomial f = q1 * q1 + q2 * q2;
  const auto res = sos_membership(f);
  REQUIRE(std::holds_alternative<SosCertificate>(res));
  const auto& cert = std::get<SosCertificate>(res);
  CHECK(cert.residual_norm <= 1e-6);
  CHECK(cert.terms[0].factors.size() <= 4);
  for (const auto& q : cert.terms[0].factors) {
    CHECK(q.coefficient(Monomial({2, 0})) == 0.0);
    CHECK(q.coefficient(Monomial({0, 2})) == 0.0);
  }
}

TEST_CASE("SOS membership is sound on random squares") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = uniform_int(rng, 1, 3);
    Polynomial f(n);
    for (int k = 0; k < 3; ++k) {
      const Polynomial q = random_poly(rng, n, 2);
      f += q * q;
    }
    const auto res = sos_membership(f);
    CAPTURE(trial);
    REQUIRE(std::holds_alternative<SosCertificate>(res));
    const auto& cert = std::get<SosCertificate>(res);
    CHECK(cert.residual_norm <= kCertificateTolerance * (1.0 + f.coefficient_norm()));
    std::vector<double> pt(static_cast<std::size_t>(n));
    for (int s = 0; s < 1000; ++s) {
      for (auto& v : pt) v = uniform(rng, -1.0, 1.0);
      CHECK(f.eval(pt) >= -1e-6);
    }
  }
}

TEST_CASE("certificate recovery") {
  const auto one = Polynomial::constant(1, 1.0);
  const auto x = x_var(1, 0);
  SUBCASE("x^2 on the line") {
    const PopProblem p(x * x, SemialgebraicSet(1));
    const auto sol = conic::solve(build_dual_sos(p, 1).program);
    const SosCertificate cert = recover_sos_certificate(p, 1, sol);
    CHECK(std::abs(cert.lambda) <= 1e-7);
    REQUIRE(cert.terms.size() == 1);
    const Polynomial s = cert.terms[0].sigma();
    CHECK(std::abs(s.coefficient(Monomial({2})) - 1.0) <= 1e-6);
  }
  SUBCASE("quartic on [-1, 1] uses the constraint") {
    const PopProblem p = unit_interval_quartic();
    const auto sol = conic::solve(build_dual_sos(p, 2).program);
    const SosCertificate cert = recover_sos_certificate(p, 2, sol);
    CHECK(std::abs(cert.lambda + 0.25) <= 5e-7);
    REQUIRE(cert.terms.size() == 2);
    CHECK_FALSE(cert.terms[1].factors.empty());
  }
  SUBCASE("-x on the unit interval") {
    const PopProblem p(-x, SemialgebraicSet(1, {x, one - x}));
    const auto sol = conic::solve(build_dual_sos(p, 1).program);
    const SosCertificate cert = recover_sos_certificate(p, 1, sol);
    CHECK(std::abs(cert.lambda + 1.0) <= 1e-6);
    REQUIRE(cert.terms.size() == 3);
    const Polynomial s = cert.terms[2].sigma();
    CHECK(s.degree() == 0);
    CHECK(s.coefficient(Monomial::zero(1)) > 0.5);
  }
  SUBCASE("non-optimal solutions are rejected") {
    const PopProblem p(x * x, SemialgebraicSet(1));
    conic::ConicSolution bad;
    bad.status = conic::SolveStatus::MaxIter;
    CHECK_THROWS_AS(recover_sos_certificate(p, 1, bad), CertificateRejected);
  }
}

TEST_CASE("Krivine LP examples") {
  const auto one = Polynomial::constant(1, 1.0);
  const auto x = x_var(1, 0);
  const SemialgebraicSet interval(1, {x, one - x});
  SUBCASE("f = x with k = 1") {
    const KrivineLp lp = build_krivine_lp(PopProblem(x, interval), 1);
    CHECK(lp.warnings.empty());
    const auto sol = conic::solve(lp.program);
    CHECK(std::abs(lp.bound(sol)) <= 1e-7);
  }
  SUBCASE("constants are exact") {
    for (int k = 1; k <= 3; ++k) {
      const KrivineLp lp = build_krivine_lp(PopProblem(Polynomial::constant(1, 2.5), interval), k);
      CHECK(std::abs(lp.bound(conic::solve(lp.program)) - 2.5) <= 1e-7);
    }
  }
  SUBCASE("quartic on [0, 1] through g = x") {
    const PopProblem p(x * x * x * x - x * x, SemialgebraicSet(1, {x}));
    const double fmin = grid_minimum(p.f, interval, 0.0, 1.0, 20000);
    double prev = -kInf;
    for (int k = 1; k <= 8; ++k) {
      const KrivineLp lp = build_krivine_lp(p, k);
      const double b = lp.bound(conic::solve(lp.program));
      CAPTURE(k);
      if (k < 4) {
        CHECK(b == -kInf);
      } else {
        CHECK(std::isfinite(b));
      }
      CHECK(b < -0.25);
      CHECK(b <= fmin + 1e-7);
      CHECK(b >= prev - 1e-7);
      prev = b;
    }
  }
  SUBCASE("box scaling") {
    const PopProblem p(x, SemialgebraicSet(1, {x + one, one - x}));
    const KrivineLp raw = build_krivine_lp(p, 1);
    CHECK_FALSE(raw.warnings.empty());
    const KrivineLp scaled = build_krivine_lp(p, 1, BoxBounds{{-1.0}, {1.0}});
    CHECK(scaled.warnings.empty());
    CHECK(std::abs(scaled.scaled_constraints[0].coefficient(Monomial::zero(1)) - 0.5) <= 1e-15);
    CHECK(std::abs(scaled.bound(conic::solve(scaled.program)) + 1.0) <= 1e-7);
  }
  CHECK_THROWS_AS(build_krivine_lp(PopProblem(x, interval), 0), OrderError);
}

TEST_CASE("interval upper bound") {
  const Polynomial g(2, {{{2, 0}, 1.0}, {{1, 1}, -2.0}, {{0, 0}, 0.5}});
  CHECK(interval_upper_bound(g, BoxBounds{{-1.0, -1.0}, {1.0, 1.0}}) == doctest::Approx(3.5));
  CHECK(interval_upper_bound(g, BoxBounds{{0.0, 0.0}, {1.0, 2.0}}) == doctest::Approx(1.5));
}

TEST_CASE("hierarchy detects finite convergence") {
  SUBCASE("quartic on [-1, 1]") {
    const HierarchyResult h = solve_hierarchy(unit_interval_quartic(), 3);
    REQUIRE(h.converged_order == 2);
    const LevelResult& lv = h.levels.back();
    CHECK(std::abs(lv.rho + 0.25) <= 5e-7);
    CHECK(std::abs(lv.rho_star + 0.25) <= 5e-7);
    REQUIRE(lv.atoms);
    REQUIRE(lv.atoms->atoms.size() == 2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(lv.atoms->atoms[0].point[0] + r) <= 1e-5);
    CHECK(std::abs(lv.atoms->atoms[1].point[0] - r) <= 1e-5);
    CHECK(std::abs(lv.atoms->atoms[0].weight + lv.atoms->atoms[1].weight - 1.0) <= 1e-5);
  }
  SUBCASE("-x on [0, 1] needs the minimum-trace resolve") {
    const auto x = x_var(1, 0);
    const PopProblem p(-x, unit_box(1, 0.0, 1.0));
    const HierarchyResult h = solve_hierarchy(p, 2);
    REQUIRE(h.converged_order == 1);
    CHECK(h.levels.back().regularized);
    REQUIRE(h.levels.back().atoms);
    REQUIRE(h.levels.back().atoms->atoms.size() == 1);
    CHECK(std::abs(h.levels.back().atoms->atoms[0].point[0] - 1.0) <= 1e-5);
  }
  SUBCASE("bilinear objective on the square") {
    const PopProblem p(x_var(2, 0) * x_var(2, 1), unit_box(2));
    const HierarchyResult h = solve_hierarchy(p, 2);
    REQUIRE(h.converged_order.has_value());
    const LevelResult& lv = h.levels.back();
    CHECK(std::abs(lv.rho + 1.0) <= 1e-6);
    REQUIRE(lv.atoms);
    REQUIRE(lv.atoms->atoms.size() == 2);
    CHECK(std::abs(lv.atoms->atoms[0].point[0] + 1.0) <= 1e-4);
    CHECK(std::abs(lv.atoms->atoms[0].point[1] - 1.0) <= 1e-4);
    CHECK(std::abs(lv.atoms->atoms[1].point[0] - 1.0) <= 1e-4);
    CHECK(std::abs(lv.atoms->atoms[1].point[1] + 1.0) <= 1e-4);
  }
}

TEST_CASE("threaded hierarchy matches the sequential run") {
  const PopProblem p = unit_interval_quartic();
  HierarchyOptions seq;
  seq.extract = false;
  HierarchyOptions par = seq;
  par.threads = 3;
  const HierarchyResult a = solve_hierarchy(p, 4, seq);
  const HierarchyResult b = solve_hierarchy(p, 4, par);
  REQUIRE(a.levels.size() == b.levels.size());
  CHECK(a.converged_order == b.converged_order);
  for (std::size_t i = 0; i < a.levels.size(); ++i) CHECK(a.levels[i].rho == b.levels[i].rho);
}

TEST_CASE("random box problems respect monotonicity, weak duality and sampled values") {
  Rng rng(31337);
  HierarchyOptions opt;
  opt.extract = false;
  for (int trial = 0; trial < 8; ++trial) {
    const int n = uniform_int(rng, 1, 2);
    const int deg = uniform_int(rng, 2, 4);
    const PopProblem p(random_poly(rng, n, deg), unit_box(n));
    const int dhat = min_order(p);
    std::vector<LevelResult> levels;
    for (int d = dhat; d <= dhat + 1; ++d) {
      HierarchyOptions one = opt;
      levels.push_back(solve_hierarchy(p, d, one).levels.back());
    }
    CAPTURE(trial);
    std::vector<double> x(static_cast<std::size_t>(n));
    double sample_min = kInf;
    for (int s = 0; s < 1000; ++s) {
      for (auto& v : x) v = uniform(rng, -1.0, 1.0);
      sample_min = std::min(sample_min, p.f.eval(x));
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
      // Low orders may be unbounded when the top moments are unconstrained.
      const bool finite = levels[i].primal_status == conic::SolveStatus::Optimal;
      CHECK((finite || levels[i].rho == -kInf));
      CHECK(levels[i].dual_status == levels[i].primal_status);
      CHECK(levels[i].rho_star <= levels[i].rho + 1e-7);
      CHECK(levels[i].rho <= sample_min + 1e-7);
      if (i + 1 < levels.size()) {
        CHECK(levels[i].rho <= levels[i + 1].rho + 1e-7);
        CHECK(levels[i].rho_star <= levels[i + 1].rho_star + 1e-7);
      }
    }
  }
}

TEST_CASE("recovered certificates are sound at sample points") {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = uniform_int(rng, 1, 2);
    const PopProblem p(random_poly(rng, n, 2), unit_box(n));
    const int d = min_order(p) + 1;
    const auto sol = conic::solve(build_dual_sos(p, d).program);
    REQUIRE(sol.status == conic::SolveStatus::Optimal);
    const SosCertificate cert = recover_sos_certificate(p, d, sol);
    CHECK(cert.residual_norm <= kCertificateTolerance * (1.0 + p.f.coefficient_norm()));
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int s = 0; s < 100; ++s) {
      for (auto& v : x) v = uniform(rng, -1.0, 1.0);
      double rhs = cert.lambda;
      for (const auto& t : cert.terms) rhs += t.sigma().eval(x) * t.multiplier.eval(x);
      CHECK(p.f.eval(x) - rhs >= -1e-5);
    }
  }
}

TEST_CASE("extracted atoms are feasible and attain the bound") {
  const auto x = x_var(2, 0);
  const auto y = x_var(2, 1);
  const PopProblem p(x + y * y - x * y, unit_box(2));
  const HierarchyResult h = solve_hierarchy(p, 3);
  REQUIRE(h.converged_order.has_value());
  const LevelResult& lv = h.levels.back();
  REQUIRE(lv.atoms);
  for (const auto& a : lv.atoms->atoms) {
    CHECK(p.set.contains(a.point, 1e-5));
    CHECK(std::abs(p.f.eval(a.point) - lv.rho) <= 1e-5);
  }
}
