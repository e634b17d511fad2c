#include "momentsos/gpm.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace momentsos {

int GpmConstraint::degree() const {
  int deg = 0;
  for (const auto& p : terms) deg = std::max(deg, p.degree());
  return deg;
}

void GpmProblem::validate() const {
  if (measures.empty()) throw ModelError("a moment problem needs at least one measure");
  for (std::size_t i = 0; i < measures.size(); ++i) {
    if (measures[i].cost.num_vars() != measures[i].support.num_vars()) {
      throw DimensionError("cost of measure " + std::to_string(i) + " has the wrong number of variables");
    }
  }
  auto check = [&](const std::vector<GpmConstraint>& list, const char* kind) {
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& c = list[k];
      if (c.terms.size() != measures.size()) {
        throw DimensionError(std::string(kind) + " " + std::to_string(k) + " has " + std::to_string(c.terms.size()) +
                             " terms for " + std::to_string(measures.size()) + " measures");
      }
      for (std::size_t i = 0; i < c.terms.size(); ++i) {
        if (c.terms[i].num_vars() != measures[i].support.num_vars()) {
          throw DimensionError(std::string(kind) + " " + std::to_string(k) + " term " + std::to_string(i) +
                               " has the wrong number of variables");
        }
      }
    }
  };
  check(equalities, "equality");
  check(inequalities, "inequality");
}

int gpm_min_order(const GpmProblem& g) {
  int deg = 0;
  for (const auto& m : g.measures) {
    deg = std::max(deg, m.cost.degree());
    for (const auto& c : m.support.all_constraints()) deg = std::max(deg, c.degree());
  }
  return std::max(1, (deg + 1) / 2);
}

namespace {

// Indices of a maximal independent subset of the equalities, in input order.
// Sets inconsistent when a dropped row disagrees with the kept ones.
std::vector<int> independent_equalities(const std::vector<const GpmConstraint*>& rows, const std::vector<int>& offset,
                                        int total, bool& inconsistent) {
  const auto k = static_cast<long>(rows.size());
  std::vector<int> keep;
  if (k == 0) return keep;
  Eigen::MatrixXd et = Eigen::MatrixXd::Zero(total, k);
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(total + 1, k);
  for (long r = 0; r < k; ++r) {
    const auto& c = *rows[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < c.terms.size(); ++i) {
      for (const auto& [alpha, v] : c.terms[i].terms()) et(offset[i] + static_cast<long>(grlex_rank(alpha)), r) += v;
    }
    aug.col(r).head(total) = et.col(r);
    aug(total, r) = c.rhs;
  }
  constexpr double kThreshold = 1e-10;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(et);
  qr.setThreshold(kThreshold);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qa(aug);
  qa.setThreshold(kThreshold);
  inconsistent = qa.rank() > qr.rank();
  for (long r = 0; r < qr.rank(); ++r) keep.push_back(qr.colsPermutation().indices()(r));
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

GpmRelaxation build_gpm_relaxation(const GpmProblem& g, int d) {
  g.validate();
  const int dhat = gpm_min_order(g);
  if (d < dhat) {
    throw OrderError("relaxation order " + std::to_string(d) + " is below the minimal order " + std::to_string(dhat));
  }
  GpmRelaxation out;
  out.d = d;
  out.sense = g.sense;

  std::vector<const GpmConstraint*> eq;
  for (std::size_t k = 0; k < g.equalities.size(); ++k) {
    if (g.equalities[k].degree() <= 2 * d) {
      eq.push_back(&g.equalities[k]);
      out.equalities_used.push_back(static_cast<int>(k));
    }
  }
  for (std::size_t j = 0; j < g.inequalities.size(); ++j) {
    if (g.inequalities[j].degree() <= 2 * d) out.inequalities_used.push_back(static_cast<int>(j));
  }

  // Mass of every measure must be bounded by some constraint at this level.
  for (std::size_t i = 0; i < g.measures.size(); ++i) {
    const Monomial zero = Monomial::zero(g.measures[i].support.num_vars());
    bool bounded = false;
    for (const auto* c : eq) bounded = bounded || c->terms[i].coefficient(zero) != 0.0;
    for (int j : out.inequalities_used) {
      bounded = bounded || g.inequalities[static_cast<std::size_t>(j)].terms[i].coefficient(zero) < 0.0;
    }
    if (!bounded) {
      throw ModelError("the mass of measure " + std::to_string(i) + " is not bounded by any constraint at order " +
                       std::to_string(d));
    }
  }

  int total = 0;
  for (const auto& m : g.measures) {
    out.num_vars.push_back(m.support.num_vars());
    out.row_offset.push_back(total);
    total += static_cast<int>(basis_size(m.support.num_vars(), 2 * d));
  }

  auto& prog = out.program;
  const double sign = g.sense == Sense::Minimize ? -1.0 : 1.0;
  for (std::size_t i = 0; i < g.measures.size(); ++i) {
    for (const auto& alpha : canonical_basis(out.num_vars[i], 2 * d)) {
      prog.add_constraint(sign * g.measures[i].cost.coefficient(alpha));
    }
  }
  for (std::size_t i = 0; i < g.measures.size(); ++i) {
    std::vector<Polynomial> localizers{Polynomial::constant(out.num_vars[i], 1.0)};
    for (const auto& c : g.measures[i].support.all_constraints()) localizers.push_back(c);
    for (const auto& loc : localizers) {
      const auto cm = coefficient_matrices(loc, d - half_degree(loc));
      const int block = prog.add_block(conic::ConeKind::Psd, cm.size);
      for (const auto& [alpha, entries] : cm.entries) {
        const int r = out.row_offset[i] + static_cast<int>(grlex_rank(alpha));
        for (const auto& e : entries) prog.add_coefficient(r, block, e.row, e.col, -e.value);
      }
    }
  }

  const std::vector<int> keep = independent_equalities(eq, out.row_offset, total, out.inconsistent);
  if (!keep.empty()) {
    std::vector<int> used;
    out.equality_block = prog.add_block(conic::ConeKind::Free, static_cast<int>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const auto& c = *eq[static_cast<std::size_t>(keep[k])];
      const int col = static_cast<int>(k);
      for (std::size_t i = 0; i < c.terms.size(); ++i) {
        for (const auto& [alpha, v] : c.terms[i].terms()) {
          prog.add_coefficient(out.row_offset[i] + static_cast<int>(grlex_rank(alpha)), out.equality_block, col, col, v);
        }
      }
      prog.add_cost(out.equality_block, col, col, c.rhs);
      used.push_back(out.equalities_used[static_cast<std::size_t>(keep[k])]);
    }
    out.equalities_used = std::move(used);
  } else {
    out.equalities_used.clear();
  }

  if (!out.inequalities_used.empty()) {
    out.inequality_block = prog.add_block(conic::ConeKind::NonNeg, static_cast<int>(out.inequalities_used.size()));
    for (std::size_t k = 0; k < out.inequalities_used.size(); ++k) {
      const auto& c = g.inequalities[static_cast<std::size_t>(out.inequalities_used[k])];
      const int col = static_cast<int>(k);
      for (std::size_t i = 0; i < c.terms.size(); ++i) {
        for (const auto& [alpha, v] : c.terms[i].terms()) {
          prog.add_coefficient(out.row_offset[i] + static_cast<int>(grlex_rank(alpha)), out.inequality_block, col, col,
                               -v);
        }
      }
      prog.add_cost(out.inequality_block, col, col, -c.rhs);
    }
  }
  return out;
}

std::vector<PseudoMomentSequence> GpmRelaxation::moments(const conic::ConicSolution& sol) const {
  if (sol.multipliers.size() != program.num_constraints()) {
    throw DimensionError("solution does not belong to this relaxation");
  }
  std::vector<PseudoMomentSequence> out;
  for (std::size_t i = 0; i < num_vars.size(); ++i) {
    const auto len = static_cast<long>(basis_size(num_vars[i], 2 * d));
    const double* first = sol.multipliers.data() + row_offset[i];
    out.emplace_back(num_vars[i], d, std::vector<double>(first, first + len));
  }
  return out;
}

double GpmRelaxation::bound(const conic::ConicSolution& sol) const {
  const double inf = std::numeric_limits<double>::infinity();
  switch (sol.status) {
    case conic::SolveStatus::Optimal:
      return sense == Sense::Minimize ? -sol.dual_objective : sol.dual_objective;
    case conic::SolveStatus::PrimalInfeasible:
      return sense == Sense::Minimize ? -inf : inf;
    default:
      return std::numeric_limits<double>::quiet_NaN();
  }
}

GpmResult solve_gpm(const GpmProblem& g, int d, const conic::SolverOptions& options) {
  const GpmRelaxation rel = build_gpm_relaxation(g, d);
  GpmResult out;
  out.d = d;
  if (rel.inconsistent) {
    out.status = conic::SolveStatus::DualInfeasible;
    out.bound = std::numeric_limits<double>::quiet_NaN();
    out.note = "the moment equalities are inconsistent";
    return out;
  }
  const conic::ConicSolution sol = conic::solve(rel.program, options);
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.bound = rel.bound(sol);
  if (sol.status == conic::SolveStatus::Optimal) {
    out.moments = rel.moments(sol);
  } else if (sol.status == conic::SolveStatus::DualInfeasible) {
    out.note = "no pseudo-moments satisfy the constraints";
  } else if (sol.status == conic::SolveStatus::PrimalInfeasible) {
    out.note = "the relaxation is unbounded";
  } else {
    out.note = std::string("solver stopped with status ") + conic::to_string(sol.status);
  }
  return out;
}

std::vector<Polynomial> stokes_constraints(const Polynomial& g, int d) {
  const int n = g.num_vars();
  const int top = 2 * d - g.degree() - 1;
  std::vector<Polynomial> out;
  if (top < 0) return out;
  const auto basis = canonical_basis(n, top);
  for (int i = 0; i < n; ++i) {
    for (const auto& alpha : basis) out.push_back((g * Polynomial::term(alpha, 1.0)).derivative(i));
  }
  return out;
}

bool BoundSequence::monotone(double slack) const {
  for (std::size_t k = 1; k < entries.size(); ++k) {
    const double prev = entries[k - 1].bound;
    const double cur = entries[k].bound;
    if (direction == Direction::Upper ? cur > prev + slack : cur < prev - slack) return false;
  }
  return true;
}

}  // namespace momentsos
