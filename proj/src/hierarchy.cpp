#include "momentsos/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <string>

namespace momentsos {

PopProblem::PopProblem(Polynomial objective, SemialgebraicSet domain) : f(std::move(objective)), set(std::move(domain)) {
  if (f.num_vars() != set.num_vars()) {
    throw DimensionError("objective has " + std::to_string(f.num_vars()) + " variables but the set has " +
                         std::to_string(set.num_vars()));
  }
}

int min_order(const PopProblem& p) {
  int deg = p.f.degree();
  for (const auto& g : p.set.all_constraints()) deg = std::max(deg, g.degree());
  return (deg + 1) / 2;
}

int rank_offset(const PopProblem& p) {
  const auto constraints = p.set.all_constraints();
  if (constraints.empty()) return 1;
  int s = 0;
  for (const auto& g : constraints) s = std::max(s, half_degree(g));
  return std::max(s, 1);
}

int RelaxationIndex::row(const Monomial& alpha) const {
  if (alpha.num_vars() != n) throw DimensionError("moment index has the wrong dimension");
  if (alpha.degree() > 2 * d) throw DegreeError("moment index exceeds the relaxation degree");
  return static_cast<int>(grlex_rank(alpha));
}

std::size_t RelaxationIndex::num_moments() const { return basis_size(n, 2 * d); }

namespace {

RelaxationIndex make_index(const PopProblem& p, int d) {
  const int dhat = min_order(p);
  if (d < dhat) {
    throw OrderError("relaxation order " + std::to_string(d) + " is below the minimal order " + std::to_string(dhat));
  }
  RelaxationIndex idx;
  idx.n = p.f.num_vars();
  idx.d = d;
  idx.localizers.push_back(Polynomial::constant(idx.n, 1.0));
  idx.block_orders.push_back(d);
  for (const auto& g : p.set.all_constraints()) {
    idx.localizers.push_back(g);
    idx.block_orders.push_back(d - half_degree(g));
  }
  return idx;
}

// Rows alpha in canonical_basis(n, 2d) with sum_j <sign * B_{g_j,alpha}, X_j> + [alpha = 0] z = rhs_sign * f_alpha.
conic::ConicProgram assemble(const PopProblem& p, RelaxationIndex& idx, double block_sign, double rhs_sign,
                             double free_cost) {
  conic::ConicProgram prog;
  const auto rows = canonical_basis(idx.n, 2 * idx.d);
  for (const auto& alpha : rows) prog.add_constraint(rhs_sign * p.f.coefficient(alpha));
  for (std::size_t j = 0; j < idx.localizers.size(); ++j) {
    const auto cm = coefficient_matrices(idx.localizers[j], idx.block_orders[j]);
    const int block = prog.add_block(conic::ConeKind::Psd, cm.size);
    for (const auto& [alpha, entries] : cm.entries) {
      const int r = static_cast<int>(grlex_rank(alpha));
      for (const auto& e : entries) prog.add_coefficient(r, block, e.row, e.col, block_sign * e.value);
    }
  }
  idx.free_block = prog.add_block(conic::ConeKind::Free, 1);
  prog.add_coefficient(0, idx.free_block, 0, 0, 1.0);
  prog.add_cost(idx.free_block, 0, 0, free_cost);
  return prog;
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

PseudoMomentSequence PrimalRelaxation::moments(const conic::ConicSolution& sol) const {
  if (static_cast<std::size_t>(sol.multipliers.size()) != index.num_moments()) {
    throw DimensionError("solution does not belong to this relaxation");
  }
  return PseudoMomentSequence(index.n, index.d,
                              std::vector<double>(sol.multipliers.data(), sol.multipliers.data() + sol.multipliers.size()));
}

PrimalRelaxation build_primal_relaxation(const PopProblem& p, int d) {
  PrimalRelaxation out;
  out.index = make_index(p, d);
  out.program = assemble(p, out.index, -1.0, -1.0, 1.0);
  return out;
}

DualSos build_dual_sos(const PopProblem& p, int d) {
  DualSos out;
  out.index = make_index(p, d);
  out.program = assemble(p, out.index, 1.0, 1.0, -1.0);
  return out;
}

namespace {

// Rank test and, when it passes, extraction. Returns true on success.
bool certify(LevelResult& level, const PseudoMomentSequence& y, int s, const HierarchyOptions& opt) {
  level.rank = rank_test(y, level.d, s, opt.rank_tol);
  level.atoms.reset();
  if (!level.rank->passed || !opt.extract) return level.rank->passed;
  try {
    ExtractionOptions eo;
    eo.seed = opt.seed;
    level.atoms = extract_atoms(y, level.d, level.rank->rank_full, eo);
    return true;
  } catch (const ExtractionFailed& e) {
    level.note = std::string("extraction failed: ") + e.what();
    return false;
  }
}

// min tr(M_d(y)) subject to the relaxation and L(f) <= level.
conic::ConicProgram min_trace_program(const PopProblem& p, const PrimalRelaxation& rel, double level) {
  conic::ConicProgram prog = rel.program;
  for (int r = 0; r < prog.num_constraints(); ++r) prog.set_rhs(r, 0.0);
  for (const auto& beta : canonical_basis(rel.index.n, rel.index.d)) {
    const int r = rel.index.row(beta * beta);
    prog.set_rhs(r, prog.rhs()[static_cast<std::size_t>(r)] - 1.0);
  }
  const int cut = prog.add_block(conic::ConeKind::NonNeg, 1);
  prog.add_cost(cut, 0, 0, level);
  for (const auto& [alpha, c] : p.f.terms()) prog.add_coefficient(rel.index.row(alpha), cut, 0, 0, c);
  return prog;
}

LevelResult solve_level(const PopProblem& p, int d, const HierarchyOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  LevelResult level;
  level.d = d;

  const PrimalRelaxation rel = build_primal_relaxation(p, d);
  const conic::ConicSolution ps = conic::solve(rel.program, opt.solver);
  level.primal_status = ps.status;
  level.primal_iterations = ps.iterations;
  if (ps.status == conic::SolveStatus::PrimalInfeasible) {
    level.rho = kNegInf;
  } else {
    level.rho = rel.bound(ps);
    level.moments = rel.moments(ps);
  }

  const DualSos sos = build_dual_sos(p, d);
  const conic::ConicSolution ds = conic::solve(sos.program, opt.solver);
  level.dual_status = ds.status;
  level.dual_iterations = ds.iterations;
  level.rho_star = ds.status == conic::SolveStatus::PrimalInfeasible ? kNegInf : sos.bound(ds);

  const int s = rank_offset(p);
  if (ps.status != conic::SolveStatus::Optimal) {
    level.note = std::string("moment relaxation: ") + conic::to_string(ps.status);
  } else if (d - s >= 0 && !certify(level, *level.moments, s, opt) && opt.resolve_slack > 0.0) {
    const double cap = level.rho + opt.resolve_slack * (1.0 + std::abs(level.rho));
    const conic::ConicSolution ws = conic::solve(min_trace_program(p, rel, cap), opt.solver);
    if (ws.status == conic::SolveStatus::Optimal) {
      LevelResult trial = level;
      trial.note.clear();
      const PseudoMomentSequence wy = rel.moments(ws);
      if (certify(trial, wy, s, opt)) {
        trial.moments = wy;
        trial.regularized = true;
        level = std::move(trial);
      }
    }
  }
  level.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return level;
}

bool converged(const LevelResult& level, const HierarchyOptions& opt) {
  if (!level.rank || !level.rank->passed) return false;
  return opt.extract ? level.atoms.has_value() : true;
}

}  // namespace

HierarchyResult solve_hierarchy(const PopProblem& p, int d_max, const HierarchyOptions& opt) {
  const int dhat = min_order(p);
  if (d_max < dhat) {
    throw OrderError("maximum order " + std::to_string(d_max) + " is below the minimal order " + std::to_string(dhat));
  }
  HierarchyResult out;
  if (opt.threads <= 1) {
    for (int d = dhat; d <= d_max; ++d) {
      out.levels.push_back(solve_level(p, d, opt));
      if (converged(out.levels.back(), opt)) {
        out.converged_order = d;
        break;
      }
    }
    return out;
  }
  for (int first = dhat; first <= d_max && !out.converged_order; first += opt.threads) {
    std::vector<std::future<LevelResult>> batch;
    for (int d = first; d <= std::min(d_max, first + opt.threads - 1); ++d) {
      batch.push_back(std::async(std::launch::async, solve_level, std::cref(p), d, std::cref(opt)));
    }
    for (auto& f : batch) {
      LevelResult level = f.get();
      if (out.converged_order) continue;
      const bool done = converged(level, opt);
      out.levels.push_back(std::move(level));
      if (done) out.converged_order = out.levels.back().d;
    }
  }
  return out;
}

}  // namespace momentsos
