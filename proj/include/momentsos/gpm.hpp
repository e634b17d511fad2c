#pragma once

#include "momentsos/conic.hpp"
#include "momentsos/extract.hpp"
#include "momentsos/hierarchy.hpp"
#include "momentsos/moments.hpp"
#include "momentsos/poly.hpp"

#include <optional>
#include <string>
#include <vector>

namespace momentsos {

enum class Sense { Minimize, Maximize };

struct GpmMeasure {
  SemialgebraicSet support;
  Polynomial cost;
};

/// sum_i L_{y_i}(terms[i]) compared with rhs. A zero polynomial leaves measure i out.
struct GpmConstraint {
  std::vector<Polynomial> terms;
  double rhs = 0.0;

  int degree() const;
};

/// Optimization over measures phi_i >= 0 supported on their sets:
///   min/max sum_i <cost_i, phi_i>
///   s.t.    sum_i <h_ik, phi_i> = c_k,   sum_i <f_ij, phi_i> >= b_j.
struct GpmProblem {
  std::vector<GpmMeasure> measures;
  std::vector<GpmConstraint> equalities;
  std::vector<GpmConstraint> inequalities;
  Sense sense = Sense::Minimize;

  /// Throws DimensionError on shape mismatches.
  void validate() const;
};

/// ceil(max(deg cost_i, deg g_il) / 2), at least 1.
int gpm_min_order(const GpmProblem& g);

/// Level-d relaxation. Moments of measure i occupy rows row_offset[i] ..
/// row_offset[i] + s(2d) - 1 and are the multipliers of the conic solution, as in
/// build_primal_relaxation. Equalities enter as one Free block (dependent rows are
/// dropped), inequalities as one NonNeg block. Only constraints of degree <= 2d enter.
struct GpmRelaxation {
  conic::ConicProgram program;
  int d = 0;
  Sense sense = Sense::Minimize;
  std::vector<int> num_vars;
  std::vector<int> row_offset;
  std::vector<int> equalities_used;    ///< indices into GpmProblem::equalities
  std::vector<int> inequalities_used;  ///< indices into GpmProblem::inequalities
  int equality_block = -1;
  int inequality_block = -1;
  /// Dependent equalities disagree with the independent ones; the level is infeasible.
  bool inconsistent = false;

  std::vector<PseudoMomentSequence> moments(const conic::ConicSolution& sol) const;
  /// Objective value; +-infinity when unbounded, NaN when infeasible or unsolved.
  double bound(const conic::ConicSolution& sol) const;
};

/// Throws ModelError when some measure's mass is not bounded by a constraint
/// entering at level d (an equality with a constant term, or an inequality
/// with a negative constant term), and OrderError when d < gpm_min_order.
GpmRelaxation build_gpm_relaxation(const GpmProblem& g, int d);

struct GpmResult {
  int d = 0;
  double bound = 0.0;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
  int iterations = 0;
  std::vector<PseudoMomentSequence> moments;
  std::string note;
};

GpmResult solve_gpm(const GpmProblem& g, int d, const conic::SolverOptions& options = {});

/// Coefficient vectors of d/dx_i (g x^alpha) for i < n and |alpha| <= 2d - deg g - 1.
/// Each integrates to zero over {g >= 0} when g vanishes on its boundary.
std::vector<Polynomial> stokes_constraints(const Polynomial& g, int d);

enum class Direction { Upper, Lower };

struct BoundEntry {
  int d = 0;
  double bound = 0.0;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
  std::optional<AtomicMeasure> atoms;
  std::string note;
};

/// Non-increasing for upper bounds, non-decreasing for lower bounds.
struct BoundSequence {
  Direction direction = Direction::Upper;
  std::vector<BoundEntry> entries;

  bool monotone(double slack = 1e-7) const;
};

struct KnownMoment {
  Monomial alpha;
  double value;
};

/// Two measures phi_1 on omega1 and phi_2 on omega2 whose moments add up to the
/// known ones; the objective is the mass of phi_2.
GpmProblem probability_problem(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega1,
                               const SemialgebraicSet& omega2, Direction direction = Direction::Upper);

/// Bound on Prob(Z in omega2) over all distributions on omega1 with the given
/// moments (b_0 = 1 required). Atoms of phi_2 are extracted when its rank test passes.
BoundEntry probability_bound(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega1,
                             const SemialgebraicSet& omega2, int d, Direction direction = Direction::Upper,
                             const conic::SolverOptions& options = {});

/// The program behind volume() at order d, posed on [-1, 1]^n. Its optimal value
/// times jacobian bounds the volume.
struct VolumeProblem {
  GpmProblem problem;
  double jacobian = 1.0;
};

VolumeProblem volume_problem(const SemialgebraicSet& omega2, const BoxBounds& box, int d, bool stokes);

/// Upper bound on the Lebesgue volume of omega2, which must lie inside the box.
/// Computed on [-1, 1]^n after an affine change of variables and scaled back.
/// With stokes, the first constraint of omega2 must vanish on the set's boundary.
BoundEntry volume(const SemialgebraicSet& omega2, const BoxBounds& box, int d, bool stokes,
                  const conic::SolverOptions& options = {});

/// volume() for every order from the minimal one to d_max.
BoundSequence volume_sequence(const SemialgebraicSet& omega2, const BoxBounds& box, int d_max, bool stokes,
                              const conic::SolverOptions& options = {});

struct SuperResolutionResult {
  int d = 0;
  double tv_bound = 0.0;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
  std::optional<RankReport> rank_plus;
  std::optional<RankReport> rank_minus;
  /// phi+ - phi-, present when both rank tests pass and extraction succeeds.
  std::optional<AtomicMeasure> measure;
  /// max |sum_k theta_k x_k^alpha - b_alpha| over the given moments.
  double residual = 0.0;
  std::string note;
};

/// Measures phi+ and phi- on omega with phi+ - phi- matching the moments; the objective is their total mass.
GpmProblem super_resolution_problem(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega);

/// Minimum total variation signed measure on omega with the given moments of degree <= t.
SuperResolutionResult super_resolution(const std::vector<KnownMoment>& moments, int t, const SemialgebraicSet& omega,
                                       int d, const conic::SolverOptions& options = {});

}  // namespace momentsos
