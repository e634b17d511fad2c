#pragma once

#include "momentsos/conic.hpp"
#include "momentsos/extract.hpp"
#include "momentsos/moments.hpp"
#include "momentsos/poly.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace momentsos {

/// min f(x) over x in S.
struct PopProblem {
  Polynomial f;
  SemialgebraicSet set;

  PopProblem(Polynomial objective, SemialgebraicSet domain);
};

/// ceil(max(deg f, deg g_j) / 2) over all constraints, ball included.
int min_order(const PopProblem& p);

/// Rank-test offset: max_j ceil(deg g_j / 2), or 1 when there are no constraints.
int rank_offset(const PopProblem& p);

/// Rows of a relaxation program are indexed by the moments y_alpha, alpha in
/// canonical_basis(n, 2d); the multipliers of the conic solution are the moments.
struct RelaxationIndex {
  int n = 0;
  int d = 0;
  std::vector<Polynomial> localizers;  ///< g_0 = 1 followed by the constraints
  std::vector<int> block_orders;       ///< d - d_j for each localizer
  int free_block = -1;                 ///< holds the y_0 = 1 multiplier or lambda

  int row(const Monomial& alpha) const;
  std::size_t num_moments() const;
};

/// Moment relaxation rho_d. It is posed as the conic dual of
///   min z  s.t.  sum_j <-B_{g_j,alpha}, X_j> + [alpha = 0] z = -f_alpha,
/// whose dual slacks are the localizing matrices M_{d-d_j}(g_j y) and whose
/// free column enforces y_0 = 1. rho_d = -(dual objective).
struct PrimalRelaxation {
  conic::ConicProgram program;
  RelaxationIndex index;

  /// The pseudo-moment sequence held in a solution's multipliers.
  PseudoMomentSequence moments(const conic::ConicSolution& sol) const;
  double bound(const conic::ConicSolution& sol) const { return -sol.dual_objective; }
};

PrimalRelaxation build_primal_relaxation(const PopProblem& p, int d);

/// SOS strengthening rho*_d: Gram blocks X_j in PSD(s(d - d_j)) and a free lambda with
///   sum_j <B_{g_j,alpha}, X_j> + [alpha = 0] lambda = f_alpha,   min -lambda.
struct DualSos {
  conic::ConicProgram program;
  RelaxationIndex index;

  double bound(const conic::ConicSolution& sol) const { return -sol.primal_objective; }
};

DualSos build_dual_sos(const PopProblem& p, int d);

struct SosTerm {
  Polynomial multiplier = Polynomial(1);  ///< g_j (1 for j = 0)
  std::vector<Polynomial> factors;        ///< sigma_j = sum_k factors_k^2
  Polynomial sigma() const;
};

/// f - lambda = sum_j sigma_j g_j up to the recorded residual.
struct SosCertificate {
  double lambda = 0.0;
  std::vector<SosTerm> terms;
  double residual_norm = 0.0;

  /// f - lambda - sum_j sigma_j g_j.
  Polynomial residual(const Polynomial& f) const;
};

/// Gram-factor eigenvalue cutoff relative to the largest eigenvalue.
inline constexpr double kGramCutoff = 1e-9;
/// Certificates are accepted when the residual norm is at most this times (1 + |f|).
inline constexpr double kCertificateTolerance = 1e-6;

/// Explicit squares from Gram blocks of a build_dual_sos solution. Throws
/// CertificateRejected when the residual check fails.
SosCertificate recover_sos_certificate(const PopProblem& p, int d, const conic::ConicSolution& sol);

struct NotCertified {
  std::string reason;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
  /// Pseudo-moment functional L with L(f) < 0 and M(L) PSD, when the solver found one.
  std::optional<std::vector<double>> evidence;
};

using SosMembership = std::variant<SosCertificate, NotCertified>;

SosMembership sos_membership(const Polynomial& f, const conic::SolverOptions& options = {});

/// Krivine/Handelman-type LP: f - lambda = sum c_{a,b} prod g_j^{a_j} (1 - g_j)^{b_j},
/// c >= 0, |a| + |b| <= k.
struct KrivineLp {
  conic::ConicProgram program;
  std::vector<Polynomial> scaled_constraints;
  std::vector<std::vector<int>> products;  ///< (a, b) exponents per LP column, concatenated
  std::vector<std::string> warnings;
  int lambda_block = -1;

  /// lambda from a solution; -infinity when the LP is infeasible.
  double bound(const conic::ConicSolution& sol) const;
};

struct BoxBounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

/// Upper bound of g over the box by interval arithmetic on monomials.
double interval_upper_bound(const Polynomial& g, const BoxBounds& box);

/// With a box, each g_j is divided by its interval upper bound over the box.
/// Without one the constraints are used as given. Either way 0 <= g_j <= 1 is
/// spot-checked at sampled feasible points and violations become warnings.
KrivineLp build_krivine_lp(const PopProblem& p, int k, const std::optional<BoxBounds>& scaling = std::nullopt,
                           std::uint64_t seed = 1);

struct HierarchyOptions {
  conic::SolverOptions solver;
  bool extract = true;
  std::uint64_t seed = 20240101;
  int threads = 1;
  double rank_tol = kRankTolerance;
  /// When the rank test or extraction fails, minimize tr(M_d(y)) over the relaxation
  /// with L(f) <= rho_d + resolve_slack * (1 + |rho_d|) and retest. Moments of degree 2d
  /// that no localizer reaches are otherwise left at arbitrary large values. 0 disables it.
  double resolve_slack = 1e-7;
};

struct LevelResult {
  int d = 0;
  double rho = 0.0;       ///< moment bound rho_d; -inf when unbounded
  double rho_star = 0.0;  ///< SOS bound rho*_d; -inf when infeasible
  conic::SolveStatus primal_status = conic::SolveStatus::NumericalFailure;
  conic::SolveStatus dual_status = conic::SolveStatus::NumericalFailure;
  int primal_iterations = 0;
  int dual_iterations = 0;
  std::optional<PseudoMomentSequence> moments;
  std::optional<RankReport> rank;
  std::optional<AtomicMeasure> atoms;
  bool regularized = false;  ///< moments, rank and atoms come from the minimum-trace resolve
  std::string note;
  double seconds = 0.0;

  bool certified() const { return rank && rank->passed && atoms.has_value(); }
};

struct HierarchyResult {
  std::vector<LevelResult> levels;
  std::optional<int> converged_order;
};

/// Solves orders min_order..d_max, stopping at the first order whose rank test
/// passes and whose atoms are extracted (or, with extraction off, whose rank test passes).
HierarchyResult solve_hierarchy(const PopProblem& p, int d_max, const HierarchyOptions& options = {});

}  // namespace momentsos
