#include "momentsos/gpm.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace momentsos {

namespace {

constexpr double kNullMeasure = 1e-7;

int support_offset(const SemialgebraicSet& set) {
  int s = 1;
  for (const auto& g : set.all_constraints()) s = std::max(s, half_degree(g));
  return s;
}

bool negligible(const PseudoMomentSequence& y, int d, double scale) {
  return moment_matrix(y, d).cwiseAbs().maxCoeff() <= kNullMeasure * std::max(1.0, scale);
}

// Rank test and extraction of one moment sequence. Returns nullopt and sets note on failure.
std::optional<AtomicMeasure> atoms_of(const PseudoMomentSequence& y, int d, int s, std::optional<RankReport>& report,
                                      std::string& note, const char* label) {
  if (d - s < 0) {
    note = std::string(label) + ": order too low for the rank test";
    return std::nullopt;
  }
  report = rank_test(y, d, s);
  if (!report->passed) {
    note = std::string(label) + ": rank test failed at order " + std::to_string(d) + "; try order " +
           std::to_string(d + 1);
    return std::nullopt;
  }
  try {
    return extract_atoms(y, d, report->rank_full);
  } catch (const ExtractionFailed& e) {
    note = std::string(label) + ": extraction failed: " + e.what();
    return std::nullopt;
  }
}

double reproduction_error(const AtomicMeasure& m, const std::vector<KnownMoment>& moments) {
  double err = 0.0;
  for (const auto& mo : moments) {
    double v = 0.0;
    for (const auto& a : m.atoms) v += a.weight * mo.alpha.eval(a.point);
    err = std::max(err, std::abs(v - mo.value));
  }
  return err;
}

// d/dx_j of x^alpha at x.
double monomial_partial(const Monomial& alpha, const std::vector<double>& x, int j) {
  const int e = alpha.exponents[static_cast<std::size_t>(j)];
  if (e == 0) return 0.0;
  double v = e;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int p = alpha.exponents[i] - (static_cast<int>(i) == j ? 1 : 0);
    v *= std::pow(x[i], p);
  }
  return v;
}

// Drops atoms carrying a negligible share of the total variation, then polishes
// points and weights against the data by Gauss-Newton. Degenerate dual
// certificates leave atoms of weight about sqrt(mu) where the certificate
// touches its bound, and perturb the others by as much.
void prune_and_polish(AtomicMeasure& m, const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega,
                      double tv) {
  constexpr double kNegligibleAtom = 1e-4;
  constexpr int kPolishSteps = 20;
  const auto before = m.atoms.size();
  std::erase_if(m.atoms, [&](const Atom& a) { return std::abs(a.weight) <= kNegligibleAtom * std::max(1.0, tv); });
  if (m.atoms.size() == before || m.atoms.empty()) return;
  const int n = omega.num_vars();
  const auto atoms = static_cast<long>(m.atoms.size());
  const long unknowns = atoms * (n + 1);
  double err = reproduction_error(m, moments);
  for (int step = 0; step < kPolishSteps && err > 0.0; ++step) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<long>(moments.size()), unknowns);
    Eigen::VectorXd r(static_cast<long>(moments.size()));
    for (std::size_t i = 0; i < moments.size(); ++i) {
      const auto row = static_cast<long>(i);
      double v = 0.0;
      for (long k = 0; k < atoms; ++k) {
        const Atom& a = m.atoms[static_cast<std::size_t>(k)];
        const double xa = moments[i].alpha.eval(a.point);
        v += a.weight * xa;
        jac(row, k * (n + 1)) = xa;
        for (int j = 0; j < n; ++j) jac(row, k * (n + 1) + 1 + j) = a.weight * monomial_partial(moments[i].alpha, a.point, j);
      }
      r(row) = moments[i].value - v;
    }
    const Eigen::VectorXd delta = jac.completeOrthogonalDecomposition().solve(r);
    AtomicMeasure trial = m;
    for (long k = 0; k < atoms; ++k) {
      Atom& a = trial.atoms[static_cast<std::size_t>(k)];
      a.weight += delta(k * (n + 1));
      for (int j = 0; j < n; ++j) a.point[static_cast<std::size_t>(j)] += delta(k * (n + 1) + 1 + j);
    }
    const double trial_err = reproduction_error(trial, moments);
    const bool inside = std::all_of(trial.atoms.begin(), trial.atoms.end(),
                                    [&](const Atom& a) { return omega.contains(a.point, 1e-9); });
    if (!inside || !(trial_err < err)) break;
    m = std::move(trial);
    err = trial_err;
  }
}

void check_moments(const std::vector<KnownMoment>& moments, int n) {
  for (const auto& m : moments) {
    if (m.alpha.num_vars() != n) throw DimensionError("known moment has the wrong number of variables");
  }
}

}  // namespace

GpmProblem probability_problem(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega1,
                               const SemialgebraicSet& omega2, Direction direction) {
  const int n = omega1.num_vars();
  if (omega2.num_vars() != n) throw DimensionError("omega1 and omega2 have different dimensions");
  check_moments(moments, n);
  const auto mass = std::find_if(moments.begin(), moments.end(), [](const KnownMoment& m) { return m.alpha.is_zero(); });
  if (mass == moments.end() || mass->value != 1.0) throw ModelError("the known moments must include b_0 = 1");
  GpmProblem g;
  g.sense = direction == Direction::Upper ? Sense::Maximize : Sense::Minimize;
  g.measures.push_back({omega1, Polynomial(n)});
  g.measures.push_back({omega2, Polynomial::constant(n, 1.0)});
  for (const auto& m : moments) {
    const Polynomial xa = Polynomial::term(m.alpha, 1.0);
    g.equalities.push_back({{xa, xa}, m.value});
  }
  return g;
}

BoundEntry probability_bound(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega1,
                             const SemialgebraicSet& omega2, int d, Direction direction,
                             const conic::SolverOptions& options) {
  const GpmResult r = solve_gpm(probability_problem(moments, omega1, omega2, direction), d, options);
  BoundEntry e;
  e.d = d;
  e.bound = r.bound;
  e.status = r.status;
  e.note = r.note;
  if (r.status != conic::SolveStatus::Optimal) return e;
  const PseudoMomentSequence& y2 = r.moments[1];
  if (negligible(y2, d, 1.0)) return e;
  std::optional<RankReport> report;
  std::string note;
  e.atoms = atoms_of(y2, d, support_offset(omega2), report, note, "phi_2");
  if (!note.empty()) e.note = note;
  return e;
}

VolumeProblem volume_problem(const SemialgebraicSet& omega2, const BoxBounds& box, int d, bool stokes) {
  const int n = omega2.num_vars();
  if (box.lo.size() != static_cast<std::size_t>(n) || box.hi.size() != box.lo.size()) {
    throw DimensionError("box dimension does not match omega2");
  }
  std::vector<double> center(static_cast<std::size_t>(n));
  std::vector<double> half(static_cast<std::size_t>(n));
  VolumeProblem out;
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (!(box.lo[i] < box.hi[i]) || !std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i])) {
      throw ModelError("box bounds must be finite with lo < hi");
    }
    center[i] = 0.5 * (box.lo[i] + box.hi[i]);
    half[i] = 0.5 * (box.hi[i] - box.lo[i]);
    out.jacobian *= half[i];
  }

  // Work on u in [-1, 1]^n with x = center + half * u.
  std::vector<Polynomial> cube;
  for (int i = 0; i < n; ++i) {
    Polynomial c = Polynomial::constant(n, 1.0);
    c.add_term(Monomial::unit(n, i) * Monomial::unit(n, i), -1.0);
    cube.push_back(std::move(c));
  }
  std::vector<Polynomial> inner;
  for (const auto& g : omega2.all_constraints()) inner.push_back(g.affine_substitute(center, half));
  if (stokes && inner.empty()) throw ModelError("Stokes constraints need a constraint polynomial for omega2");
  const Polynomial first = stokes ? inner.front() : Polynomial(n);
  for (const auto& c : cube) inner.push_back(c);

  GpmProblem& g = out.problem;
  g.sense = Sense::Maximize;
  g.measures.push_back({SemialgebraicSet(n, cube), Polynomial(n)});
  g.measures.push_back({SemialgebraicSet(n, inner), Polynomial::constant(n, 1.0)});
  const UniformBox reference{std::vector<double>(static_cast<std::size_t>(n), -1.0),
                             std::vector<double>(static_cast<std::size_t>(n), 1.0), false};
  for (const auto& alpha : canonical_basis(n, 2 * d)) {
    const Polynomial xa = Polynomial::term(alpha, 1.0);
    g.equalities.push_back({{xa, xa}, measure_moment(reference, alpha)});
  }
  if (stokes) {
    for (const auto& p : stokes_constraints(first, d)) g.equalities.push_back({{Polynomial(n), p}, 0.0});
  }
  return out;
}

BoundEntry volume(const SemialgebraicSet& omega2, const BoxBounds& box, int d, bool stokes,
                  const conic::SolverOptions& options) {
  const VolumeProblem v = volume_problem(omega2, box, d, stokes);
  const GpmResult r = solve_gpm(v.problem, d, options);
  BoundEntry e;
  e.d = d;
  e.status = r.status;
  e.bound = r.bound * v.jacobian;
  e.note = r.note;
  return e;
}

BoundSequence volume_sequence(const SemialgebraicSet& omega2, const BoxBounds& box, int d_max, bool stokes,
                              const conic::SolverOptions& options) {
  int dhat = 1;
  for (const auto& g : omega2.all_constraints()) dhat = std::max(dhat, half_degree(g));
  if (d_max < dhat) throw OrderError("maximum order is below the minimal order " + std::to_string(dhat));
  BoundSequence seq;
  seq.direction = Direction::Upper;
  for (int d = dhat; d <= d_max; ++d) seq.entries.push_back(volume(omega2, box, d, stokes, options));
  return seq;
}

GpmProblem super_resolution_problem(const std::vector<KnownMoment>& moments, const SemialgebraicSet& omega) {
  const int n = omega.num_vars();
  check_moments(moments, n);
  GpmProblem g;
  g.sense = Sense::Minimize;
  const auto one = Polynomial::constant(n, 1.0);
  g.measures.push_back({omega, one});
  g.measures.push_back({omega, one});
  for (const auto& m : moments) {
    const Polynomial xa = Polynomial::term(m.alpha, 1.0);
    g.equalities.push_back({{xa, -xa}, m.value});
  }
  return g;
}

SuperResolutionResult super_resolution(const std::vector<KnownMoment>& moments, int t, const SemialgebraicSet& omega,
                                       int d, const conic::SolverOptions& options) {
  const int n = omega.num_vars();
  check_moments(moments, n);
  if (t < 0) throw OrderError("moment order t must be non-negative");
  if (d < (t + 1) / 2) throw OrderError("super-resolution needs d >= ceil(t / 2)");
  for (const auto& m : moments) {
    if (m.alpha.degree() > t) throw DegreeError("known moment exceeds the order t");
  }
  SuperResolutionResult out;
  out.d = d;
  const GpmResult r = solve_gpm(super_resolution_problem(moments, omega), d, options);
  out.status = r.status;
  out.tv_bound = r.bound;
  out.note = r.note;
  if (r.status != conic::SolveStatus::Optimal) return out;

  const int s = 1;
  AtomicMeasure signed_measure;
  std::string note;
  for (int part = 0; part < 2; ++part) {
    const PseudoMomentSequence& y = r.moments[static_cast<std::size_t>(part)];
    std::optional<RankReport>& report = part == 0 ? out.rank_plus : out.rank_minus;
    if (negligible(y, d, out.tv_bound)) {
      report = RankReport{};
      report->d = d;
      report->s = s;
      report->passed = true;
      continue;
    }
    const auto atoms = atoms_of(y, d, s, report, note, part == 0 ? "phi+" : "phi-");
    if (!atoms) {
      out.note = note;
      return out;
    }
    for (const auto& a : atoms->atoms) signed_measure.atoms.push_back({a.point, part == 0 ? a.weight : -a.weight});
  }

  prune_and_polish(signed_measure, moments, omega, out.tv_bound);
  for (const auto& m : moments) {
    double v = 0.0;
    for (const auto& a : signed_measure.atoms) v += a.weight * m.alpha.eval(a.point);
    out.residual = std::max(out.residual, std::abs(v - m.value));
  }
  constexpr double kReproduction = 1e-5;
  if (out.residual > kReproduction) {
    out.note = "extracted measure misses the moments by " + std::to_string(out.residual);
    return out;
  }
  out.measure = std::move(signed_measure);
  return out;
}

}  // namespace momentsos
