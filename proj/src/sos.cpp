#include "momentsos/hierarchy.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace momentsos {

Polynomial SosTerm::sigma() const {
  Polynomial s(multiplier.num_vars());
  for (const auto& q : factors) s += q * q;
  return s;
}

Polynomial SosCertificate::residual(const Polynomial& f) const {
  Polynomial r = f - Polynomial::constant(f.num_vars(), lambda);
  for (const auto& t : terms) r = r - t.sigma() * t.multiplier;
  return r;
}

namespace {

std::vector<Polynomial> gram_factors(const Eigen::MatrixXd& gram, const std::vector<Monomial>& basis, int n) {
  std::vector<Polynomial> out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (gram + gram.transpose()));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
  if (!(top > 0.0)) return out;
  for (long k = ev.size() - 1; k >= 0; --k) {
    if (!(ev(k) > kGramCutoff * top)) break;
    Polynomial q(n);
    const double scale = std::sqrt(ev(k));
    for (std::size_t i = 0; i < basis.size(); ++i) q.add_term(basis[i], scale * es.eigenvectors()(static_cast<long>(i), k));
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace

SosCertificate recover_sos_certificate(const PopProblem& p, int d, const conic::ConicSolution& sol) {
  const DualSos sos = build_dual_sos(p, d);
  if (sol.status != conic::SolveStatus::Optimal) {
    throw CertificateRejected(std::string("solution status is ") + conic::to_string(sol.status));
  }
  if (sol.primal.size() != sos.program.blocks().size()) {
    throw DimensionError("solution does not belong to the SOS program of this order");
  }
  const int n = p.f.num_vars();
  SosCertificate cert;
  cert.lambda = sol.primal[static_cast<std::size_t>(sos.index.free_block)](0, 0);
  for (std::size_t j = 0; j < sos.index.localizers.size(); ++j) {
    SosTerm term;
    term.multiplier = sos.index.localizers[j];
    term.factors = gram_factors(sol.primal[j], canonical_basis(n, sos.index.block_orders[j]), n);
    cert.terms.push_back(std::move(term));
  }
  cert.residual_norm = cert.residual(p.f).coefficient_norm();
  const double limit = kCertificateTolerance * (1.0 + p.f.coefficient_norm());
  if (!(cert.residual_norm <= limit)) {
    throw CertificateRejected("certificate residual " + std::to_string(cert.residual_norm) + " exceeds " +
                              std::to_string(limit));
  }
  return cert;
}

namespace {

// Drops alpha while x^(2 alpha) is absent from f and no other pair of basis
// monomials sums to 2 alpha: the Gram diagonal entry, and with it the row, must vanish.
std::vector<Monomial> pruned_basis(const Polynomial& f, std::vector<Monomial> basis) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const Monomial twice = basis[a] * basis[a];
      if (f.coefficient(twice) != 0.0) continue;
      bool crossed = false;
      for (std::size_t i = 0; i < basis.size() && !crossed; ++i) {
        for (std::size_t j = i + 1; j < basis.size() && !crossed; ++j) crossed = basis[i] * basis[j] == twice;
      }
      if (crossed) continue;
      basis.erase(basis.begin() + static_cast<long>(a));
      changed = true;
      break;
    }
  }
  return basis;
}

// min trace(X)  s.t.  sum_{beta + gamma = alpha} X_{beta gamma} = f_alpha for every |alpha| <= 2d.
conic::ConicProgram gram_program(const Polynomial& f, int d, const std::vector<Monomial>& basis) {
  conic::ConicProgram prog;
  const int size = static_cast<int>(basis.size());
  const int block = prog.add_block(conic::ConeKind::Psd, std::max(size, 1));
  for (const auto& alpha : canonical_basis(f.num_vars(), 2 * d)) prog.add_constraint(f.coefficient(alpha));
  for (int i = 0; i < size; ++i) {
    for (int j = i; j < size; ++j) {
      const auto row = static_cast<int>(grlex_rank(basis[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(j)]));
      prog.add_coefficient(row, block, i, j, 1.0);
    }
    prog.add_cost(block, i, i, 1.0);
  }
  return prog;
}

}  // namespace

SosMembership sos_membership(const Polynomial& f, const conic::SolverOptions& options) {
  if (f.degree() % 2 != 0) {
    return NotCertified{"odd degree " + std::to_string(f.degree()) + " polynomial cannot be a sum of squares",
                        conic::SolveStatus::NumericalFailure, std::nullopt};
  }
  const int n = f.num_vars();
  const int d = f.degree() / 2;
  const std::vector<Monomial> full = canonical_basis(n, d);
  std::vector<Monomial> basis = pruned_basis(f, full);
  if (basis.empty()) basis = full;

  conic::ConicSolution sol = conic::solve(gram_program(f, d, basis), options);
  if (sol.status == conic::SolveStatus::PrimalInfeasible && basis.size() < full.size()) {
    // The pruned rows are forced to zero, so infeasibility carries over. Solving
    // again on the full basis gives a separating functional with a full moment matrix.
    basis = full;
    sol = conic::solve(gram_program(f, d, basis), options);
  }
  if (sol.status == conic::SolveStatus::PrimalInfeasible) {
    NotCertified nc{"no Gram matrix exists: a nonnegative pseudo-moment functional is negative on f",
                    sol.status, std::nullopt};
    if (sol.dual_ray) {
      std::vector<double> ev(static_cast<std::size_t>(sol.dual_ray->size()));
      for (long i = 0; i < sol.dual_ray->size(); ++i) ev[static_cast<std::size_t>(i)] = -(*sol.dual_ray)(i);
      nc.evidence = std::move(ev);
    }
    return nc;
  }
  if (sol.status != conic::SolveStatus::Optimal) {
    return NotCertified{std::string("solver stopped with status ") + conic::to_string(sol.status), sol.status,
                        std::nullopt};
  }
  SosCertificate cert;
  SosTerm term;
  term.multiplier = Polynomial::constant(n, 1.0);
  term.factors = gram_factors(sol.primal[0], basis, n);
  cert.terms.push_back(std::move(term));
  cert.residual_norm = cert.residual(f).coefficient_norm();
  if (!(cert.residual_norm <= kCertificateTolerance * (1.0 + f.coefficient_norm()))) {
    return NotCertified{"Gram factorization residual " + std::to_string(cert.residual_norm) + " is too large",
                        sol.status, std::nullopt};
  }
  return cert;
}

}  // namespace momentsos
