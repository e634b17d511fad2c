#include "momentsos/extract.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace momentsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

NumericalRank numerical_rank(const MatrixXd& m, double tol_rel) {
  NumericalRank out;
  if (m.rows() != m.cols()) throw DimensionError("numerical_rank expects a square matrix");
  if (m.rows() == 0) {
    out.singular_values = VectorXd(0);
    return out;
  }
  const MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  VectorXd sv = es.eigenvalues().cwiseAbs();
  std::sort(sv.data(), sv.data() + sv.size(), std::greater<>());
  out.singular_values = sv;
  const double cut = tol_rel * sv(0) * static_cast<double>(m.rows());
  for (long i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++out.rank;
  }
  return out;
}

RankReport rank_test(const PseudoMomentSequence& y, int d, int s, double tol_rel) {
  if (s < 0 || d - s < 0) throw OrderError("rank_test requires 0 <= s <= d");
  if (d > y.order()) throw DegreeError("rank_test order exceeds the moment sequence's order");
  RankReport r;
  r.d = d;
  r.s = s;
  const NumericalRank full = numerical_rank(moment_matrix(y, d), tol_rel);
  const NumericalRank sub = numerical_rank(moment_matrix(y, d - s), tol_rel);
  r.rank_full = full.rank;
  r.rank_sub = sub.rank;
  r.singular_values_full = full.singular_values;
  r.singular_values_sub = sub.singular_values;
  r.passed = r.rank_full == r.rank_sub;
  return r;
}

namespace {

// Reduced column echelon form of v (rows in grlex order). Returns pivot rows.
std::vector<int> column_echelon(MatrixXd& v, double tol) {
  const long rows = v.rows();
  const long t = v.cols();
  std::vector<int> pivots;
  const double scale = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  long col = 0;
  for (long r = 0; r < rows && col < t; ++r) {
    long best = col;
    for (long c = col + 1; c < t; ++c) {
      if (std::abs(v(r, c)) > std::abs(v(r, best))) best = c;
    }
    if (std::abs(v(r, best)) <= tol * scale) {
      v.block(r, col, 1, t - col).setZero();
      continue;
    }
    v.col(col).swap(v.col(best));
    v.col(col) /= v(r, col);
    for (long c = 0; c < t; ++c) {
      if (c != col) v.col(c) -= v(r, c) * v.col(col);
    }
    pivots.push_back(static_cast<int>(r));
    ++col;
  }
  return pivots;
}

}  // namespace

AtomicMeasure extract_atoms(const PseudoMomentSequence& y, int d, int t, const ExtractionOptions& options) {
  if (d < 1) throw OrderError("extraction requires d >= 1");
  if (d > y.order()) throw DegreeError("extraction order exceeds the moment sequence's order");
  const int n = y.num_vars();
  const auto basis = canonical_basis(n, d);
  const int s = static_cast<int>(basis.size());
  if (t < 1 || t > s) throw ExtractionFailed("rank " + std::to_string(t) + " is outside [1, s(d)]");

  // (1) column space of M_d(y) from the t dominant eigenpairs (by magnitude, so signed measures work).
  const MatrixXd m = moment_matrix(y, d);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success) throw ExtractionFailed("eigendecomposition of the moment matrix failed");
  std::vector<int> order(static_cast<std::size_t>(s));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(es.eigenvalues()(a)) > std::abs(es.eigenvalues()(b));
  });
  MatrixXd v(s, t);
  for (int k = 0; k < t; ++k) {
    const double lam = std::abs(es.eigenvalues()(order[static_cast<std::size_t>(k)]));
    v.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]) * std::sqrt(lam);
  }

  // (2) echelon form identifies the monomial basis B.
  const std::vector<int> pivots = column_echelon(v, options.pivot_tol);
  if (static_cast<int>(pivots.size()) != t) {
    throw ExtractionFailed("column echelon form found " + std::to_string(pivots.size()) + " pivots, expected " +
                           std::to_string(t));
  }

  // (3) multiplication matrices from the rows of x_i * b, b in B.
  std::vector<MatrixXd> mult(static_cast<std::size_t>(n), MatrixXd(t, t));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < t; ++k) {
      const Monomial& b = basis[static_cast<std::size_t>(pivots[static_cast<std::size_t>(k)])];
      const Monomial shifted = b * Monomial::unit(n, i);
      if (shifted.degree() > d) {
        throw ExtractionFailed("monomial basis reaches degree " + std::to_string(b.degree()) +
                               "; a higher relaxation order is needed");
      }
      mult[static_cast<std::size_t>(i)].row(k) = v.row(static_cast<long>(grlex_rank(shifted)));
    }
  }

  // (4)-(5) real Schur form of a random convex combination.
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd c(n);
  for (int i = 0; i < n; ++i) c(i) = unif(rng);
  c /= c.sum();
  MatrixXd combo = MatrixXd::Zero(t, t);
  for (int i = 0; i < n; ++i) combo += c(i) * mult[static_cast<std::size_t>(i)];
  Eigen::RealSchur<MatrixXd> schur(combo);
  if (schur.info() != Eigen::Success) throw ExtractionFailed("real Schur decomposition did not converge");
  const MatrixXd& tri = schur.matrixT();
  for (int k = 0; k + 1 < t; ++k) {
    if (std::abs(tri(k + 1, k)) > 1e-10 * std::max(1.0, tri.cwiseAbs().maxCoeff())) {
      throw ExtractionFailed("multiplication matrix has complex eigenvalues");
    }
  }
  const MatrixXd& q = schur.matrixU();

  // (6) coordinates.
  std::vector<std::vector<double>> points(static_cast<std::size_t>(t), std::vector<double>(static_cast<std::size_t>(n)));
  for (int k = 0; k < t; ++k) {
    for (int i = 0; i < n; ++i) {
      points[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
          q.col(k).dot(mult[static_cast<std::size_t>(i)] * q.col(k));
    }
  }
  std::sort(points.begin(), points.end());

  // (7) weights by least squares on all moments up to 2d.
  const auto full = canonical_basis(n, 2 * d);
  MatrixXd vander(static_cast<long>(full.size()), t);
  VectorXd rhs(static_cast<long>(full.size()));
  for (std::size_t a = 0; a < full.size(); ++a) {
    rhs(static_cast<long>(a)) = y.values()[a];
    for (int k = 0; k < t; ++k) vander(static_cast<long>(a), k) = full[a].eval(points[static_cast<std::size_t>(k)]);
  }
  const VectorXd theta = vander.colPivHouseholderQr().solve(rhs);
  const double mismatch = (vander * theta - rhs).cwiseAbs().maxCoeff();
  const double bound = options.mismatch_tol * (1.0 + rhs.cwiseAbs().maxCoeff());
  if (!(mismatch <= bound)) {
    throw ExtractionFailed("extracted measure misses the moments by " + std::to_string(mismatch));
  }

  AtomicMeasure out;
  for (int k = 0; k < t; ++k) out.atoms.push_back({points[static_cast<std::size_t>(k)], theta(k)});
  return out;
}

}  // namespace momentsos
