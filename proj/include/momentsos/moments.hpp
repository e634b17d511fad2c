#pragma once

#include "momentsos/poly.hpp"

#include <Eigen/Dense>

#include <map>
#include <span>
#include <variant>
#include <vector>

namespace momentsos {

/// Entry of a sparse symmetric matrix, upper triangle only (row <= col).
struct SymEntry {
  int row;
  int col;
  double value;
};
using SparseSym = std::vector<SymEntry>;

Eigen::MatrixXd to_dense(const SparseSym& m, int size);

/// Truncated sequence y = (y_alpha), |alpha| <= 2 * order, stored densely in
/// canonical_basis(n, 2 * order) order. Missing moments are an error, never zero.
class PseudoMomentSequence {
 public:
  PseudoMomentSequence(int n, int order, std::vector<double> values);

  int num_vars() const { return n_; }
  int order() const { return order_; }
  int max_degree() const { return 2 * order_; }
  std::span<const double> values() const { return values_; }

  /// y_alpha; throws DegreeError when |alpha| > 2 * order.
  double at(const Monomial& alpha) const;
  double mass() const { return values_.front(); }

  /// Same moments viewed at a lower order.
  PseudoMomentSequence truncated(int order) const;

 private:
  int n_;
  int order_;
  std::vector<double> values_;
};

/// B_{g,alpha} for every alpha with a nonzero matrix: g(x) v_d(x) v_d(x)^T = sum B_{g,alpha} x^alpha.
struct CoefficientMatrixSet {
  Polynomial g;
  int d;
  int size;  ///< s(d)
  std::map<Monomial, SparseSym, GrlexLess> entries;

  Eigen::MatrixXd dense(const Monomial& alpha) const;
};

CoefficientMatrixSet coefficient_matrices(const Polynomial& g, int d);

/// L_y(f) = sum_alpha f_alpha y_alpha.
double riesz(const PseudoMomentSequence& y, const Polynomial& f);

/// M_d(y), entries y_{beta_i + beta_j}.
Eigen::MatrixXd moment_matrix(const PseudoMomentSequence& y, int d);

/// M_d(g y), entries sum_gamma g_gamma y_{beta_i + beta_j + gamma}.
Eigen::MatrixXd localizing_matrix(const PseudoMomentSequence& y, const Polynomial& g, int d);

struct Atom {
  std::vector<double> point;
  double weight;
};

/// Finitely supported signed measure sum_k theta_k delta_{x_k}.
struct AtomicMeasure {
  std::vector<Atom> atoms;

  double total_variation() const;
  double mass() const;
  int dim() const;
};

/// Lebesgue measure on a box; divided by the box volume when normalized.
struct UniformBox {
  std::vector<double> lo;
  std::vector<double> hi;
  bool normalized = false;

  double volume() const;
};

using ReferenceMeasure = std::variant<UniformBox, AtomicMeasure>;

/// Closed-form moments of a reference measure up to degree 2 * order.
PseudoMomentSequence measure_moments(const ReferenceMeasure& measure, int n, int order);

/// Moments of a reference measure for an arbitrary list of exponents.
double measure_moment(const ReferenceMeasure& measure, const Monomial& alpha);

}  // namespace momentsos
