#include "momentsos/moments.hpp"

#include <cmath>
#include <string>

namespace momentsos {

Eigen::MatrixXd to_dense(const SparseSym& m, int size) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size, size);
  for (const auto& e : m) {
    out(e.row, e.col) += e.value;
    if (e.row != e.col) out(e.col, e.row) += e.value;
  }
  return out;
}

PseudoMomentSequence::PseudoMomentSequence(int n, int order, std::vector<double> values)
    : n_(n), order_(order), values_(std::move(values)) {
  if (order < 0) throw std::invalid_argument("moment order must be non-negative");
  if (values_.size() != basis_size(n, 2 * order)) {
    throw DimensionError("pseudo-moment vector length " + std::to_string(values_.size()) +
                         " does not match basis size " + std::to_string(basis_size(n, 2 * order)));
  }
}

double PseudoMomentSequence::at(const Monomial& alpha) const {
  if (alpha.num_vars() != n_) throw DimensionError("moment index has the wrong dimension");
  if (alpha.degree() > max_degree()) {
    throw DegreeError("moment of degree " + std::to_string(alpha.degree()) +
                      " requested from a sequence truncated at degree " + std::to_string(max_degree()));
  }
  return values_[grlex_rank(alpha)];
}

PseudoMomentSequence PseudoMomentSequence::truncated(int order) const {
  if (order > order_) throw DegreeError("cannot extend a truncated moment sequence");
  std::vector<double> v(values_.begin(),
                        values_.begin() + static_cast<std::ptrdiff_t>(basis_size(n_, 2 * order)));
  return PseudoMomentSequence(n_, order, std::move(v));
}

Eigen::MatrixXd CoefficientMatrixSet::dense(const Monomial& alpha) const {
  auto it = entries.find(alpha);
  if (it == entries.end()) return Eigen::MatrixXd::Zero(size, size);
  return to_dense(it->second, size);
}

CoefficientMatrixSet coefficient_matrices(const Polynomial& g, int d) {
  if (d < 0) throw std::invalid_argument("coefficient_matrices requires d >= 0");
  const int n = g.num_vars();
  const auto basis = canonical_basis(n, d);
  CoefficientMatrixSet out{g, d, static_cast<int>(basis.size()), {}};
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i; j < basis.size(); ++j) {
      const Monomial bij = basis[i] * basis[j];
      for (const auto& [gamma, coeff] : g.terms()) {
        out.entries[bij * gamma].push_back({static_cast<int>(i), static_cast<int>(j), coeff});
      }
    }
  }
  return out;
}

double riesz(const PseudoMomentSequence& y, const Polynomial& f) {
  if (f.num_vars() != y.num_vars()) throw DimensionError("riesz: variable count mismatch");
  if (f.degree() > y.max_degree()) {
    throw DegreeError("riesz: polynomial degree " + std::to_string(f.degree()) +
                      " exceeds moment degree " + std::to_string(y.max_degree()));
  }
  double v = 0.0;
  for (const auto& [alpha, c] : f.terms()) v += c * y.values()[grlex_rank(alpha)];
  return v;
}

Eigen::MatrixXd moment_matrix(const PseudoMomentSequence& y, int d) {
  if (d > y.order()) throw DegreeError("moment_matrix: order exceeds the sequence's order");
  return localizing_matrix(y, Polynomial::constant(y.num_vars(), 1.0), d);
}

Eigen::MatrixXd localizing_matrix(const PseudoMomentSequence& y, const Polynomial& g, int d) {
  if (g.num_vars() != y.num_vars()) throw DimensionError("localizing_matrix: variable count mismatch");
  if (d < 0 || 2 * d + g.degree() > y.max_degree()) {
    throw DegreeError("localizing_matrix: 2d + deg(g) exceeds the sequence's degree");
  }
  const auto basis = canonical_basis(y.num_vars(), d);
  const int s = static_cast<int>(basis.size());
  Eigen::MatrixXd out(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = i; j < s; ++j) {
      const Monomial bij = basis[static_cast<std::size_t>(i)] * basis[static_cast<std::size_t>(j)];
      double v = 0.0;
      for (const auto& [gamma, coeff] : g.terms()) v += coeff * y.values()[grlex_rank(bij * gamma)];
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

double AtomicMeasure::total_variation() const {
  double tv = 0.0;
  for (const auto& a : atoms) tv += std::abs(a.weight);
  return tv;
}

double AtomicMeasure::mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.weight;
  return m;
}

int AtomicMeasure::dim() const {
  return atoms.empty() ? 0 : static_cast<int>(atoms.front().point.size());
}

double UniformBox::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

namespace {

double interval_power_integral(double a, double b, int k) {
  return (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
}

}  // namespace

double measure_moment(const ReferenceMeasure& measure, const Monomial& alpha) {
  if (const auto* box = std::get_if<UniformBox>(&measure)) {
    if (static_cast<int>(box->lo.size()) != alpha.num_vars() || box->hi.size() != box->lo.size()) {
      throw DimensionError("box dimension does not match the moment index");
    }
    double v = 1.0;
    for (std::size_t i = 0; i < box->lo.size(); ++i) {
      if (!std::isfinite(box->lo[i]) || !std::isfinite(box->hi[i]) || !(box->lo[i] < box->hi[i])) {
        throw std::invalid_argument("box bounds must be finite with lo < hi");
      }
      v *= interval_power_integral(box->lo[i], box->hi[i], alpha.exponents[i]);
    }
    if (box->normalized) v /= box->volume();
    return v;
  }
  const auto& atomic = std::get<AtomicMeasure>(measure);
  double v = 0.0;
  for (const auto& a : atomic.atoms) {
    if (static_cast<int>(a.point.size()) != alpha.num_vars()) {
      throw DimensionError("atom dimension does not match the moment index");
    }
    v += a.weight * alpha.eval(a.point);
  }
  return v;
}

PseudoMomentSequence measure_moments(const ReferenceMeasure& measure, int n, int order) {
  const auto basis = canonical_basis(n, 2 * order);
  std::vector<double> values;
  values.reserve(basis.size());
  for (const auto& alpha : basis) values.push_back(measure_moment(measure, alpha));
  return PseudoMomentSequence(n, order, std::move(values));
}

}  // namespace momentsos
