#pragma once

#include "momentsos/errors.hpp"

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace momentsos {

/// Exponent vector alpha in N^n. The monomial x^alpha.
struct Monomial {
  std::vector<int> exponents;

  Monomial() = default;
  explicit Monomial(std::vector<int> exps);

  static Monomial zero(int n) { return Monomial(std::vector<int>(static_cast<std::size_t>(n), 0)); }
  static Monomial unit(int n, int i);

  int num_vars() const { return static_cast<int>(exponents.size()); }
  int degree() const;
  bool is_zero() const { return degree() == 0; }

  Monomial operator*(const Monomial& other) const;
  bool operator==(const Monomial& other) const = default;

  double eval(std::span<const double> x) const;
  std::string to_string() const;
};

/// Graded lexicographic order: lower total degree first, ties broken so that
/// a larger exponent on an earlier variable comes first (1, x1, x2, x1^2, x1 x2, x2^2).
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// s(d) = C(n + d, n). Throws SizingError on overflow.
std::size_t basis_size(int n, int d);

/// All alpha with |alpha| <= d in graded lexicographic order. This ordering indexes
/// every moment, localizing and Gram matrix in the library.
std::vector<Monomial> canonical_basis(int n, int d);

/// Position of alpha in canonical_basis(n, d) for any d >= |alpha|.
std::size_t grlex_rank(const Monomial& alpha);

/// Sparse multivariate polynomial with real coefficients. Terms are kept in
/// graded lexicographic order and zero coefficients are never stored.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  explicit Polynomial(int n);
  Polynomial(int n, std::initializer_list<std::pair<std::vector<int>, double>> terms);

  static Polynomial constant(int n, double c);
  static Polynomial variable(int n, int i);
  static Polynomial term(const Monomial& m, double c);

  int num_vars() const { return n_; }
  /// Maximum |alpha| over stored terms; 0 for the zero polynomial.
  int degree() const;
  bool is_zero() const { return terms_.empty(); }
  const TermMap& terms() const { return terms_; }
  double coefficient(const Monomial& m) const;

  double eval(std::span<const double> x) const;
  Polynomial derivative(int i) const;
  double max_abs_coefficient() const;
  double coefficient_norm() const;

  /// Substitutes x_i = shift_i + scale_i * u_i.
  Polynomial affine_substitute(std::span<const double> shift, std::span<const double> scale) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial operator-() const { return *this * -1.0; }
  Polynomial& operator+=(const Polynomial& other);
  bool operator==(const Polynomial& other) const = default;

  void add_term(const Monomial& m, double c);
  std::string to_string() const;

 private:
  void check_same_vars(const Polynomial& other) const;

  int n_;
  TermMap terms_;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

double poly_eval(const Polynomial& p, std::span<const double> x);
Polynomial poly_mul(const Polynomial& p, const Polynomial& q);
Polynomial pow(const Polynomial& p, int k);

/// ceil(deg(g) / 2), the half-degree d_j of a constraint.
int half_degree(const Polynomial& g);

/// {x : g_j(x) >= 0}. The trivial constraint g_0 = 1 is implicit and never stored.
class SemialgebraicSet {
 public:
  explicit SemialgebraicSet(int n);
  SemialgebraicSet(int n, std::vector<Polynomial> constraints,
                   std::optional<double> ball_radius_sq = std::nullopt);

  int num_vars() const { return n_; }
  const std::vector<Polynomial>& constraints() const { return constraints_; }
  const std::optional<double>& ball_radius_sq() const { return ball_radius_sq_; }

  /// Stored constraints, followed by M - |x|^2 when a ball radius is set.
  std::vector<Polynomial> all_constraints() const;
  bool contains(std::span<const double> x, double tol = 0.0) const;

 private:
  int n_;
  std::vector<Polynomial> constraints_;
  std::optional<double> ball_radius_sq_;
};

/// Returns S with M - |x|^2 >= 0 appended. M is never inferred; it must be supplied.
SemialgebraicSet augment_with_ball(const SemialgebraicSet& set, double radius_sq);

/// M - sum_i x_i^2.
Polynomial ball_polynomial(int n, double radius_sq);

/// Affine box constraints x_i - lo_i >= 0 and hi_i - x_i >= 0.
SemialgebraicSet box_set(std::span<const double> lo, std::span<const double> hi);

}  // namespace momentsos
