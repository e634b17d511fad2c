#include "momentsos/poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace momentsos {

Monomial::Monomial(std::vector<int> exps) : exponents(std::move(exps)) {
  for (int e : exponents) {
    if (e < 0) throw std::invalid_argument("monomial exponents must be non-negative");
  }
}

Monomial Monomial::unit(int n, int i) {
  Monomial m = zero(n);
  m.exponents.at(static_cast<std::size_t>(i)) = 1;
  return m;
}

int Monomial::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

Monomial Monomial::operator*(const Monomial& other) const {
  if (other.exponents.size() != exponents.size()) {
    throw DimensionError("monomial variable count mismatch");
  }
  Monomial out = *this;
  for (std::size_t i = 0; i < exponents.size(); ++i) out.exponents[i] += other.exponents[i];
  return out;
}

double Monomial::eval(std::span<const double> x) const {
  double v = 1.0;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    for (int k = 0; k < exponents[i]; ++k) v *= x[i];
  }
  return v;
}

std::string Monomial::to_string() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] == 0) continue;
    if (!first) os << '*';
    os << 'x' << (i + 1);
    if (exponents[i] > 1) os << '^' << exponents[i];
    first = false;
  }
  if (first) os << '1';
  return os.str();
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree();
  const int db = b.degree();
  if (da != db) return da < db;
  // Same degree: larger exponent on an earlier variable sorts first.
  return std::lexicographical_compare(b.exponents.begin(), b.exponents.end(), a.exponents.begin(),
                                      a.exponents.end());
}

namespace {

// C(n, k) in 128-bit arithmetic; every prefix product is itself a binomial, so
// the division is exact.
unsigned __int128 binomial128(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (long long i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned __int128>(n - k + i) / static_cast<unsigned __int128>(i);
    if (r > static_cast<unsigned __int128>(std::numeric_limits<std::size_t>::max())) {
      throw SizingError("basis size overflows the platform integer");
    }
  }
  return r;
}

std::size_t binomial(long long n, long long k) { return static_cast<std::size_t>(binomial128(n, k)); }

void enumerate_degree(int n, int k, std::vector<int>& current, int pos, std::vector<Monomial>& out) {
  if (pos == n - 1) {
    current[static_cast<std::size_t>(pos)] = k;
    out.emplace_back(current);
    return;
  }
  for (int e = k; e >= 0; --e) {
    current[static_cast<std::size_t>(pos)] = e;
    enumerate_degree(n, k - e, current, pos + 1, out);
  }
}

}  // namespace

std::size_t basis_size(int n, int d) {
  if (n < 1) throw std::invalid_argument("basis_size requires n >= 1");
  if (d < 0) throw std::invalid_argument("basis_size requires d >= 0");
  return binomial(static_cast<long long>(n) + d, n);
}

std::vector<Monomial> canonical_basis(int n, int d) {
  std::vector<Monomial> out;
  out.reserve(basis_size(n, d));
  std::vector<int> current(static_cast<std::size_t>(n), 0);
  for (int k = 0; k <= d; ++k) enumerate_degree(n, k, current, 0, out);
  return out;
}

std::size_t grlex_rank(const Monomial& alpha) {
  const int n = alpha.num_vars();
  const int k = alpha.degree();
  std::size_t rank = k == 0 ? 0 : basis_size(n, k - 1);
  int remaining = k;
  for (int i = 0; i + 1 < n; ++i) {
    const int ai = alpha.exponents[static_cast<std::size_t>(i)];
    // Monomials agreeing on the first i exponents but with a larger i-th exponent.
    const int tail_vars = n - i - 1;
    for (int b = ai + 1; b <= remaining; ++b) {
      rank += binomial(static_cast<long long>(remaining - b) + tail_vars - 1, tail_vars - 1);
    }
    remaining -= ai;
  }
  return rank;
}

Polynomial::Polynomial(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("polynomial needs at least one variable");
}

Polynomial::Polynomial(int n, std::initializer_list<std::pair<std::vector<int>, double>> terms)
    : Polynomial(n) {
  for (const auto& [exps, c] : terms) add_term(Monomial(exps), c);
}

Polynomial Polynomial::constant(int n, double c) {
  Polynomial p(n);
  p.add_term(Monomial::zero(n), c);
  return p;
}

Polynomial Polynomial::variable(int n, int i) {
  Polynomial p(n);
  p.add_term(Monomial::unit(n, i), 1.0);
  return p;
}

Polynomial Polynomial::term(const Monomial& m, double c) {
  Polynomial p(m.num_vars());
  p.add_term(m, c);
  return p;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (m.num_vars() != n_) throw DimensionError("term has the wrong number of variables");
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const { return terms_.empty() ? 0 : terms_.rbegin()->first.degree(); }

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != n_) throw DimensionError("evaluation point has the wrong dimension");
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.eval(x);
  return v;
}

Polynomial Polynomial::derivative(int i) const {
  Polynomial out(n_);
  for (const auto& [m, c] : terms_) {
    const int e = m.exponents.at(static_cast<std::size_t>(i));
    if (e == 0) continue;
    Monomial dm = m;
    dm.exponents[static_cast<std::size_t>(i)] = e - 1;
    out.add_term(dm, c * e);
  }
  return out;
}

double Polynomial::max_abs_coefficient() const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v = std::max(v, std::abs(c));
  return v;
}

double Polynomial::coefficient_norm() const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * c;
  return std::sqrt(v);
}

Polynomial Polynomial::affine_substitute(std::span<const double> shift,
                                         std::span<const double> scale) const {
  if (static_cast<int>(shift.size()) != n_ || static_cast<int>(scale.size()) != n_) {
    throw DimensionError("affine substitution has the wrong dimension");
  }
  std::vector<Polynomial> images;
  images.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    images.push_back(constant(n_, shift[static_cast<std::size_t>(i)]) +
                     variable(n_, i) * scale[static_cast<std::size_t>(i)]);
  }
  Polynomial out(n_);
  for (const auto& [m, c] : terms_) {
    Polynomial t = constant(n_, c);
    for (int i = 0; i < n_; ++i) t = t * pow(images[static_cast<std::size_t>(i)], m.exponents[static_cast<std::size_t>(i)]);
    out += t;
  }
  return out;
}

void Polynomial::check_same_vars(const Polynomial& other) const {
  if (other.n_ != n_) throw DimensionError("polynomials have different variable counts");
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_same_vars(other);
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  out += other;
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const { return *this + other * -1.0; }

Polynomial Polynomial::operator*(const Polynomial& other) const {
  check_same_vars(other);
  Polynomial out(n_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) out.add_term(ma * mb, ca * cb);
  }
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(n_);
  for (const auto& [m, c] : terms_) out.add_term(m, c * s);
  return out;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (const auto& [m, c] : terms_) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << '-';
    const double a = std::abs(c);
    if (m.is_zero()) {
      os << a;
    } else {
      if (a != 1.0) os << a << '*';
      os << m.to_string();
    }
    first = false;
  }
  return os.str();
}

double poly_eval(const Polynomial& p, std::span<const double> x) { return p.eval(x); }

Polynomial poly_mul(const Polynomial& p, const Polynomial& q) { return p * q; }

Polynomial pow(const Polynomial& p, int k) {
  if (k < 0) throw std::invalid_argument("negative polynomial power");
  Polynomial out = Polynomial::constant(p.num_vars(), 1.0);
  for (int i = 0; i < k; ++i) out = out * p;
  return out;
}

int half_degree(const Polynomial& g) { return (g.degree() + 1) / 2; }

SemialgebraicSet::SemialgebraicSet(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("semialgebraic set needs at least one variable");
}

SemialgebraicSet::SemialgebraicSet(int n, std::vector<Polynomial> constraints,
                                   std::optional<double> ball_radius_sq)
    : n_(n), constraints_(std::move(constraints)), ball_radius_sq_(ball_radius_sq) {
  if (n < 1) throw std::invalid_argument("semialgebraic set needs at least one variable");
  for (const auto& g : constraints_) {
    if (g.num_vars() != n_) throw DimensionError("constraint has the wrong number of variables");
  }
  if (ball_radius_sq_ && !(*ball_radius_sq_ > 0.0)) {
    throw std::invalid_argument("ball radius squared must be positive");
  }
}

std::vector<Polynomial> SemialgebraicSet::all_constraints() const {
  std::vector<Polynomial> out = constraints_;
  if (ball_radius_sq_) out.push_back(ball_polynomial(n_, *ball_radius_sq_));
  return out;
}

bool SemialgebraicSet::contains(std::span<const double> x, double tol) const {
  for (const auto& g : all_constraints()) {
    if (g.eval(x) < -tol) return false;
  }
  return true;
}

Polynomial ball_polynomial(int n, double radius_sq) {
  Polynomial p = Polynomial::constant(n, radius_sq);
  for (int i = 0; i < n; ++i) p.add_term(Monomial::unit(n, i) * Monomial::unit(n, i), -1.0);
  return p;
}

SemialgebraicSet augment_with_ball(const SemialgebraicSet& set, double radius_sq) {
  if (!(radius_sq > 0.0)) throw std::invalid_argument("ball radius squared must be positive");
  std::vector<Polynomial> gs = set.constraints();
  if (set.ball_radius_sq()) gs.push_back(ball_polynomial(set.num_vars(), *set.ball_radius_sq()));
  return SemialgebraicSet(set.num_vars(), std::move(gs), radius_sq);
}

SemialgebraicSet box_set(std::span<const double> lo, std::span<const double> hi) {
  if (lo.size() != hi.size() || lo.empty()) throw DimensionError("box bounds mismatch");
  const int n = static_cast<int>(lo.size());
  std::vector<Polynomial> gs;
  for (int i = 0; i < n; ++i) {
    if (!(lo[static_cast<std::size_t>(i)] < hi[static_cast<std::size_t>(i)])) {
      throw std::invalid_argument("box lower bound must be below upper bound");
    }
    gs.push_back(Polynomial::variable(n, i) - Polynomial::constant(n, lo[static_cast<std::size_t>(i)]));
    gs.push_back(Polynomial::constant(n, hi[static_cast<std::size_t>(i)]) - Polynomial::variable(n, i));
  }
  return SemialgebraicSet(n, std::move(gs));
}

}  // namespace momentsos
