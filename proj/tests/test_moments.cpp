#include "doctest.h"
#include "support.hpp"

#include "momentsos/moments.hpp"

#include <cmath>

using namespace momentsos;
using testing_support::Rng;
using testing_support::uniform;
using testing_support::uniform_int;

namespace {

AtomicMeasure dirac(std::vector<double> x) {
  AtomicMeasure m;
  m.atoms.push_back({std::move(x), 1.0});
  return m;
}

Eigen::VectorXd monomial_vector(int n, int d, const std::vector<double>& x) {
  const auto basis = canonical_basis(n, d);
  Eigen::VectorXd v(static_cast<long>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) v(static_cast<long>(i)) = basis[i].eval(x);
  return v;
}

AtomicMeasure random_atoms(Rng& rng, int n, int count, double wmin) {
  AtomicMeasure m;
  for (int k = 0; k < count; ++k) {
    std::vector<double> p(static_cast<std::size_t>(n));
    for (auto& v : p) v = uniform(rng, -1.0, 1.0);
    m.atoms.push_back({p, uniform(rng, wmin, 1.0)});
  }
  return m;
}

double psd_floor(const Eigen::MatrixXd& m) { return -1e-9 * std::max(1.0, m.norm()); }

}  // namespace

TEST_CASE("Riesz functional") {
  const auto y = measure_moments(dirac({2.0}), 1, 1);
  CHECK(riesz(y, Polynomial(1, {{{2}, 1.0}})) == 4.0);
  CHECK(riesz(y, Polynomial::constant(1, 1.0)) == 1.0);
  const auto u = measure_moments(UniformBox{{0.0}, {1.0}, false}, 1, 1);
  CHECK(riesz(u, Polynomial::variable(1, 0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(riesz(y, Polynomial(1, {{{3}, 1.0}})), DegreeError);
}

TEST_CASE("Riesz functional is linear") {
  Rng rng(3);
  const auto y = measure_moments(random_atoms(rng, 2, 3, -1.0), 2, 2);
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial f(2);
    Polynomial h(2);
    for (const auto& alpha : canonical_basis(2, 4)) {
      f.add_term(alpha, uniform(rng, -1.0, 1.0));
      h.add_term(alpha, uniform(rng, -1.0, 1.0));
    }
    const double a = uniform(rng, -3.0, 3.0);
    const double b = uniform(rng, -3.0, 3.0);
    CHECK(std::abs(riesz(y, f * a + h * b) - (a * riesz(y, f) + b * riesz(y, h))) <= 1e-12);
  }
}

TEST_CASE("coefficient matrices of small cases") {
  const auto one = Polynomial::constant(1, 1.0);
  const auto b = coefficient_matrices(one, 1);
  CHECK(b.size == 2);
  REQUIRE(b.entries.size() == 3);
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, 0, 0;
  CHECK(b.dense(Monomial({0})) == e);
  e << 0, 1, 1, 0;
  CHECK(b.dense(Monomial({1})) == e);
  e << 0, 0, 0, 1;
  CHECK(b.dense(Monomial({2})) == e);

  const auto g = coefficient_matrices(Polynomial::variable(1, 0), 1);
  REQUIRE(g.entries.size() == 3);
  CHECK(g.dense(Monomial({1}))(0, 0) == 1.0);
  CHECK(g.dense(Monomial({2}))(0, 1) == 1.0);
  CHECK(g.dense(Monomial({2}))(1, 0) == 1.0);
  CHECK(g.dense(Monomial({3}))(1, 1) == 1.0);
  CHECK(g.dense(Monomial({0})).isZero());
}

TEST_CASE("coefficient matrices reproduce g(x) v v^T") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = uniform_int(rng, 1, 3);
    const int d = uniform_int(rng, 0, 2);
    Polynomial g = Polynomial::constant(n, 1.0);
    if (trial % 2 == 1) {
      g = Polynomial(n);
      for (const auto& alpha : canonical_basis(n, 2)) g.add_term(alpha, uniform(rng, -1.0, 1.0));
    }
    const auto cm = coefficient_matrices(g, d);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = uniform(rng, -1.0, 1.0);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(cm.size, cm.size);
    for (const auto& [alpha, entries] : cm.entries) {
      for (const auto& e : entries) CHECK(e.row <= e.col);
      sum += cm.dense(alpha) * alpha.eval(x);
    }
    const Eigen::VectorXd v = monomial_vector(n, d, x);
    const Eigen::MatrixXd expect = g.eval(x) * v * v.transpose();
    CHECK((sum - expect).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("moment matrix examples") {
  const std::vector<double> x0{0.4, -0.3};
  const auto y = measure_moments(dirac(x0), 2, 2);
  const Eigen::VectorXd v = monomial_vector(2, 2, x0);
  CHECK((moment_matrix(y, 2) - v * v.transpose()).cwiseAbs().maxCoeff() <= 1e-15);

  const auto u = measure_moments(UniformBox{{-1.0}, {1.0}, true}, 1, 1);
  const Eigen::MatrixXd m = moment_matrix(u, 1);
  CHECK(m(0, 0) == doctest::Approx(1.0));
  CHECK(m(0, 1) == doctest::Approx(0.0));
  CHECK(m(1, 1) == doctest::Approx(1.0 / 3.0));

  std::vector<double> e(basis_size(2, 2), 0.0);
  e[0] = 1.0;
  const Eigen::MatrixXd m0 = moment_matrix(PseudoMomentSequence(2, 1, e), 1);
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
  expect(0, 0) = 1.0;
  CHECK(m0 == expect);
  CHECK_THROWS_AS(moment_matrix(y, 3), DegreeError);
}

TEST_CASE("localizing matrix examples") {
  const std::vector<double> x0{0.7};
  const auto y = measure_moments(dirac(x0), 1, 3);
  const Polynomial g(1, {{{0}, 1.0}, {{2}, -1.0}});
  const Eigen::VectorXd v = monomial_vector(1, 2, x0);
  CHECK((localizing_matrix(y, g, 2) - g.eval(x0) * v * v.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(localizing_matrix(y, Polynomial::constant(1, 1.0), 3) == moment_matrix(y, 3));

  const auto u = measure_moments(UniformBox{{-1.0}, {1.0}, true}, 1, 1);
  const Eigen::MatrixXd l = localizing_matrix(u, g, 0);
  REQUIRE(l.rows() == 1);
  CHECK(l(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(localizing_matrix(u, g, 1), DegreeError);
}

TEST_CASE("two assembly paths agree") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = uniform_int(rng, 1, 3);
    const int d = uniform_int(rng, 0, 2);
    std::vector<double> vals(basis_size(n, 2 * d));
    for (auto& v : vals) v = uniform(rng, -1.0, 1.0);
    const PseudoMomentSequence y(n, d, vals);
    const auto cm = coefficient_matrices(Polynomial::constant(n, 1.0), d);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(cm.size, cm.size);
    for (const auto& [alpha, entries] : cm.entries) sum += y.at(alpha) * cm.dense(alpha);
    CHECK(sum == moment_matrix(y, d));
  }
}

TEST_CASE("moment and localizing matrices of positive measures are PSD") {
  Rng rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = uniform_int(rng, 1, 3);
    const int d = uniform_int(rng, 1, 3);
    const AtomicMeasure mu = random_atoms(rng, n, uniform_int(rng, 1, 6), 0.0);
    const auto y = measure_moments(mu, n, d + 1);
    const Eigen::MatrixXd m = moment_matrix(y, d);
    CHECK(testing_support::min_eigenvalue(m) >= psd_floor(m));
    // 1 - |x|^2 / n is nonnegative on [-1, 1]^n.
    Polynomial g = Polynomial::constant(n, 1.0);
    for (int i = 0; i < n; ++i) g.add_term(Monomial::unit(n, i) * Monomial::unit(n, i), -1.0 / n);
    const Eigen::MatrixXd l = localizing_matrix(y, g, d);
    CHECK(testing_support::min_eigenvalue(l) >= psd_floor(l));
  }
}

TEST_CASE("reference measure moments") {
  const UniformBox line{{-1.0}, {1.0}, false};
  CHECK(measure_moment(line, Monomial({2})) == doctest::Approx(2.0 / 3.0));
  CHECK(measure_moment(line, Monomial({3})) == doctest::Approx(0.0));
  CHECK(measure_moment(dirac({0.5}), Monomial({3})) == 0.125);
  const UniformBox square{{0.0, 0.0}, {1.0, 1.0}, false};
  CHECK(measure_moment(square, Monomial({1, 1})) == doctest::Approx(0.25));
  const UniformBox scaled{{0.0}, {2.0}, true};
  CHECK(measure_moment(scaled, Monomial({1})) == doctest::Approx(1.0));
  CHECK(measure_moment(scaled, Monomial({0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(measure_moment(square, Monomial({1})), DimensionError);
}

TEST_CASE("pseudo-moment sequence validation") {
  CHECK_THROWS_AS(PseudoMomentSequence(2, 1, std::vector<double>(5, 0.0)), DimensionError);
  const PseudoMomentSequence y(1, 2, {1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(y.at(Monomial({3})) == 4.0);
  CHECK_THROWS_AS(y.at(Monomial({5})), DegreeError);
  const PseudoMomentSequence t = y.truncated(1);
  CHECK(t.values().size() == 3);
  CHECK(t.at(Monomial({2})) == 3.0);
  CHECK_THROWS_AS(y.truncated(3), DegreeError);
}

TEST_CASE("atomic measure summaries") {
  AtomicMeasure m;
  m.atoms.push_back({{0.1}, 1.5});
  m.atoms.push_back({{0.2}, -0.5});
  CHECK(m.total_variation() == 2.0);
  CHECK(m.mass() == 1.0);
  CHECK(m.dim() == 1);
}
