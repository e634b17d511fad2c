#include "momentsos/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace momentsos {

namespace {

struct Interval {
  double lo;
  double hi;
};

Interval power_interval(double lo, double hi, int e) {
  if (e == 0) return {1.0, 1.0};
  const double a = std::pow(lo, e);
  const double b = std::pow(hi, e);
  if (e % 2 == 0 && lo < 0.0 && hi > 0.0) return {0.0, std::max(a, b)};
  return {std::min(a, b), std::max(a, b)};
}

Interval times(const Interval& x, const Interval& y) {
  const double p[4] = {x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

// Every (a, b) in N^m x N^m with |a| + |b| <= k, in lexicographic order.
void enumerate(std::vector<int>& cur, std::size_t pos, int left, std::vector<std::vector<int>>& out) {
  if (pos == cur.size()) {
    out.push_back(cur);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    cur[pos] = e;
    enumerate(cur, pos + 1, left - e, out);
  }
  cur[pos] = 0;
}

}  // namespace

double interval_upper_bound(const Polynomial& g, const BoxBounds& box) {
  const auto n = static_cast<std::size_t>(g.num_vars());
  if (box.lo.size() != n || box.hi.size() != n) throw DimensionError("box dimension does not match the polynomial");
  double upper = 0.0;
  for (const auto& [alpha, c] : g.terms()) {
    Interval m{1.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) m = times(m, power_interval(box.lo[i], box.hi[i], alpha.exponents[i]));
    upper += c > 0.0 ? c * m.hi : c * m.lo;
  }
  return upper;
}

double KrivineLp::bound(const conic::ConicSolution& sol) const {
  switch (sol.status) {
    case conic::SolveStatus::Optimal:
      return sol.primal[static_cast<std::size_t>(lambda_block)](0, 0);
    case conic::SolveStatus::PrimalInfeasible:
      return -std::numeric_limits<double>::infinity();
    case conic::SolveStatus::DualInfeasible:
      return std::numeric_limits<double>::infinity();
    default:
      return std::numeric_limits<double>::quiet_NaN();
  }
}

KrivineLp build_krivine_lp(const PopProblem& p, int k, const std::optional<BoxBounds>& scaling, std::uint64_t seed) {
  if (k < 1) throw OrderError("Krivine order must be at least 1");
  const int n = p.f.num_vars();
  KrivineLp out;

  for (const auto& g : p.set.all_constraints()) {
    if (!scaling) {
      out.scaled_constraints.push_back(g);
      continue;
    }
    const double upper = interval_upper_bound(g, *scaling);
    if (upper > 0.0) {
      out.scaled_constraints.push_back(g * (1.0 / upper));
    } else {
      out.warnings.push_back("constraint " + g.to_string() + " has no positive upper bound on the box; left unscaled");
      out.scaled_constraints.push_back(g);
    }
  }
  const std::size_t m = out.scaled_constraints.size();

  // Sanity check of 0 <= g_j <= 1 at feasible samples.
  {
    std::vector<double> lo(static_cast<std::size_t>(n), -1.0);
    std::vector<double> hi(static_cast<std::size_t>(n), 1.0);
    if (scaling) {
      lo = scaling->lo;
      hi = scaling->hi;
    } else if (p.set.ball_radius_sq()) {
      const double r = std::sqrt(*p.set.ball_radius_sq());
      std::fill(lo.begin(), lo.end(), -r);
      std::fill(hi.begin(), hi.end(), r);
    }
    std::mt19937_64 rng(seed);
    std::vector<double> worst(m, 0.0);
    std::vector<double> x(static_cast<std::size_t>(n));
    int feasible = 0;
    for (int trial = 0; trial < 2000; ++trial) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::uniform_real_distribution<double>(lo[i], hi[i])(rng);
      if (!p.set.contains(x)) continue;
      ++feasible;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = out.scaled_constraints[j].eval(x);
        worst[j] = std::max({worst[j], -v, v - 1.0});
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (worst[j] > 1e-9) {
        out.warnings.push_back("constraint " + std::to_string(j) + " leaves [0, 1] by " + std::to_string(worst[j]) +
                               " at sampled feasible points");
      }
    }
    if (feasible == 0 && m > 0) out.warnings.push_back("no feasible sample points found for the scaling check");
  }

  // Powers g_j^e and (1 - g_j)^e for e <= k.
  const auto one = Polynomial::constant(n, 1.0);
  std::vector<std::vector<Polynomial>> gp(m), hp(m);
  for (std::size_t j = 0; j < m; ++j) {
    gp[j].push_back(one);
    hp[j].push_back(one);
    const Polynomial h = one - out.scaled_constraints[j];
    for (int e = 1; e <= k; ++e) {
      gp[j].push_back(gp[j].back() * out.scaled_constraints[j]);
      hp[j].push_back(hp[j].back() * h);
    }
  }

  std::vector<int> cur(2 * m, 0);
  enumerate(cur, 0, k, out.products);
  std::vector<Polynomial> columns;
  columns.reserve(out.products.size());
  for (const auto& ab : out.products) {
    Polynomial prod = one;
    for (std::size_t j = 0; j < m; ++j) {
      if (ab[j] > 0) prod = prod * gp[j][static_cast<std::size_t>(ab[j])];
      if (ab[m + j] > 0) prod = prod * hp[j][static_cast<std::size_t>(ab[m + j])];
    }
    columns.push_back(std::move(prod));
  }

  // One equality per monomial appearing in f or in some product; the constant row is always present.
  std::map<Monomial, int, GrlexLess> rows;
  rows.emplace(Monomial::zero(n), 0);
  for (const auto& [alpha, c] : p.f.terms()) rows.emplace(alpha, 0);
  for (const auto& col : columns) {
    for (const auto& [alpha, c] : col.terms()) rows.emplace(alpha, 0);
  }
  int r = 0;
  for (auto& [alpha, idx] : rows) {
    idx = r++;
    out.program.add_constraint(p.f.coefficient(alpha));
  }

  const int lp = out.program.add_block(conic::ConeKind::NonNeg, static_cast<int>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (const auto& [alpha, v] : columns[c].terms()) {
      out.program.add_coefficient(rows.at(alpha), lp, static_cast<int>(c), static_cast<int>(c), v);
    }
  }
  out.lambda_block = out.program.add_block(conic::ConeKind::Free, 1);
  out.program.add_coefficient(0, out.lambda_block, 0, 0, 1.0);
  out.program.add_cost(out.lambda_block, 0, 0, -1.0);
  return out;
}

}  // namespace momentsos
