#pragma once

#include "momentsos/conic.hpp"
#include "momentsos/poly.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace testing_support {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = uniform(rng, -1.0, 1.0);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_symmetric(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      a(i, j) = uniform(rng, -1.0, 1.0);
      a(j, i) = a(i, j);
    }
  }
  return a;
}

/// A program together with a primal-dual pair satisfying its KKT conditions.
struct PlantedSdp {
  momentsos::conic::ConicProgram program;
  momentsos::conic::BlockValues x;
  momentsos::conic::BlockValues s;
  Eigen::VectorXd lambda;
  double optimum;
};

/// Dense random constraints A_i; b = A(X*), C = A*(lambda*) + S*.
/// complementary: X* and S* share eigenvectors with disjoint supports, so the
/// pair is optimal. Otherwise both are positive definite (strictly feasible pair).
inline PlantedSdp planted_sdp(Rng& rng, const std::vector<int>& psd_sizes, int nonneg, int m, bool complementary) {
  using namespace momentsos::conic;
  PlantedSdp out;
  std::vector<Eigen::MatrixXd> c_blocks;
  for (int k : psd_sizes) {
    out.program.add_block(ConeKind::Psd, k);
    const Eigen::MatrixXd q = random_orthogonal(rng, k);
    Eigen::VectorXd xe(k);
    Eigen::VectorXd se(k);
    const int rank = complementary ? uniform_int(rng, 1, std::max(1, k - 1)) : k;
    for (int i = 0; i < k; ++i) {
      const bool in_x = i < rank;
      xe(i) = (in_x || !complementary) ? uniform(rng, 0.5, 2.0) : 0.0;
      se(i) = (!in_x || !complementary) ? uniform(rng, 0.5, 2.0) : 0.0;
    }
    if (complementary && k == 1) se(0) = 0.0;
    out.x.push_back(q * xe.asDiagonal() * q.transpose());
    out.s.push_back(q * se.asDiagonal() * q.transpose());
  }
  if (nonneg > 0) {
    out.program.add_block(ConeKind::NonNeg, nonneg);
    Eigen::MatrixXd xv(nonneg, 1);
    Eigen::MatrixXd sv(nonneg, 1);
    for (int i = 0; i < nonneg; ++i) {
      const bool in_x = !complementary || uniform(rng, 0.0, 1.0) < 0.5;
      xv(i, 0) = in_x ? uniform(rng, 0.5, 2.0) : 0.0;
      sv(i, 0) = (!in_x || !complementary) ? uniform(rng, 0.5, 2.0) : 0.0;
    }
    out.x.push_back(xv);
    out.s.push_back(sv);
  }
  out.lambda.resize(m);
  for (int i = 0; i < m; ++i) out.lambda(i) = uniform(rng, -1.0, 1.0);
  for (int i = 0; i < m; ++i) out.program.add_constraint(0.0);

  const auto& blocks = out.program.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) c_blocks.push_back(out.s[b]);
  for (int i = 0; i < m; ++i) {
    double rhs = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const int k = blocks[b].size;
      if (blocks[b].kind == ConeKind::Psd) {
        const Eigen::MatrixXd a = random_symmetric(rng, k);
        for (int r = 0; r < k; ++r) {
          for (int c = r; c < k; ++c) out.program.add_coefficient(i, static_cast<int>(b), r, c, a(r, c));
        }
        rhs += a.cwiseProduct(out.x[b]).sum();
        c_blocks[b] += out.lambda(i) * a;
      } else {
        for (int r = 0; r < k; ++r) {
          const double a = uniform(rng, -1.0, 1.0);
          out.program.add_coefficient(i, static_cast<int>(b), r, r, a);
          rhs += a * out.x[b](r, 0);
          c_blocks[b](r, 0) += out.lambda(i) * a;
        }
      }
    }
    out.program.set_rhs(i, rhs);
  }
  out.optimum = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const int k = blocks[b].size;
    for (int r = 0; r < k; ++r) {
      if (blocks[b].kind == ConeKind::Psd) {
        for (int c = r; c < k; ++c) out.program.add_cost(static_cast<int>(b), r, c, c_blocks[b](r, c));
      } else {
        out.program.add_cost(static_cast<int>(b), r, r, c_blocks[b](r, 0));
      }
    }
    out.optimum += c_blocks[b].cwiseProduct(out.x[b]).sum();
  }
  return out;
}

inline double min_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.cols() == 1 && m.rows() != 1) return m.minCoeff();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// Dense two-phase tableau simplex with Bland's rule:
/// max c^T w  s.t.  A w = b, w >= 0. Returns NaN when infeasible.
inline double lp_max(Eigen::MatrixXd a, Eigen::VectorXd b, const Eigen::VectorXd& c) {
  const long m = a.rows();
  const long n = a.cols();
  constexpr double eps = 1e-11;
  for (long i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      a.row(i) *= -1.0;
      b(i) *= -1.0;
    }
  }
  // Columns: n originals, m artificials, then the right-hand side.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, n + m + 1);
  t.leftCols(n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(n + m) = b;
  std::vector<long> basis(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  auto run = [&](const Eigen::VectorXd& cost, long allowed) {
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::VectorXd cb(m);
      for (long i = 0; i < m; ++i) cb(i) = cost(basis[static_cast<std::size_t>(i)]);
      long enter = -1;
      for (long j = 0; j < allowed && enter < 0; ++j) {
        if (cost(j) - cb.dot(t.col(j)) > eps) enter = j;
      }
      if (enter < 0) return true;
      long leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (long i = 0; i < m; ++i) {
        if (t(i, enter) > eps) {
          const double r = t(i, n + m) / t(i, enter);
          if (r < ratio - 1e-14 || (r <= ratio + 1e-14 && leave >= 0 &&
                                    basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            ratio = r;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      t.row(leave) /= t(leave, enter);
      for (long i = 0; i < m; ++i) {
        if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
      }
      basis[static_cast<std::size_t>(leave)] = enter;
    }
    return false;
  };

  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setConstant(-1.0);
  run(phase1, n + m);
  double infeas = 0.0;
  for (long i = 0; i < m; ++i) {
    if (basis[static_cast<std::size_t>(i)] >= n) infeas += t(i, n + m);
  }
  if (infeas > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) return std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  phase2.tail(m).setConstant(-1e6);
  if (!run(phase2, n)) return std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (long i = 0; i < m; ++i) {
    const long j = basis[static_cast<std::size_t>(i)];
    if (j < n) value += c(j) * t(i, n + m);
  }
  return value;
}

}  // namespace testing_support
