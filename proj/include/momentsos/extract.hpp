#pragma once

#include "momentsos/moments.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace momentsos {

/// Relative rank tolerance shared by the rank test and extraction pivoting.
inline constexpr double kRankTolerance = 1e-8;

struct NumericalRank {
  int rank = 0;
  Eigen::VectorXd singular_values;  ///< descending
};

/// rank = #{sigma_i > tol_rel * sigma_max * dim}.
NumericalRank numerical_rank(const Eigen::MatrixXd& m, double tol_rel = kRankTolerance);

struct RankReport {
  int d = 0;
  int s = 0;
  int rank_full = 0;
  int rank_sub = 0;
  bool passed = false;
  Eigen::VectorXd singular_values_full;
  Eigen::VectorXd singular_values_sub;
};

/// Flat-extension test rank M_d(y) == rank M_{d-s}(y).
RankReport rank_test(const PseudoMomentSequence& y, int d, int s, double tol_rel = kRankTolerance);

struct ExtractionOptions {
  std::uint64_t seed = 20240101;
  double pivot_tol = kRankTolerance;
  double mismatch_tol = 1e-5;
};

/// Recovers t atoms from M_d(y) with multiplication matrices and a real Schur
/// form of a random combination. Weights are fitted to every moment up to 2d.
/// Atoms are returned sorted lexicographically. Throws ExtractionFailed.
AtomicMeasure extract_atoms(const PseudoMomentSequence& y, int d, int t, const ExtractionOptions& options = {});

}  // namespace momentsos
