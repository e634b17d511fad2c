#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace momentsos::conic {

/// PSD blocks hold symmetric matrices. NonNeg and Free blocks hold vectors; a
/// Free block's dual cone is {0}, so it turns the matching dual rows into equalities.
enum class ConeKind { Psd, NonNeg, Free };

struct Block {
  ConeKind kind;
  int size;
  bool operator==(const Block&) const = default;
};

/// One coefficient of a block matrix. PSD blocks store the upper triangle
/// (row <= col) of a symmetric matrix; linear blocks use row == col == index.
struct Coefficient {
  int block;
  int row;
  int col;
  double value;
  bool operator==(const Coefficient&) const = default;
};

/// min sum_b <C_b, X_b>  s.t.  sum_b <A_{i,b}, X_b> = b_i,  X_b in K_b.
/// Dual: max b^T lambda  s.t.  C - A^*(lambda) = S,  S in K^*.
/// <., .> is the trace pairing on symmetric blocks and the dot product on linear blocks.
class ConicProgram {
 public:
  int add_block(ConeKind kind, int size);
  int add_constraint(double rhs);
  void add_coefficient(int constraint, int block, int row, int col, double value);
  void add_cost(int block, int row, int col, double value);
  void set_rhs(int constraint, double rhs);

  const std::vector<Block>& blocks() const { return blocks_; }
  int num_constraints() const { return static_cast<int>(rhs_.size()); }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<std::vector<Coefficient>>& constraints() const { return rows_; }
  const std::vector<Coefficient>& cost() const { return cost_; }

  /// Sorted by (block, row, col), duplicates summed, zeros dropped.
  ConicProgram canonical() const;
  /// Sum over PSD blocks of k^2 plus the lengths of linear blocks.
  std::size_t dense_entries() const;

  bool operator==(const ConicProgram& other) const = default;

 private:
  void check_entry(int block, int row, int col) const;

  std::vector<Block> blocks_;
  std::vector<double> rhs_;
  std::vector<std::vector<Coefficient>> rows_;
  std::vector<Coefficient> cost_;
};

/// Block values: k x k symmetric matrices for PSD blocks, k x 1 columns otherwise.
using BlockValues = std::vector<Eigen::MatrixXd>;

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter, NumericalFailure };
const char* to_string(SolveStatus status);

struct Residuals {
  double primal_feas = 0.0;  ///< ||A(X) - b||_inf
  double dual_feas = 0.0;    ///< ||A^*(lambda) + S - C||_inf
  double gap = 0.0;          ///< |<C,X> - b^T lambda| / (1 + |<C,X>|)
};

struct IterationRecord {
  double primal_objective;
  double dual_objective;
  double mu;
  double primal_step;
  double dual_step;
  Residuals residuals;
};

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  BlockValues primal;
  Eigen::VectorXd multipliers;
  BlockValues slacks;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  Residuals residuals;
  /// PrimalInfeasible: lambda with b^T lambda = 1 and -A^*(lambda) in K^*.
  std::optional<Eigen::VectorXd> dual_ray;
  /// DualInfeasible: X in K with <C, X> = -1 and A(X) = 0.
  std::optional<BlockValues> primal_ray;
  std::vector<IterationRecord> trace;
  std::string message;
};

struct SolverOptions {
  double tol = 1e-8;
  /// A run that stalls or hits max_iter returns its best iterate as Optimal when
  /// that iterate meets this looser tolerance.
  double relaxed_tol = 1e-6;
  int max_iter = 200;
  double infeasibility_tol = 1e-8;
  std::size_t max_dense_entries = 4'000'000;
  double schur_regularization = 1e-10;
  double presolve_threshold = 1e-10;
};

/// Thrown when a program violates its structural preconditions (size cap, shapes).
class ProgramError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Primal-dual path-following interior-point method with Nesterov-Todd scaling
/// and Mehrotra predictor-corrector steps. Infeasible start; infeasibility is
/// flagged heuristically from diverging iterates.
ConicSolution solve(const ConicProgram& program, const SolverOptions& options = {});

/// Residuals recomputed from the program data and the solution's values only.
Residuals kkt_residuals(const ConicProgram& program, const ConicSolution& solution);

/// sum_b <C_b, X_b>.
double primal_objective(const ConicProgram& program, const BlockValues& x);
/// A(X) as a vector of length num_constraints.
Eigen::VectorXd apply_constraints(const ConicProgram& program, const BlockValues& x);
/// A^*(lambda), one value per block.
BlockValues apply_adjoint(const ConicProgram& program, const Eigen::VectorXd& lambda);
/// Zero-initialized values shaped like the program's blocks.
BlockValues zero_blocks(const ConicProgram& program);

/// SDPA sparse format (.dat-s). The program maps onto SDPA's dual form with
/// F_0 = -C, F_i = A_i and c = b. NonNeg blocks are written as negative (diagonal)
/// block sizes. A Free block of size k becomes a diagonal block of size 2k holding
/// x+ and x-.
std::string export_sdpa(const ConicProgram& program);
ConicProgram parse_sdpa(std::string_view text);

}  // namespace momentsos::conic
