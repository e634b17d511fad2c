#include "momentsos/conic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace momentsos::conic {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::PrimalInfeasible: return "PrimalInfeasible";
    case SolveStatus::DualInfeasible: return "DualInfeasible";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

int ConicProgram::add_block(ConeKind kind, int size) {
  if (size < 1) throw ProgramError("block size must be positive");
  blocks_.push_back({kind, size});
  return static_cast<int>(blocks_.size()) - 1;
}

int ConicProgram::add_constraint(double rhs) {
  rhs_.push_back(rhs);
  rows_.emplace_back();
  return static_cast<int>(rhs_.size()) - 1;
}

void ConicProgram::set_rhs(int constraint, double rhs) { rhs_.at(static_cast<std::size_t>(constraint)) = rhs; }

void ConicProgram::check_entry(int block, int row, int col) const {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) throw ProgramError("block index out of range");
  const Block& b = blocks_[static_cast<std::size_t>(block)];
  if (row < 0 || col < 0 || row >= b.size || col >= b.size) throw ProgramError("entry outside its block");
  if (b.kind != ConeKind::Psd && row != col) throw ProgramError("linear block entries must be diagonal");
}

void ConicProgram::add_coefficient(int constraint, int block, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  check_entry(block, row, col);
  if (constraint < 0 || constraint >= num_constraints()) throw ProgramError("constraint index out of range");
  if (value == 0.0) return;
  rows_[static_cast<std::size_t>(constraint)].push_back({block, row, col, value});
}

void ConicProgram::add_cost(int block, int row, int col, double value) {
  if (row > col) std::swap(row, col);
  check_entry(block, row, col);
  if (value == 0.0) return;
  cost_.push_back({block, row, col, value});
}

namespace {

std::vector<Coefficient> canonicalize(std::vector<Coefficient> entries) {
  std::sort(entries.begin(), entries.end(), [](const Coefficient& a, const Coefficient& b) {
    return std::tie(a.block, a.row, a.col) < std::tie(b.block, b.row, b.col);
  });
  std::vector<Coefficient> out;
  for (const auto& e : entries) {
    if (!out.empty() && out.back().block == e.block && out.back().row == e.row && out.back().col == e.col) {
      out.back().value += e.value;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const Coefficient& c) { return c.value == 0.0; });
  return out;
}

double pair_inner(const Eigen::MatrixXd& x, const Block& block, const Coefficient& c) {
  if (block.kind != ConeKind::Psd) return c.value * x(c.row, 0);
  return c.row == c.col ? c.value * x(c.row, c.col) : 2.0 * c.value * x(c.row, c.col);
}

void scatter(Eigen::MatrixXd& out, const Block& block, const Coefficient& c, double scale) {
  if (block.kind != ConeKind::Psd) {
    out(c.row, 0) += scale * c.value;
    return;
  }
  out(c.row, c.col) += scale * c.value;
  if (c.row != c.col) out(c.col, c.row) += scale * c.value;
}

}  // namespace

ConicProgram ConicProgram::canonical() const {
  ConicProgram out = *this;
  for (auto& row : out.rows_) row = canonicalize(row);
  out.cost_ = canonicalize(out.cost_);
  return out;
}

std::size_t ConicProgram::dense_entries() const {
  std::size_t total = 0;
  for (const auto& b : blocks_) {
    const auto k = static_cast<std::size_t>(b.size);
    total += b.kind == ConeKind::Psd ? k * k : k;
  }
  return total;
}

BlockValues zero_blocks(const ConicProgram& program) {
  BlockValues out;
  for (const auto& b : program.blocks()) {
    out.push_back(b.kind == ConeKind::Psd ? Eigen::MatrixXd::Zero(b.size, b.size)
                                          : Eigen::MatrixXd::Zero(b.size, 1));
  }
  return out;
}

double primal_objective(const ConicProgram& program, const BlockValues& x) {
  double v = 0.0;
  for (const auto& c : program.cost()) {
    v += pair_inner(x[static_cast<std::size_t>(c.block)], program.blocks()[static_cast<std::size_t>(c.block)], c);
  }
  return v;
}

Eigen::VectorXd apply_constraints(const ConicProgram& program, const BlockValues& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(program.num_constraints());
  for (int i = 0; i < program.num_constraints(); ++i) {
    for (const auto& c : program.constraints()[static_cast<std::size_t>(i)]) {
      out(i) += pair_inner(x[static_cast<std::size_t>(c.block)], program.blocks()[static_cast<std::size_t>(c.block)], c);
    }
  }
  return out;
}

BlockValues apply_adjoint(const ConicProgram& program, const Eigen::VectorXd& lambda) {
  BlockValues out = zero_blocks(program);
  for (int i = 0; i < program.num_constraints(); ++i) {
    for (const auto& c : program.constraints()[static_cast<std::size_t>(i)]) {
      scatter(out[static_cast<std::size_t>(c.block)], program.blocks()[static_cast<std::size_t>(c.block)], c, lambda(i));
    }
  }
  return out;
}

namespace {

BlockValues cost_blocks(const ConicProgram& program) {
  BlockValues out = zero_blocks(program);
  for (const auto& c : program.cost()) {
    scatter(out[static_cast<std::size_t>(c.block)], program.blocks()[static_cast<std::size_t>(c.block)], c, 1.0);
  }
  return out;
}

void check_shapes(const ConicProgram& program, const BlockValues& values, const char* what) {
  if (values.size() != program.blocks().size()) {
    throw ProgramError(std::string(what) + ": block count does not match the program");
  }
  for (std::size_t b = 0; b < values.size(); ++b) {
    const Block& blk = program.blocks()[b];
    const long cols = blk.kind == ConeKind::Psd ? blk.size : 1;
    if (values[b].rows() != blk.size || values[b].cols() != cols) {
      throw ProgramError(std::string(what) + ": block " + std::to_string(b) + " has the wrong shape");
    }
  }
}

}  // namespace

Residuals kkt_residuals(const ConicProgram& program, const ConicSolution& solution) {
  check_shapes(program, solution.primal, "primal");
  check_shapes(program, solution.slacks, "slacks");
  if (solution.multipliers.size() != program.num_constraints()) {
    throw ProgramError("multiplier vector has the wrong length");
  }
  Residuals r;
  const Eigen::VectorXd ax = apply_constraints(program, solution.primal);
  for (int i = 0; i < program.num_constraints(); ++i) {
    r.primal_feas = std::max(r.primal_feas, std::abs(ax(i) - program.rhs()[static_cast<std::size_t>(i)]));
  }
  const BlockValues aty = apply_adjoint(program, solution.multipliers);
  const BlockValues c = cost_blocks(program);
  for (std::size_t b = 0; b < c.size(); ++b) {
    const Eigen::MatrixXd diff = aty[b] + solution.slacks[b] - c[b];
    if (diff.size() > 0) r.dual_feas = std::max(r.dual_feas, diff.cwiseAbs().maxCoeff());
  }
  const double pobj = primal_objective(program, solution.primal);
  double dobj = 0.0;
  for (int i = 0; i < program.num_constraints(); ++i) dobj += program.rhs()[static_cast<std::size_t>(i)] * solution.multipliers(i);
  r.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
  return r;
}

}  // namespace momentsos::conic
