#include "momentsos/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

namespace momentsos::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Entry {
  int row;
  int col;
  double value;
};

struct Cone {
  int source;
  ConeKind kind;
  int size;
  std::vector<std::vector<Entry>> rows;  // indexed by reduced constraint
  std::vector<int> active;               // constraints touching this cone
  MatrixXd cost;
};

struct Reduced {
  int m = 0;
  std::vector<int> kept;
  VectorXd b;
  std::vector<Cone> cones;
  MatrixXd af;
  VectorXd cf;
  std::vector<std::pair<int, int>> free_vars;
  double nu = 0.0;
};

struct Presolved {
  std::vector<int> kept;
  std::optional<VectorXd> ray;
};

// Rank-revealing QR on A^T: dependent rows are dropped when consistent and
// certify infeasibility otherwise.
Presolved presolve(const ConicProgram& p, double threshold) {
  const int m = p.num_constraints();
  Presolved out;
  VectorXd b(m);
  for (int i = 0; i < m; ++i) b(i) = p.rhs()[static_cast<std::size_t>(i)];

  std::map<std::tuple<int, int, int>, int> var;
  for (const auto& row : p.constraints()) {
    for (const auto& c : row) var.emplace(std::make_tuple(c.block, c.row, c.col), static_cast<int>(var.size()));
  }
  MatrixXd at = MatrixXd::Zero(static_cast<long>(var.size()), m);
  for (int i = 0; i < m; ++i) {
    for (const auto& c : p.constraints()[static_cast<std::size_t>(i)]) {
      at(var.at(std::make_tuple(c.block, c.row, c.col)), i) += c.value;
    }
  }

  std::vector<int> independent;
  if (!var.empty() && m > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(at.rows(), at.cols());
    qr.setThreshold(threshold);
    qr.compute(at);
    const auto& perm = qr.colsPermutation().indices();
    independent.assign(perm.data(), perm.data() + qr.rank());
    std::sort(independent.begin(), independent.end());
  }
  if (static_cast<int>(independent.size()) == m) {
    out.kept = std::move(independent);
    return out;
  }

  const int r = static_cast<int>(independent.size());
  MatrixXd basis(at.rows(), r);
  VectorXd b_ind(r);
  for (int k = 0; k < r; ++k) {
    basis.col(k) = at.col(independent[static_cast<std::size_t>(k)]);
    b_ind(k) = b(independent[static_cast<std::size_t>(k)]);
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qi;
  if (r > 0) qi.compute(basis);
  std::vector<bool> is_independent(static_cast<std::size_t>(m), false);
  for (int i : independent) is_independent[static_cast<std::size_t>(i)] = true;
  for (int i = 0; i < m; ++i) {
    if (is_independent[static_cast<std::size_t>(i)]) continue;
    VectorXd z = r > 0 ? VectorXd(qi.solve(at.col(i))) : VectorXd();
    const double predicted = r > 0 ? z.dot(b_ind) : 0.0;
    const double miss = b(i) - predicted;
    const double scale = 1.0 + std::abs(b(i)) + (r > 0 ? z.cwiseAbs().dot(b_ind.cwiseAbs()) : 0.0);
    if (std::abs(miss) > 1e-9 * scale) {
      VectorXd ray = VectorXd::Zero(m);
      ray(i) = 1.0;
      for (int k = 0; k < r; ++k) ray(independent[static_cast<std::size_t>(k)]) -= z(k);
      out.ray = ray / miss;
      return out;
    }
  }
  out.kept = std::move(independent);
  return out;
}

Reduced reduce(const ConicProgram& p, const std::vector<int>& kept) {
  Reduced red;
  red.m = static_cast<int>(kept.size());
  red.kept = kept;
  red.b.resize(red.m);
  std::vector<int> cone_of(p.blocks().size(), -1);
  std::vector<int> free_offset(p.blocks().size(), -1);
  for (std::size_t bi = 0; bi < p.blocks().size(); ++bi) {
    const Block& blk = p.blocks()[bi];
    if (blk.kind == ConeKind::Free) {
      free_offset[bi] = static_cast<int>(red.free_vars.size());
      for (int k = 0; k < blk.size; ++k) red.free_vars.emplace_back(static_cast<int>(bi), k);
      continue;
    }
    cone_of[bi] = static_cast<int>(red.cones.size());
    Cone c{static_cast<int>(bi), blk.kind, blk.size, {}, {}, {}};
    c.rows.resize(static_cast<std::size_t>(red.m));
    c.cost = blk.kind == ConeKind::Psd ? MatrixXd::Zero(blk.size, blk.size) : MatrixXd::Zero(blk.size, 1);
    red.nu += blk.size;
    red.cones.push_back(std::move(c));
  }
  const int nf = static_cast<int>(red.free_vars.size());
  red.af = MatrixXd::Zero(red.m, nf);
  red.cf = VectorXd::Zero(nf);

  for (int i = 0; i < red.m; ++i) {
    const int src = kept[static_cast<std::size_t>(i)];
    red.b(i) = p.rhs()[static_cast<std::size_t>(src)];
    for (const auto& c : p.constraints()[static_cast<std::size_t>(src)]) {
      const auto bi = static_cast<std::size_t>(c.block);
      if (free_offset[bi] >= 0) {
        red.af(i, free_offset[bi] + c.row) += c.value;
      } else {
        red.cones[static_cast<std::size_t>(cone_of[bi])].rows[static_cast<std::size_t>(i)].push_back({c.row, c.col, c.value});
      }
    }
  }
  for (auto& cone : red.cones) {
    for (int i = 0; i < red.m; ++i) {
      if (!cone.rows[static_cast<std::size_t>(i)].empty()) cone.active.push_back(i);
    }
  }
  for (const auto& c : p.cost()) {
    const auto bi = static_cast<std::size_t>(c.block);
    if (free_offset[bi] >= 0) {
      red.cf(free_offset[bi] + c.row) += c.value;
      continue;
    }
    Cone& cone = red.cones[static_cast<std::size_t>(cone_of[bi])];
    if (cone.kind == ConeKind::Psd) {
      cone.cost(c.row, c.col) += c.value;
      if (c.row != c.col) cone.cost(c.col, c.row) += c.value;
    } else {
      cone.cost(c.row, 0) += c.value;
    }
  }
  return red;
}

double pairing(const Cone& cone, const std::vector<Entry>& entries, const MatrixXd& x) {
  double v = 0.0;
  if (cone.kind == ConeKind::Psd) {
    for (const auto& e : entries) v += (e.row == e.col ? 1.0 : 2.0) * e.value * x(e.row, e.col);
  } else {
    for (const auto& e : entries) v += e.value * x(e.row, 0);
  }
  return v;
}

double inner(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b).sum(); }

VectorXd apply_cones(const Reduced& red, const std::vector<MatrixXd>& x) {
  VectorXd out = VectorXd::Zero(red.m);
  for (std::size_t k = 0; k < red.cones.size(); ++k) {
    const Cone& cone = red.cones[k];
    for (int i : cone.active) out(i) += pairing(cone, cone.rows[static_cast<std::size_t>(i)], x[k]);
  }
  return out;
}

std::vector<MatrixXd> adjoint(const Reduced& red, const VectorXd& y) {
  std::vector<MatrixXd> out;
  for (const auto& cone : red.cones) {
    MatrixXd z = MatrixXd::Zero(cone.cost.rows(), cone.cost.cols());
    for (int i : cone.active) {
      for (const auto& e : cone.rows[static_cast<std::size_t>(i)]) {
        if (cone.kind == ConeKind::Psd) {
          z(e.row, e.col) += y(i) * e.value;
          if (e.row != e.col) z(e.col, e.row) += y(i) * e.value;
        } else {
          z(e.row, 0) += y(i) * e.value;
        }
      }
    }
    out.push_back(std::move(z));
  }
  return out;
}

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Nesterov-Todd scaling. PSD: W = G G^T with G^{-1} X G^{-T} = G^T S G = diag(lambda).
/// NonNeg: w = sqrt(x / s) elementwise, lambda = sqrt(x s).
struct Scaling {
  MatrixXd g;
  MatrixXd ginv;
  MatrixXd w;
  VectorXd lambda;
};

bool nt_scaling(const Cone& cone, const MatrixXd& x, const MatrixXd& s, Scaling& out) {
  if (cone.kind == ConeKind::NonNeg) {
    if ((x.array() <= 0.0).any() || (s.array() <= 0.0).any()) return false;
    out.w = (x.array() / s.array()).sqrt().matrix();
    out.lambda = (x.array() * s.array()).sqrt().matrix();
    return true;
  }
  Eigen::LLT<MatrixXd> lx(x);
  Eigen::LLT<MatrixXd> ls(s);
  if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
  const MatrixXd l_x = lx.matrixL();
  const MatrixXd l_s = ls.matrixL();
  Eigen::JacobiSVD<MatrixXd> svd(l_s.transpose() * l_x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if (!(out.lambda.minCoeff() > 0.0)) return false;
  const MatrixXd& v = svd.matrixV();
  const VectorXd root = out.lambda.cwiseSqrt();
  out.g = l_x * v * root.cwiseInverse().asDiagonal();
  const MatrixXd lx_inv = l_x.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(cone.size, cone.size));
  out.ginv = root.asDiagonal() * v.transpose() * lx_inv;
  out.w = out.g * out.g.transpose();
  return out.g.allFinite() && out.ginv.allFinite();
}

// sum_b <A_i, W A_j W>
MatrixXd schur_matrix(const Reduced& red, const std::vector<Scaling>& sc) {
  MatrixXd m = MatrixXd::Zero(red.m, red.m);
  for (std::size_t k = 0; k < red.cones.size(); ++k) {
    const Cone& cone = red.cones[k];
    const MatrixXd& w = sc[k].w;
    if (cone.kind == ConeKind::NonNeg) {
      MatrixXd a = MatrixXd::Zero(static_cast<long>(cone.active.size()), cone.size);
      for (std::size_t r = 0; r < cone.active.size(); ++r) {
        for (const auto& e : cone.rows[static_cast<std::size_t>(cone.active[r])]) {
          a(static_cast<long>(r), e.row) += e.value * w(e.row, 0);
        }
      }
      const MatrixXd part = a * a.transpose();
      for (std::size_t r = 0; r < cone.active.size(); ++r) {
        for (std::size_t c = 0; c < cone.active.size(); ++c) {
          m(cone.active[r], cone.active[c]) += part(static_cast<long>(r), static_cast<long>(c));
        }
      }
      continue;
    }
    const int n = cone.size;
    MatrixXd gj(n, n);
    for (int j : cone.active) {
      const auto& aj = cone.rows[static_cast<std::size_t>(j)];
      if (static_cast<int>(aj.size()) < 2 * n) {
        gj.setZero();
        for (const auto& e : aj) {
          if (e.row == e.col) {
            gj.noalias() += e.value * w.col(e.row) * w.col(e.row).transpose();
          } else {
            gj.noalias() += e.value * (w.col(e.row) * w.col(e.col).transpose() + w.col(e.col) * w.col(e.row).transpose());
          }
        }
      } else {
        MatrixXd a = MatrixXd::Zero(n, n);
        for (const auto& e : aj) {
          a(e.row, e.col) += e.value;
          if (e.row != e.col) a(e.col, e.row) += e.value;
        }
        gj.noalias() = w * a * w;
      }
      for (int i : cone.active) m(i, j) += pairing(cone, cone.rows[static_cast<std::size_t>(i)], gj);
    }
  }
  return 0.5 * (m + m.transpose());
}

constexpr int kRefinementSteps = 8;
constexpr double kSolveAccuracy = 1e-9;
constexpr int kStallWindow = 20;

/// Solves [M Af; Af^T 0] [dy; dxf] = [h1; h2] by block elimination on the
/// regularized M, refined against the unregularized system.
class AugmentedSolver {
 public:
  /// reg < 0 selects a pivoted LDL^T of the unshifted matrix.
  bool factor(const MatrixXd& m, const MatrixXd& af, double reg) {
    m_ = m;
    af_ = af;
    pivoted_ = reg < 0.0;
    if (pivoted_) {
      ldlt_.compute(m);
      if (ldlt_.info() != Eigen::Success) return false;
    } else {
      MatrixXd mr = m;
      const double scale = m.rows() > 0 ? std::max(m.diagonal().cwiseAbs().maxCoeff(), 1.0) : 1.0;
      mr.diagonal().array() += reg * scale;
      llt_.compute(mr);
      if (llt_.info() != Eigen::Success) return false;
    }
    if (af.cols() > 0) {
      z_ = base_solve(af);
      k_.compute(af.transpose() * z_);
      if (k_.info() != Eigen::Success) return false;
    }
    return z_.allFinite();
  }

  /// Pivoted LU of the whole augmented matrix, for when elimination loses accuracy.
  void factor_full() {
    const long m = m_.rows();
    const long f = af_.cols();
    MatrixXd k = MatrixXd::Zero(m + f, m + f);
    k.topLeftCorner(m, m) = m_;
    k.topRightCorner(m, f) = af_;
    k.bottomLeftCorner(f, m) = af_.transpose();
    lu_.compute(k);
    full_ = true;
  }

  bool full() const { return full_; }

  /// Returns the final residual relative to the right-hand side.
  double solve(const VectorXd& h1, const VectorXd& h2, VectorXd& dy, VectorXd& dxf) const {
    raw_solve(h1, h2, dy, dxf);
    double last = kInf;
    double err = 0.0;
    for (int step = 0;; ++step) {
      const VectorXd e1 = h1 - m_ * dy - af_ * dxf;
      const VectorXd e2 = h2 - af_.transpose() * dy;
      err = std::max(e1.size() ? e1.cwiseAbs().maxCoeff() : 0.0, e2.size() ? e2.cwiseAbs().maxCoeff() : 0.0);
      if (step == kRefinementSteps || !(err < 0.5 * last) || err == 0.0) break;
      last = err;
      VectorXd cy, cf;
      raw_solve(e1, e2, cy, cf);
      dy += cy;
      dxf += cf;
    }
    const double scale = std::max(h1.size() ? h1.cwiseAbs().maxCoeff() : 0.0, h2.size() ? h2.cwiseAbs().maxCoeff() : 0.0);
    return std::isfinite(err) ? err / std::max(scale, 1e-300) : kInf;
  }

 private:
  MatrixXd base_solve(const MatrixXd& rhs) const { return pivoted_ ? MatrixXd(ldlt_.solve(rhs)) : MatrixXd(llt_.solve(rhs)); }

  void raw_solve(const VectorXd& h1, const VectorXd& h2, VectorXd& dy, VectorXd& dxf) const {
    if (full_) {
      VectorXd h(h1.size() + h2.size());
      h << h1, h2;
      const VectorXd z = lu_.solve(h);
      dy = z.head(h1.size());
      dxf = z.tail(h2.size());
      return;
    }
    const VectorXd u = base_solve(h1);
    if (af_.cols() == 0) {
      dy = u;
      dxf = VectorXd::Zero(0);
      return;
    }
    dxf = k_.solve(af_.transpose() * u - h2);
    dy = u - z_ * dxf;
  }

  MatrixXd m_;
  MatrixXd af_;
  MatrixXd z_;
  bool pivoted_ = false;
  bool full_ = false;
  Eigen::PartialPivLU<MatrixXd> lu_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LDLT<MatrixXd> ldlt_;
  Eigen::LDLT<MatrixXd> k_;
};

struct Direction {
  std::vector<MatrixXd> dx;
  std::vector<MatrixXd> ds;
  VectorXd dy;
  VectorXd dxf;
};

MatrixXd scaled_primal(const Cone& cone, const Scaling& sc, const MatrixXd& dx) {
  if (cone.kind == ConeKind::NonNeg) return (dx.array() / sc.w.array()).matrix();
  return sc.ginv * dx * sc.ginv.transpose();
}

MatrixXd scaled_dual(const Cone& cone, const Scaling& sc, const MatrixXd& ds) {
  if (cone.kind == ConeKind::NonNeg) return (ds.array() * sc.w.array()).matrix();
  return sc.g.transpose() * ds * sc.g;
}

MatrixXd unscale_target(const Cone& cone, const Scaling& sc, const MatrixXd& t) {
  if (cone.kind == ConeKind::NonNeg) return (t.array() * sc.w.array()).matrix();
  return sc.g * t * sc.g.transpose();
}

MatrixXd apply_w(const Cone& cone, const Scaling& sc, const MatrixXd& s) {
  if (cone.kind == ConeKind::NonNeg) return (s.array() * sc.w.array().square()).matrix();
  return sc.w * s * sc.w;
}

// Largest alpha with lambda + alpha * d in the cone (d in scaled coordinates).
double step_to_boundary(const Cone& cone, const VectorXd& lambda, const MatrixXd& d) {
  double worst = 0.0;
  if (cone.kind == ConeKind::NonNeg) {
    worst = (d.col(0).array() / lambda.array()).minCoeff();
  } else {
    const VectorXd r = lambda.cwiseSqrt().cwiseInverse();
    MatrixXd q = r.asDiagonal() * d * r.asDiagonal();
    q = 0.5 * (q + q.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(q, Eigen::EigenvaluesOnly);
    worst = es.eigenvalues().minCoeff();
  }
  return worst < 0.0 ? -1.0 / worst : kInf;
}

bool interior(const Cone& cone, const MatrixXd& v) {
  if (cone.kind == ConeKind::NonNeg) return (v.array() > 0.0).all();
  Eigen::LLT<MatrixXd> llt(v);
  return llt.info() == Eigen::Success;
}

MatrixXd diag_of(const Cone& cone, const VectorXd& v) {
  if (cone.kind == ConeKind::NonNeg) return v;
  return v.asDiagonal();
}

struct State {
  std::vector<MatrixXd> x;
  std::vector<MatrixXd> s;
  VectorXd y;
  VectorXd xf;
};

State initial_point(const Reduced& red) {
  State st;
  st.y = VectorXd::Zero(red.m);
  st.xf = VectorXd::Zero(red.af.cols());
  for (const auto& cone : red.cones) {
    const double n = cone.size;
    double const_x = 1.0;
    double const_s = 1.0 + max_abs(cone.cost) * (cone.kind == ConeKind::Psd ? n : 1.0);
    for (int i : cone.active) {
      double norm = 0.0;
      for (const auto& e : cone.rows[static_cast<std::size_t>(i)]) {
        norm += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
      }
      norm = std::sqrt(norm);
      const_x = std::max(const_x, (1.0 + std::abs(red.b(i))) / (1.0 + norm));
      const_s = std::max(const_s, 1.0 + norm);
    }
    const double xi = std::max({10.0, std::sqrt(n), n * const_x});
    const double eta = std::max({10.0, std::sqrt(n), const_s / std::sqrt(n)});
    if (cone.kind == ConeKind::Psd) {
      st.x.push_back(xi * MatrixXd::Identity(cone.size, cone.size));
      st.s.push_back(eta * MatrixXd::Identity(cone.size, cone.size));
    } else {
      st.x.push_back(MatrixXd::Constant(cone.size, 1, xi));
      st.s.push_back(MatrixXd::Constant(cone.size, 1, eta));
    }
  }
  return st;
}

void write_back(const ConicProgram& p, const Reduced& red, const State& st, ConicSolution& sol) {
  sol.primal = zero_blocks(p);
  sol.slacks = zero_blocks(p);
  sol.multipliers = VectorXd::Zero(p.num_constraints());
  for (std::size_t k = 0; k < red.cones.size(); ++k) {
    const auto src = static_cast<std::size_t>(red.cones[k].source);
    sol.primal[src] = st.x[k];
    sol.slacks[src] = st.s[k];
  }
  for (std::size_t j = 0; j < red.free_vars.size(); ++j) {
    const auto [blk, idx] = red.free_vars[j];
    sol.primal[static_cast<std::size_t>(blk)](idx, 0) = st.xf(static_cast<long>(j));
  }
  for (int i = 0; i < red.m; ++i) sol.multipliers(red.kept[static_cast<std::size_t>(i)]) = st.y(i);
}

}  // namespace

ConicSolution solve(const ConicProgram& input, const SolverOptions& opt) {
  if (input.dense_entries() > opt.max_dense_entries) {
    throw ProgramError("program has " + std::to_string(input.dense_entries()) +
                       " dense entries, above the configured cap of " + std::to_string(opt.max_dense_entries));
  }
  const ConicProgram program = input.canonical();
  ConicSolution sol;
  sol.primal = zero_blocks(program);
  sol.slacks = zero_blocks(program);
  sol.multipliers = VectorXd::Zero(program.num_constraints());

  const Presolved pre = presolve(program, opt.presolve_threshold);
  if (pre.ray) {
    sol.status = SolveStatus::PrimalInfeasible;
    sol.dual_ray = *pre.ray;
    sol.message = "equality constraints are inconsistent";
    sol.residuals = kkt_residuals(program, sol);
    return sol;
  }
  const Reduced red = reduce(program, pre.kept);
  const std::size_t nc = red.cones.size();
  const double nu = std::max(red.nu, 1.0);
  const double norm_b = red.m > 0 ? red.b.cwiseAbs().maxCoeff() : 0.0;
  double norm_c = red.cf.size() > 0 ? red.cf.cwiseAbs().maxCoeff() : 0.0;
  for (const auto& cone : red.cones) norm_c = std::max(norm_c, max_abs(cone.cost));

  State st = initial_point(red);
  double last_p = 0.0;
  double last_d = 0.0;
  int stalled = 0;
  State best = st;
  double best_merit = kInf;
  int best_iter = 0;
  sol.status = SolveStatus::MaxIter;

  for (int iter = 0;; ++iter) {
    const VectorXd ax = apply_cones(red, st.x) + red.af * st.xf;
    const VectorXd rp = red.b - ax;
    const std::vector<MatrixXd> aty = adjoint(red, st.y);
    std::vector<MatrixXd> rd(nc);
    double rd_norm = 0.0;
    double pobj = red.cf.dot(st.xf);
    double xs = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
      rd[k] = red.cones[k].cost - st.s[k] - aty[k];
      rd_norm = std::max(rd_norm, max_abs(rd[k]));
      pobj += inner(red.cones[k].cost, st.x[k]);
      xs += inner(st.x[k], st.s[k]);
    }
    const VectorXd rf = red.cf - red.af.transpose() * st.y;
    const double dobj = red.b.dot(st.y);
    const double mu = xs / nu;
    const double pinf = (red.m > 0 ? rp.cwiseAbs().maxCoeff() : 0.0) / (1.0 + norm_b);
    const double dinf = std::max(rd_norm, rf.size() > 0 ? rf.cwiseAbs().maxCoeff() : 0.0) / (1.0 + norm_c);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
    sol.trace.push_back({pobj, dobj, mu, last_p, last_d, {pinf, dinf, gap}});
    sol.iterations = iter;

    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "iterates became non-finite";
      break;
    }
    if (pinf <= opt.tol && dinf <= opt.tol && gap <= opt.tol) {
      sol.status = SolveStatus::Optimal;
      break;
    }
    const double merit = std::max({pinf, dinf, gap});
    if (merit < best_merit) {
      best_merit = merit;
      best = st;
      best_iter = iter;
    }
    if (best_merit <= opt.relaxed_tol && iter - best_iter >= kStallWindow) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "no progress near the solution";
      break;
    }
    if (dobj > 0.0 && pinf > opt.tol) {
      double lhs = 0.0;
      for (std::size_t k = 0; k < nc; ++k) lhs = std::max(lhs, max_abs(red.cones[k].cost - rd[k]));
      if (rf.size() > 0) lhs = std::max(lhs, (red.cf - rf).cwiseAbs().maxCoeff());
      if (lhs / dobj < opt.infeasibility_tol) {
        sol.status = SolveStatus::PrimalInfeasible;
        sol.message = "dual iterates diverge along an improving ray";
        VectorXd ray = VectorXd::Zero(program.num_constraints());
        for (int i = 0; i < red.m; ++i) ray(red.kept[static_cast<std::size_t>(i)]) = st.y(i) / dobj;
        sol.dual_ray = ray;
        break;
      }
    }
    if (pobj < 0.0 && dinf > opt.tol) {
      const double lhs = red.m > 0 ? ax.cwiseAbs().maxCoeff() : 0.0;
      if (lhs / -pobj < opt.infeasibility_tol) {
        sol.status = SolveStatus::DualInfeasible;
        sol.message = "primal iterates diverge along an improving ray";
        State ray = st;
        for (auto& x : ray.x) x /= -pobj;
        ray.xf /= -pobj;
        ConicSolution tmp;
        write_back(program, red, ray, tmp);
        sol.primal_ray = tmp.primal;
        break;
      }
    }
    if (iter >= opt.max_iter) {
      sol.status = SolveStatus::MaxIter;
      sol.message = "iteration limit reached";
      break;
    }

    std::vector<Scaling> sc(nc);
    bool scaled = true;
    for (std::size_t k = 0; k < nc && scaled; ++k) scaled = nt_scaling(red.cones[k], st.x[k], st.s[k], sc[k]);
    if (!scaled) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "iterate left the interior of the cone";
      break;
    }
    AugmentedSolver kkt;
    // Unregularized first; the diagonal shift is applied only when Cholesky breaks down.
    const MatrixXd schur = schur_matrix(red, sc);
    bool factored = kkt.factor(schur, red.af, 0.0) || kkt.factor(schur, red.af, -1.0);
    for (double reg = opt.schur_regularization; !factored && reg <= 1e-6; reg *= 100.0) {
      factored = kkt.factor(schur, red.af, reg);
    }
    if (!factored) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "Schur complement is singular after regularization";
      break;
    }

    auto direction = [&](const std::vector<MatrixXd>& target) {
      Direction dir;
      std::vector<MatrixXd> v(nc);
      for (std::size_t k = 0; k < nc; ++k) {
        v[k] = unscale_target(red.cones[k], sc[k], target[k]) - apply_w(red.cones[k], sc[k], rd[k]);
      }
      const VectorXd h1 = rp - apply_cones(red, v);
      if (kkt.solve(h1, rf, dir.dy, dir.dxf) > kSolveAccuracy && !kkt.full()) {
        kkt.factor_full();
        kkt.solve(h1, rf, dir.dy, dir.dxf);
      }
      const std::vector<MatrixXd> atdy = adjoint(red, dir.dy);
      for (std::size_t k = 0; k < nc; ++k) {
        dir.ds.push_back(rd[k] - atdy[k]);
        dir.dx.push_back(unscale_target(red.cones[k], sc[k], target[k]) - apply_w(red.cones[k], sc[k], dir.ds[k]));
        if (red.cones[k].kind == ConeKind::Psd) {
          dir.dx[k] = 0.5 * (dir.dx[k] + dir.dx[k].transpose());
          dir.ds[k] = 0.5 * (dir.ds[k] + dir.ds[k].transpose());
        }
      }
      return dir;
    };
    auto max_steps = [&](const Direction& dir, std::vector<MatrixXd>& dxs, std::vector<MatrixXd>& dss) {
      double ap = kInf;
      double ad = kInf;
      dxs.assign(nc, MatrixXd());
      dss.assign(nc, MatrixXd());
      for (std::size_t k = 0; k < nc; ++k) {
        dxs[k] = scaled_primal(red.cones[k], sc[k], dir.dx[k]);
        dss[k] = scaled_dual(red.cones[k], sc[k], dir.ds[k]);
        ap = std::min(ap, step_to_boundary(red.cones[k], sc[k].lambda, dxs[k]));
        ad = std::min(ad, step_to_boundary(red.cones[k], sc[k].lambda, dss[k]));
      }
      return std::make_pair(ap, ad);
    };

    std::vector<MatrixXd> target(nc);
    for (std::size_t k = 0; k < nc; ++k) target[k] = -diag_of(red.cones[k], sc[k].lambda);
    const Direction pred = direction(target);
    std::vector<MatrixXd> dxs;
    std::vector<MatrixXd> dss;
    const auto [ap_max, ad_max] = max_steps(pred, dxs, dss);
    const double ap_a = std::min(1.0, ap_max);
    const double ad_a = std::min(1.0, ad_max);
    double xs_aff = 0.0;
    for (std::size_t k = 0; k < nc; ++k) {
      const MatrixXd lam = diag_of(red.cones[k], sc[k].lambda);
      xs_aff += inner(lam + ap_a * dxs[k], lam + ad_a * dss[k]);
    }
    const double sigma = mu > 0.0 ? std::clamp(std::pow(std::max(xs_aff, 0.0) / nu / mu, 3.0), 0.0, 1.0) : 0.0;

    for (std::size_t k = 0; k < nc; ++k) {
      const Cone& cone = red.cones[k];
      const VectorXd& lam = sc[k].lambda;
      if (cone.kind == ConeKind::NonNeg) {
        const VectorXd rhs = (sigma * mu - lam.array().square() - dxs[k].col(0).array() * dss[k].col(0).array()).matrix();
        target[k] = (rhs.array() / lam.array()).matrix();
      } else {
        const MatrixXd prod = dxs[k] * dss[k];
        MatrixXd rhs = -0.5 * (prod + prod.transpose());
        rhs.diagonal().array() += sigma * mu - lam.array().square();
        for (int i = 0; i < cone.size; ++i) {
          for (int j = 0; j < cone.size; ++j) rhs(i, j) *= 2.0 / (lam(i) + lam(j));
        }
        target[k] = rhs;
      }
    }
    const Direction corr = direction(target);
    const auto [cp_max, cd_max] = max_steps(corr, dxs, dss);
    const double gamma = 0.9 + 0.09 * std::min(ap_a, ad_a);
    double ap = std::min(1.0, gamma * cp_max);
    double ad = std::min(1.0, gamma * cd_max);

    // Rounding can leave the exact step-to-boundary slightly outside the cone; back off.
    auto advance = [&](std::vector<MatrixXd>& v, const std::vector<MatrixXd>& dv, double& alpha) {
      std::vector<MatrixXd> trial(nc);
      for (int attempt = 0; attempt < 30; ++attempt, alpha *= 0.8) {
        bool inside = true;
        for (std::size_t k = 0; k < nc && inside; ++k) {
          trial[k] = v[k] + alpha * dv[k];
          inside = interior(red.cones[k], trial[k]);
        }
        if (inside) {
          v = std::move(trial);
          return;
        }
      }
      alpha = 0.0;
    };
    advance(st.x, corr.dx, ap);
    advance(st.s, corr.ds, ad);
    st.xf += ap * corr.dxf;
    st.y += ad * corr.dy;
    last_p = ap;
    last_d = ad;
    stalled = std::max(ap, ad) < 1e-10 ? stalled + 1 : 0;
    if (stalled >= 3) {
      sol.status = SolveStatus::NumericalFailure;
      sol.message = "step lengths collapsed";
      sol.iterations = iter + 1;
      break;
    }
  }

  // Rounding can stall the last digits; fall back to the most accurate iterate.
  const bool gave_up = sol.status == SolveStatus::MaxIter || sol.status == SolveStatus::NumericalFailure;
  if (gave_up && best_merit <= opt.relaxed_tol) {
    st = std::move(best);
    sol.status = SolveStatus::Optimal;
    sol.message = "accepted at the relaxed tolerance after " + sol.message;
  }
  write_back(program, red, st, sol);
  sol.primal_objective = primal_objective(program, sol.primal);
  double dobj = 0.0;
  for (int i = 0; i < program.num_constraints(); ++i) {
    dobj += program.rhs()[static_cast<std::size_t>(i)] * sol.multipliers(i);
  }
  sol.dual_objective = dobj;
  sol.residuals = kkt_residuals(program, sol);
  return sol;
}

}  // namespace momentsos::conic
