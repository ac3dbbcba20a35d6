#include "hmpc/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

/// Dense simplex tableau for  S v = rhs, v >= 0, with an explicit basis.
class Tableau {
 public:
  Tableau(Matrix s, Vector rhs, std::vector<int> basis, double tol)
      : t_(s.rows(), s.cols() + 1), basis_(std::move(basis)), tol_(tol) {
    t_.leftCols(s.cols()) = s;
    t_.col(s.cols()) = rhs;
  }

  int rows() const { return static_cast<int>(t_.rows()); }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  const std::vector<int>& basis() const { return basis_; }
  double rhs(int r) const { return t_(r, cols()); }
  double at(int r, int c) const { return t_(r, c); }

  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i != r && t_(i, c) != 0.0) t_.row(i) -= t_(i, c) * t_.row(r);
    }
    basis_[r] = c;
  }

  void drop_row(int r) {
    Matrix keep(rows() - 1, t_.cols());
    int k = 0;
    for (int i = 0; i < rows(); ++i)
      if (i != r) keep.row(k++) = t_.row(i);
    t_ = keep;
    basis_.erase(basis_.begin() + r);
  }

  /// Excludes every nonbasic column whose reduced cost under `cost` is
  /// nonzero, so later objectives can only move within the optimal face.
  void freeze_optimal_face(const Vector& cost, std::vector<bool>& allowed) const {
    std::vector<bool> in_basis(cols(), false);
    for (int b : basis_) in_basis[b] = true;
    for (int j = 0; j < cols(); ++j) {
      if (in_basis[j] || !allowed[j]) continue;
      double reduced = cost(j);
      for (int i = 0; i < rows(); ++i) reduced -= cost(basis_[i]) * t_(i, j);
      if (std::abs(reduced) > tol_ * (1.0 + std::abs(cost(j)))) allowed[j] = false;
    }
  }

  /// Maximizes cost'v over columns with allowed[j]; Bland's rule.
  SolveStatus run(const Vector& cost, const std::vector<bool>& allowed, int max_iters, int& iterations) {
    for (; iterations < max_iters; ++iterations) {
      std::vector<bool> in_basis(cols(), false);
      for (int b : basis_) in_basis[b] = true;
      int enter = -1;
      for (int j = 0; j < cols() && enter < 0; ++j) {
        if (!allowed[j] || in_basis[j]) continue;
        double reduced = cost(j);
        for (int i = 0; i < rows(); ++i) reduced -= cost(basis_[i]) * t_(i, j);
        if (reduced > tol_ * (1.0 + std::abs(cost(j)))) enter = j;
      }
      if (enter < 0) return SolveStatus::Optimal;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < rows(); ++i) {
        if (t_(i, enter) <= tol_) continue;
        const double ratio = rhs(i) / t_(i, enter);
        const double eps = 1e-12 * (1.0 + std::abs(ratio));
        if (leave < 0 || ratio < best - eps) {
          best = ratio;
          leave = i;
        } else if (ratio <= best + eps && basis_[i] < basis_[leave]) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return SolveStatus::Unbounded;
      pivot(leave, enter);
    }
    return SolveStatus::MaxIters;
  }

 private:
  Matrix t_;
  std::vector<int> basis_;
  double tol_;
};

struct CoreResult {
  SolveStatus status = SolveStatus::MaxIters;
  Vector y;      // shifted primal, y = x - lower
  Vector duals;  // one per inequality row
  int iterations = 0;
};

/// max c'y s.t. A y <= b, y >= 0. With `lexicographic`, ties on the
/// optimal face are broken by minimizing y_0, then y_1, and so on.
CoreResult simplex(const Vector& c, const Matrix& a, const Vector& b, const LPSettings& st, bool lexicographic) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  std::vector<int> art_rows;
  for (int i = 0; i < m; ++i)
    if (b(i) < 0) art_rows.push_back(i);
  const int na = static_cast<int>(art_rows.size());
  const int total = n + m + na;

  Matrix s = Matrix::Zero(m, total);
  Vector rhs = b;
  s.leftCols(n) = a;
  s.block(0, n, m, m).setIdentity();
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  for (int k = 0; k < na; ++k) {
    const int i = art_rows[k];
    s.row(i) *= -1.0;
    rhs(i) *= -1.0;
    s(i, n + m + k) = 1.0;
    basis[i] = n + m + k;
  }

  Tableau tab(s, rhs, basis, st.pivot_tol);
  CoreResult out;
  std::vector<bool> allowed(total, true);
  if (na) {
    Vector phase1 = Vector::Zero(total);
    phase1.tail(na).setConstant(-1.0);
    const SolveStatus s1 = tab.run(phase1, allowed, st.max_iters, out.iterations);
    if (s1 == SolveStatus::MaxIters) return out;
    double infeas = 0.0;
    for (int i = 0; i < tab.rows(); ++i)
      if (tab.basis()[i] >= n + m) infeas += tab.rhs(i);
    if (infeas > 1e-9 * (1.0 + b.cwiseAbs().maxCoeff())) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
    // Drive zero-level artificials out of the basis, dropping redundant rows.
    for (int i = tab.rows() - 1; i >= 0; --i) {
      if (tab.basis()[i] < n + m) continue;
      int col = -1;
      for (int j = 0; j < n + m && col < 0; ++j)
        if (std::abs(tab.at(i, j)) > 1e-9) col = j;
      if (col >= 0) tab.pivot(i, col);
      else tab.drop_row(i);
    }
    for (int k = 0; k < na; ++k) allowed[n + m + k] = false;
  }

  Vector cost = Vector::Zero(total);
  cost.head(n) = c;
  out.status = tab.run(cost, allowed, st.max_iters, out.iterations);
  if (out.status != SolveStatus::Optimal) return out;

  // Row duals from B' pi = c_B on the original (unflipped) columns.
  Matrix full = Matrix::Zero(m, n + m);
  full.leftCols(n) = a;
  full.rightCols(m).setIdentity();
  const int nb = tab.rows();
  Matrix bt(nb, m);
  Vector cb(nb);
  for (int r = 0; r < nb; ++r) {
    bt.row(r) = full.col(tab.basis()[r]).transpose();
    cb(r) = cost(tab.basis()[r]);
  }
  out.duals = nb ? Vector(bt.completeOrthogonalDecomposition().solve(cb)) : Vector(Vector::Zero(m));

  if (lexicographic) {
    tab.freeze_optimal_face(cost, allowed);
    for (int k = 0; k < n; ++k) {
      Vector secondary = Vector::Zero(total);
      secondary(k) = -1.0;
      if (tab.run(secondary, allowed, st.max_iters, out.iterations) != SolveStatus::Optimal) break;
      tab.freeze_optimal_face(secondary, allowed);
    }
  }
  Vector v = Vector::Zero(total);
  for (int i = 0; i < tab.rows(); ++i) v(tab.basis()[i]) = tab.rhs(i);
  out.y = v.head(n).cwiseMax(0.0);
  return out;
}

}  // namespace

SolveResult solve_lp(const Vector& c, const Matrix& a_in, const Vector& b_in, const Vector& lower,
                     const LPSettings& settings) {
  const int n = static_cast<int>(c.size());
  if (a_in.cols() != n || a_in.rows() != b_in.size() || lower.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "lp: inconsistent dimensions");
  }
  if (!lower.allFinite()) throw Error(ErrorKind::DimensionMismatch, "lp: lower bounds must be finite");
  const Vector b = b_in - a_in * lower;

  SolveResult result;
  CoreResult core = simplex(c, a_in, b, settings, settings.lexicographic);
  result.iterations = core.iterations;
  result.status = core.status;
  if (core.status != SolveStatus::Optimal) {
    result.x = lower;
    return result;
  }
  const Vector y = core.y;

  result.x = lower + y;
  result.objective = c.dot(result.x);
  result.y = core.duals;
  const Vector row_slack = b - a_in * y;
  const Vector reduced = c - a_in.transpose() * core.duals;
  double cs = 0.0;
  for (Eigen::Index i = 0; i < row_slack.size(); ++i) {
    cs = std::max({cs, std::abs(core.duals(i) * row_slack(i)), -core.duals(i)});
  }
  for (int j = 0; j < n; ++j) cs = std::max({cs, std::abs(reduced(j) * y(j)), reduced(j)});
  result.dual_residual = cs;
  result.primal_residual = std::max({0.0, row_slack.size() ? -row_slack.minCoeff() : 0.0, -y.minCoeff()});
  return result;
}

}  // namespace hmpc
