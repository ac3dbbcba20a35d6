#pragma once

#include "hmpc/qp_solver.hpp"

namespace hmpc {

struct LPSettings {
  int max_iters = 20000;
  /// Among optimal vertices return the lexicographically smallest one
  /// (secondary objectives restricted to the optimal face).
  bool lexicographic = true;
  double pivot_tol = 1e-12;
};

/// max c'x  s.t.  A_in x <= b_in,  x >= lower.
///
/// Dense two-phase simplex with Bland's rule. On Optimal, `y` holds the row
/// duals and `dual_residual` the complementary-slackness residual
/// (including any dual-feasibility violation); `primal_residual` is the
/// largest constraint violation.
SolveResult solve_lp(const Vector& c, const Matrix& a_in, const Vector& b_in, const Vector& lower,
                     const LPSettings& settings = {});

}  // namespace hmpc
