#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "hmpc/linalg.hpp"

namespace hmpc {

enum class SetKind { Ball, Box, Ellipsoid };

/// Convex set imposed on the slice x[offset, offset + size).
struct SetConstraint {
  SetKind kind = SetKind::Ball;
  int offset = 0;
  int size = 0;
  double radius = 0.0;  // ball
  Vector center;        // ball centre (empty means origin)
  Vector lower, upper;  // box, +-inf allowed
  Matrix shape;         // ellipsoid {v : v' P v <= level}
  double level = 0.0;

  static SetConstraint ball(int offset, int size, double radius, Vector center = Vector());
  static SetConstraint box(int offset, Vector lower, Vector upper);
  static SetConstraint ellipsoid(int offset, Matrix shape, double level);

  Vector centre() const { return center.size() ? center : Vector::Zero(size); }
  /// Euclidean distance-like violation of v (0 when inside).
  double violation(const Vector& v) const;
};

/// min 1/2 x'Hx + g'x  s.t.  A_eq x = b_eq, x_slice in set for every set constraint.
struct QuadraticProgram {
  Matrix H;
  Vector g;
  Matrix A_eq;
  Vector b_eq;
  std::vector<SetConstraint> sets;

  int dim() const { return static_cast<int>(g.size()); }
  double objective(const Vector& x) const { return 0.5 * x.dot(H * x) + g.dot(x); }
  /// Throws Error(DimensionMismatch) on inconsistent data.
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIters };
std::string_view to_string(SolveStatus s);

struct SolveResult {
  Vector x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool polished = false;
  /// Multipliers: equality rows first, then one block per set constraint.
  Vector y;
  /// Final splitting iterate, usable as a warm start.
  Vector z;
};

struct WarmStart {
  Vector x, z, y;
};

struct QPSettings {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  int max_iters = 50000;
  double alpha = 1.6;
  double rho = 0.1;
  double sigma = 1e-6;
  int adapt_interval = 25;
  int infeasibility_window = 500;
  double infeasibility_tol = 1e-6;
  int scaling_passes = 15;
  bool polish = true;
  std::optional<WarmStart> warm_start;
};

/// ADMM (operator splitting) with residual balancing and polishing.
SolveResult solve_qp(const QuadraticProgram& p, const QPSettings& settings = {});

/// Euclidean projection of v onto {u : u' P u <= level}; `eig` holds the
/// eigen-decomposition of P. Newton on the scalar multiplier.
Vector project_ellipsoid(const Vector& v, const Eigen::SelfAdjointEigenSolver<Matrix>& eig, double level);

}  // namespace hmpc
