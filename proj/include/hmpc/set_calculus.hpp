#pragma once

#include "hmpc/linalg.hpp"

namespace hmpc {

/// Origin-centred Euclidean ball {x : ||x|| <= radius}.
struct BallSet {
  int dim = 0;
  double radius = 0.0;

  BallSet() = default;
  BallSet(int d, double r);

  bool contains(const Vector& x, double tol = 0.0) const;
};

/// {x : x' P x <= level}. `degenerate` marks a zero level (origin only).
struct EllipsoidSet {
  int dim = 0;
  Matrix shape;
  double level = 0.0;
  bool degenerate = false;

  bool contains(const Vector& x, double tol = 0.0) const;
};

/// Outer ball bound of the error tube for e+ = F e + w, w in a ball.
struct RPIApproximation {
  double outer_radius = 0.0;
  int horizon_terms = 0;     // power s with ||F^s|| < 1
  double contraction = 0.0;  // ||F^s||
  double f_norm = 0.0;       // ||F||
  bool invariant = false;    // ||F|| r + rho_w <= r (1 + tol)

  BallSet ball(int dim) const { return BallSet(dim, outer_radius); }
};

BallSet minkowski_sum(const BallSet& a, const BallSet& b);

/// Throws Error(EmptyResult) when b is larger than a.
BallSet minkowski_diff(const BallSet& a, const BallSet& b);

/// Ball containing {K x : x in a}; radius ||K||_2 * a.radius.
BallSet linear_image_outer(const Matrix& k, const BallSet& a);

/// Ball radius r = (sum_{h<s} ||F^h||) rho_w / (1 - ||F^s||) with s the first
/// contractive power. Throws Error(NotContractive) if rho(F) >= 1.
RPIApproximation rpi_outer(const Matrix& f, const BallSet& w, double tol = 1e-9);

/// Level set of x' P x scaled to the largest level on which ||K x|| stays
/// within `u_budget`. `level_cap` replaces +inf when K = 0.
EllipsoidSet terminal_set(const Matrix& f, const Matrix& p, const Matrix& k, const BallSet& u_budget,
                          double level_cap = 1e12);

}  // namespace hmpc
