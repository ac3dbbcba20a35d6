#include "hmpc/set_calculus.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "hmpc/error.hpp"

namespace hmpc {

BallSet::BallSet(int d, double r) : dim(d), radius(r) {
  if (d < 0 || !(r >= 0.0)) throw Error(ErrorKind::DimensionMismatch, "BallSet: negative dim or radius");
}

bool BallSet::contains(const Vector& x, double tol) const {
  return x.size() == dim && x.norm() <= radius + tol;
}

bool EllipsoidSet::contains(const Vector& x, double tol) const {
  return x.size() == dim && x.dot(shape * x) <= level + tol;
}

BallSet minkowski_sum(const BallSet& a, const BallSet& b) {
  if (a.dim != b.dim) throw Error(ErrorKind::DimensionMismatch, "minkowski_sum: dimension mismatch");
  return {a.dim, a.radius + b.radius};
}

BallSet minkowski_diff(const BallSet& a, const BallSet& b) {
  if (a.dim != b.dim) throw Error(ErrorKind::DimensionMismatch, "minkowski_diff: dimension mismatch");
  if (b.radius > a.radius) {
    throw Error(ErrorKind::EmptyResult, "minkowski_diff: subtrahend radius " + std::to_string(b.radius) +
                                            " exceeds " + std::to_string(a.radius));
  }
  return {a.dim, a.radius - b.radius};
}

BallSet linear_image_outer(const Matrix& k, const BallSet& a) {
  if (k.cols() != a.dim) throw Error(ErrorKind::DimensionMismatch, "linear_image_outer: K columns != dim");
  return {static_cast<int>(k.rows()), norm2(k) * a.radius};
}

RPIApproximation rpi_outer(const Matrix& f, const BallSet& w, double tol) {
  if (f.rows() != f.cols() || f.rows() != w.dim) {
    throw Error(ErrorKind::DimensionMismatch, "rpi_outer: F and W dimensions differ");
  }
  if (!is_schur(f, 0.0)) throw Error(ErrorKind::NotContractive, "rpi_outer: rho(F) >= 1");

  RPIApproximation out;
  out.f_norm = norm2(f);
  Matrix power = Matrix::Identity(f.rows(), f.cols());
  double head = 0.0;
  int s = 0;
  // rho(F) < 1 guarantees some power contracts in the 2-norm.
  while (true) {
    head += norm2(power);
    power = power * f;
    ++s;
    const double c = norm2(power);
    if (c < 1.0) {
      out.contraction = c;
      break;
    }
    if (s > 100000) throw Error(ErrorKind::NotContractive, "rpi_outer: no contractive power found");
  }
  out.horizon_terms = s;
  out.outer_radius = head * w.radius / (1.0 - out.contraction);
  out.invariant = out.f_norm * out.outer_radius + w.radius <= out.outer_radius * (1.0 + tol) + 1e-300;
  return out;
}

EllipsoidSet terminal_set(const Matrix& f, const Matrix& p, const Matrix& k, const BallSet& u_budget,
                          double level_cap) {
  const Eigen::Index n = p.rows();
  if (p.cols() != n || f.rows() != n || f.cols() != n || k.cols() != n || k.rows() != u_budget.dim) {
    throw Error(ErrorKind::DimensionMismatch, "terminal_set: inconsistent shapes");
  }
  if (!is_schur(f, 0.0)) throw Error(ErrorKind::NotSchur, "terminal_set: F not Schur");
  Eigen::SelfAdjointEigenSolver<Matrix> decrease(f.transpose() * p * f - p, Eigen::EigenvaluesOnly);
  if (decrease.eigenvalues().maxCoeff() > 1e-8 * std::max(1.0, p.norm())) {
    throw Error(ErrorKind::NotSchur, "terminal_set: P is not a Lyapunov matrix for F");
  }
  EllipsoidSet out;
  out.dim = static_cast<int>(n);
  out.shape = 0.5 * (p + p.transpose());
  // Largest generalized eigenvalue of (K'K, P).
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(k.transpose() * k, out.shape,
                                                       Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw Error(ErrorKind::NotSchur, "terminal_set: P not positive definite");
  const double lmax = std::max(0.0, ges.eigenvalues().maxCoeff());
  const double r2 = u_budget.radius * u_budget.radius;
  if (r2 == 0.0) {
    out.level = 0.0;
    out.degenerate = true;
  } else if (lmax <= std::numeric_limits<double>::min()) {
    out.level = level_cap;
  } else {
    out.level = std::min(level_cap, r2 / lmax);
  }
  return out;
}

}  // namespace hmpc
