#include "hmpc/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "hmpc/error.hpp"

namespace hmpc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonzeroSelfCoupling: return "NonzeroSelfCoupling";
    case ErrorKind::ComplexDominantMode: return "ComplexDominantMode";
    case ErrorKind::DefectiveMode: return "DefectiveMode";
    case ErrorKind::SingularDCGain: return "SingularDCGain";
    case ErrorKind::EmptyResult: return "EmptyResult";
    case ErrorKind::NotContractive: return "NotContractive";
    case ErrorKind::NotSchur: return "NotSchur";
    case ErrorKind::DesignFailed: return "DesignFailed";
    case ErrorKind::DesignIncomplete: return "DesignIncomplete";
    case ErrorKind::InfeasibleHL: return "InfeasibleHL";
    case ErrorKind::InfeasibleLL: return "InfeasibleLL";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InfeasibleTuning: return "InfeasibleTuning";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::UnstableDiscretization: return "UnstableDiscretization";
    case ErrorKind::FormatError: return "FormatError";
  }
  return "Unknown";
}

double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double sigma_min(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  // Rank-deficient shapes: the smallest of min(rows, cols) values.
  return s(s.size() - 1);
}

int numerical_rank(const Matrix& a, double tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return static_cast<int>((svd.singularValues().array() > tol).count());
}

bool is_schur(const Matrix& a, double margin) { return spectral_radius(a) < 1.0 - margin; }

Matrix matrix_power(const Matrix& a, int k) {
  Matrix result = Matrix::Identity(a.rows(), a.cols());
  Matrix base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Matrix geometric_sum(const Matrix& a, const Matrix& b, int count) {
  if (count <= 0) return Matrix::Zero(b.rows(), b.cols());
  Matrix acc = b;
  for (int j = 1; j < count; ++j) acc = a * acc + b;
  return acc;
}

Matrix reachability_matrix(const Matrix& a, const Matrix& b, int steps) {
  Matrix r(a.rows(), b.cols() * steps);
  Matrix block = b;
  for (int j = 0; j < steps; ++j) {
    r.middleCols(j * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return r;
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

Matrix solve_dare(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != b.cols() ||
      r.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_dare: inconsistent shapes");
  }
  const Matrix eye = Matrix::Identity(n, n);
  Matrix ak = a;
  Matrix gk = b.cols() > 0 ? Matrix(b * r.ldlt().solve(b.transpose())) : Matrix::Zero(n, n);
  Matrix hk = 0.5 * (q + q.transpose());
  for (int it = 0; it < 200; ++it) {
    Eigen::PartialPivLU<Matrix> w(eye + gk * hk);
    const Matrix w_a = w.solve(ak);
    const Matrix w_g = w.solve(gk);
    const Matrix h_next = hk + ak.transpose() * hk * w_a;
    gk = gk + ak * w_g * ak.transpose();
    ak = ak * w_a;
    const double change = (h_next - hk).norm();
    hk = 0.5 * (h_next + h_next.transpose());
    if (!hk.allFinite()) break;
    if (change <= 1e-14 * std::max(1.0, hk.norm())) {
      const Matrix k = -(r + b.transpose() * hk * b).ldlt().solve(b.transpose() * hk * a);
      if (!is_schur(a + b * k, 0.0)) break;
      return hk;
    }
  }
  throw Error(ErrorKind::NotSchur, "solve_dare: no stabilizing solution (pair not stabilizable?)");
}

Matrix dlqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  if (b.cols() == 0) return Matrix::Zero(0, a.rows());
  const Matrix p = solve_dare(a, b, q, r);
  return -(r + b.transpose() * p * b).ldlt().solve(b.transpose() * p * a);
}

Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& s) {
  if (f.rows() != f.cols() || s.rows() != f.rows() || s.cols() != f.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_discrete_lyapunov: inconsistent shapes");
  }
  if (!is_schur(f, 0.0)) throw Error(ErrorKind::NotSchur, "solve_discrete_lyapunov: F not Schur");
  Matrix p = 0.5 * (s + s.transpose());
  Matrix fk = f;
  for (int it = 0; it < 64; ++it) {
    p += fk.transpose() * p * fk;
    fk = fk * fk;
    if (fk.norm() < 1e-18) break;
  }
  return 0.5 * (p + p.transpose());
}

std::pair<Matrix, Matrix> zoh_discretize(const Matrix& ac, const Matrix& bc, double dt) {
  const Eigen::Index n = ac.rows();
  const Eigen::Index m = bc.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = ac * dt;
  aug.topRightCorner(n, m) = bc * dt;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

}  // namespace hmpc
