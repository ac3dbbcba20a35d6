#include "hmpc/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "hmpc/error.hpp"

namespace hmpc {

Matrix ReducedModel::beta_block(const InterconnectedModel& model, int i) const {
  const auto& rows = blocks.at(i);
  const auto& cols = model.state_blocks.at(i);
  return beta.block(rows.offset, cols.offset, rows.size, cols.size);
}

namespace {

struct Mode {
  std::complex<double> value;
  Eigen::VectorXcd left;
};

// Modes of a sorted by |lambda| descending, then real part descending.
std::vector<Mode> sorted_left_modes(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a.transpose(), true);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::DefectiveMode, "reduce: eigen-decomposition failed");
  std::vector<Mode> modes;
  for (Eigen::Index k = 0; k < a.rows(); ++k) modes.push_back({es.eigenvalues()(k), es.eigenvectors().col(k)});
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& x, const Mode& y) {
    const double ax = std::abs(x.value), ay = std::abs(y.value);
    if (ax != ay) return ax > ay;
    return x.value.real() > y.value.real();
  });
  return modes;
}

Vector real_unit_row(const Eigen::VectorXcd& v) {
  // Rotate so the largest entry is real, then drop the (negligible) imaginary part.
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  const std::complex<double> phase = std::abs(v(k)) > 0 ? v(k) / std::abs(v(k)) : 1.0;
  Vector out = (v / phase).real();
  return out / out.norm();
}

}  // namespace

ReducedModel reduce(const InterconnectedModel& model, const std::vector<int>& orders,
                    const ReductionOptions& options) {
  if (static_cast<int>(orders.size()) != model.count()) {
    throw Error(ErrorKind::DimensionMismatch, "reduce: one order per subsystem required");
  }
  ReducedModel r;
  r.orders = orders;
  const int nbar = std::accumulate(orders.begin(), orders.end(), 0);
  r.A_H = Matrix::Zero(nbar, nbar);
  r.beta = Matrix::Zero(nbar, model.n());

  int row = 0;
  for (int i = 0; i < model.count(); ++i) {
    const auto& sub = model.subsystems[i];
    const int keep = orders[i];
    if (keep < 1 || keep > sub.n()) {
      throw Error(ErrorKind::DimensionMismatch, "reduce: order of subsystem " + std::to_string(i + 1) +
                                                    " outside [1, n_i]");
    }
    const auto modes = sorted_left_modes(sub.A);
    Matrix beta_i(keep, sub.n());
    for (int k = 0; k < keep; ++k) {
      const auto& mode = modes[k];
      if (std::abs(mode.value.imag()) > 1e-10 * std::max(1.0, std::abs(mode.value))) {
        throw Error(ErrorKind::ComplexDominantMode, "reduce: subsystem " + std::to_string(i + 1) +
                                                        " has a complex dominant mode");
      }
      Vector v = real_unit_row(mode.left);
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      double sign = v.sum();
      if (std::abs(sign) <= 1e-12) sign = v(arg);
      if (sign < 0) v = -v;
      if (options.negative_convention && v(arg) > 0) v = -v;
      beta_i.row(k) = v.transpose();
      r.A_H(row + k, row + k) = mode.value.real();
    }
    if (numerical_rank(beta_i, 1e-10) < keep) {
      throw Error(ErrorKind::DefectiveMode, "reduce: retained modes of subsystem " + std::to_string(i + 1) +
                                                " are not linearly independent");
    }
    const auto& cols = model.state_blocks[i];
    r.beta.block(row, cols.offset, keep, cols.size) = beta_i;
    r.blocks.push_back({row, keep});
    row += keep;
  }

  const Matrix eye = Matrix::Identity(model.n(), model.n());
  Eigen::FullPivLU<Matrix> lu(eye - model.A);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularDCGain, "reduce: I - A_L is singular");
  r.B_H = (Matrix::Identity(nbar, nbar) - r.A_H) * r.beta * lu.solve(model.B);
  return r;
}

Matrix projected_dc_gain(const ReducedModel& r, const InterconnectedModel& model) {
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(model.n(), model.n()) - model.A);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularDCGain, "I - A_L is singular");
  return r.beta * lu.solve(model.B);
}

ValidationReport verify_reduction(const ReducedModel& r, const InterconnectedModel& model) {
  ValidationReport report;
  const double rho = spectral_radius(r.A_H);
  report.add("schur_A_H", rho, 1.0 - 1e-9, rho < 1.0 - 1e-9, "spectral radius of A_H");
  for (int i = 0; i < static_cast<int>(r.blocks.size()); ++i) {
    const Matrix bi = r.beta_block(model, i);
    const int rank = numerical_rank(bi, 1e-10);
    report.add("beta_full_rank_" + std::to_string(i + 1), rank, bi.rows(), rank == bi.rows(),
               "singular values above 1e-10");
  }
  double residual = std::numeric_limits<double>::infinity();
  Eigen::FullPivLU<Matrix> lu_h(Matrix::Identity(r.n(), r.n()) - r.A_H);
  Eigen::FullPivLU<Matrix> lu_l(Matrix::Identity(model.n(), model.n()) - model.A);
  if (lu_h.isInvertible() && lu_l.isInvertible()) {
    residual = (r.beta * lu_l.solve(model.B) - lu_h.solve(r.B_H)).norm();
  }
  report.add("dc_gain_match", residual, 1e-8, residual <= 1e-8, "||beta G_L(1) - G_H(1)||_F");
  return report;
}

}  // namespace hmpc
