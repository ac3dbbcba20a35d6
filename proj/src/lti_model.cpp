#include "hmpc/lti_model.hpp"

#include <string>

#include "hmpc/error.hpp"

namespace hmpc {

CouplingMap CouplingMap::zero(const std::vector<SubsystemModel>& subsystems) {
  CouplingMap map;
  const auto count = subsystems.size();
  map.blocks.assign(count, std::vector<Matrix>(count));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < count; ++j)
      map.blocks[i][j] = Matrix::Zero(subsystems[i].E.cols(), subsystems[j].C.rows());
  return map;
}

Vector InterconnectedModel::step(const Vector& x, const Vector& u) const {
  if (x.size() != A.rows() || u.size() != B.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "step: state or input has wrong size");
  }
  return A * x + B * u;
}

Matrix InterconnectedModel::decoupled_A() const {
  Matrix ad = Matrix::Zero(n(), n());
  for (const auto& blk : state_blocks)
    ad.block(blk.offset, blk.offset, blk.size, blk.size) = A.block(blk.offset, blk.offset, blk.size, blk.size);
  return ad;
}

Vector InterconnectedModel::input_radii() const {
  Vector r(count());
  for (int i = 0; i < count(); ++i) r(i) = subsystems[i].input_set.radius;
  return r;
}

InterconnectedModel assemble(std::vector<SubsystemModel> subsystems, CouplingMap coupling) {
  const auto count = subsystems.size();
  if (count == 0) throw Error(ErrorKind::DimensionMismatch, "assemble: no subsystems");
  if (coupling.blocks.empty()) coupling = CouplingMap::zero(subsystems);
  if (coupling.blocks.size() != count) throw Error(ErrorKind::DimensionMismatch, "assemble: coupling grid size");

  InterconnectedModel model;
  int n = 0, m = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& s = subsystems[i];
    const std::string tag = "subsystem " + std::to_string(i);
    if (s.A.rows() != s.A.cols() || s.B.rows() != s.A.rows() || s.E.rows() != s.A.rows() ||
        s.C.cols() != s.A.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "assemble: " + tag + " matrices inconsistent");
    }
    if (s.input_set.dim != s.B.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "assemble: " + tag + " input set dimension");
    }
    if (coupling.blocks[i].size() != count) throw Error(ErrorKind::DimensionMismatch, "assemble: coupling row");
    model.state_blocks.push_back({n, s.n()});
    model.input_blocks.push_back({m, s.m()});
    n += s.n();
    m += s.m();
  }

  model.A = Matrix::Zero(n, n);
  model.B = Matrix::Zero(n, m);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& si = subsystems[i];
    const auto& ri = model.state_blocks[i];
    model.A.block(ri.offset, ri.offset, ri.size, ri.size) = si.A;
    model.B.block(ri.offset, model.input_blocks[i].offset, ri.size, si.m()) = si.B;
    for (std::size_t j = 0; j < count; ++j) {
      const Matrix& l = coupling.blocks[i][j];
      const auto& sj = subsystems[j];
      if (l.rows() != si.E.cols() || l.cols() != sj.C.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "assemble: L_" + std::to_string(i) + std::to_string(j) +
                                                      " does not chain E_i and C_j");
      }
      if (i == j) {
        if (l.size() > 0 && l.cwiseAbs().maxCoeff() != 0.0) {
          throw Error(ErrorKind::NonzeroSelfCoupling, "assemble: L_" + std::to_string(i) + std::to_string(i));
        }
        continue;
      }
      const auto& rj = model.state_blocks[j];
      model.A.block(ri.offset, rj.offset, ri.size, rj.size) = si.E * l * sj.C;
    }
  }
  model.subsystems = std::move(subsystems);
  model.coupling = std::move(coupling);
  return model;
}

ValidationReport validate_structure(const InterconnectedModel& model) {
  ValidationReport report;
  const double rho = spectral_radius(model.A);
  report.add("schur_A_L", rho, 1.0 - 1e-9, rho < 1.0 - 1e-9, "spectral radius of A_L");
  for (int i = 0; i < model.count(); ++i) {
    const auto& s = model.subsystems[i];
    const Matrix reach = reachability_matrix(s.A, s.B, s.n());
    const int rank = numerical_rank(reach, 1e-10 * norm2(reach));
    report.add("reachable_" + std::to_string(i + 1), rank, s.n(), rank == s.n(), "rank of [B, AB, ..., A^{n-1}B]");
  }
  return report;
}

StateTrajectory simulate(const InterconnectedModel& model, const Vector& x0, const std::vector<Vector>& inputs) {
  StateTrajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(x0);
  for (std::size_t h = 0; h < inputs.size(); ++h) {
    traj.times.push_back(static_cast<int>(h));
    traj.inputs.push_back(inputs[h]);
    traj.states.push_back(model.step(traj.states.back(), inputs[h]));
  }
  traj.times.push_back(static_cast<int>(inputs.size()));
  return traj;
}

}  // namespace hmpc
