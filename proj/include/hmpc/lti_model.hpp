#pragma once

#include <vector>

#include "hmpc/linalg.hpp"
#include "hmpc/report.hpp"
#include "hmpc/set_calculus.hpp"

namespace hmpc {

/// One subsystem: x+ = A x + B u + E s, z = C x, u in a ball.
struct SubsystemModel {
  Matrix A;
  Matrix B;
  Matrix E;
  Matrix C;
  BallSet input_set;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

/// blocks[i][j] maps z_j into s_i. Diagonal blocks must vanish.
struct CouplingMap {
  std::vector<std::vector<Matrix>> blocks;

  /// All-zero coupling sized from the subsystems' E and C.
  static CouplingMap zero(const std::vector<SubsystemModel>& subsystems);
};

struct IndexRange {
  int offset = 0;
  int size = 0;
};

class InterconnectedModel {
 public:
  std::vector<SubsystemModel> subsystems;
  CouplingMap coupling;
  Matrix A;
  Matrix B;
  std::vector<IndexRange> state_blocks;
  std::vector<IndexRange> input_blocks;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int count() const { return static_cast<int>(subsystems.size()); }

  /// x+ = A x + B u. Throws Error(DimensionMismatch).
  Vector step(const Vector& x, const Vector& u) const;

  /// Block-diagonal part of A (interconnections discarded).
  Matrix decoupled_A() const;
  /// Per-subsystem input radii.
  Vector input_radii() const;
};

/// Collective model with off-diagonal blocks E_i L_ij C_j and B = diag(B_ii).
InterconnectedModel assemble(std::vector<SubsystemModel> subsystems, CouplingMap coupling);

/// Spectral radius / Schur test and per-subsystem reachability rank.
ValidationReport validate_structure(const InterconnectedModel& model);

struct StateTrajectory {
  std::vector<int> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
};

/// Applies inputs[h] for h = 0..len-1; states has len+1 entries.
StateTrajectory simulate(const InterconnectedModel& model, const Vector& x0, const std::vector<Vector>& inputs);

}  // namespace hmpc
