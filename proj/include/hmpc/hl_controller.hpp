#pragma once

#include <vector>

#include "hmpc/lti_model.hpp"
#include "hmpc/qp_solver.hpp"
#include "hmpc/reduction.hpp"
#include "hmpc/set_calculus.hpp"

namespace hmpc {

/// Reduced model advanced N_L fast steps with the input held.
struct SlowModel {
  Matrix A_slow;
  Matrix B_slow;
  int N_L = 1;
};

SlowModel lift(const ReducedModel& r, int N_L);

/// Output of the slow-rate gain synthesis.
struct GainDesign {
  Matrix K_H;
  Matrix F_H;     // A_slow + B_slow K_H
  Matrix F_L_NL;  // A_L^N + B_L^[N] K_H beta
  Matrix B_L_NL;  // sum_{j<N} A_L^j B_L
  double rho_F_H = 0.0;
  double rho_F_L_NL = 0.0;
  Matrix R_used;  // input weight after detuning
  int detune_rounds = 0;
};

/// Riccati gain on the lifted reduced model; R is multiplied by 4 (at most
/// 12 times) until both F_H and F_L^[N] are Schur. Throws DesignFailed.
GainDesign design_gain(const SlowModel& slow, const InterconnectedModel& full, const ReducedModel& r,
                       const Matrix& q, const Matrix& rw);

/// P_H with F' P F - P = -(Q + K' R K). Throws NotSchur.
Matrix terminal_cost(const Matrix& f_h, const Matrix& k_h, const Matrix& q_h, const Matrix& r_h);

struct HLDesign {
  Matrix K_H;
  Matrix F_H;
  Matrix F_L_NL;
  Matrix P_H;
  Matrix Q_H;
  Matrix R_H;
  int N_H = 10;
  BallSet W;
  RPIApproximation Z_info;
  BallSet Z;
  EllipsoidSet X_F;
  std::vector<BallSet> U_bar;    // per subsystem
  std::vector<BallSet> U_tight;  // per subsystem, U_bar_i minus K_H,i Z
  std::vector<IndexRange> input_blocks;

  int nbar() const { return static_cast<int>(K_H.cols()); }
  int m() const { return static_cast<int>(K_H.rows()); }
};

/// Assembles the tube design from the gain, weights, per-subsystem input
/// radii of the reduced layer and the disturbance ball. Throws EmptyResult
/// when some U_bar_i does not contain K_H,i Z.
HLDesign make_hl_design(const GainDesign& gain, const Matrix& q_h, const Matrix& r_h, int n_h,
                        const std::vector<IndexRange>& input_blocks, const Vector& u_bar_radii, const BallSet& w);

struct HLSolution {
  Vector projected;  // beta x at the slow instant
  Vector x_nominal_0;
  std::vector<Vector> x_nominal_seq;  // N_H + 1 entries
  std::vector<Vector> u_nominal_seq;  // N_H entries
  Vector u_applied;
  Vector x_bar_pred;  // A_slow beta x + B_slow u_applied
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  double tube_distance = 0.0;  // ||beta x - x_nominal_0||
};

struct HLOptions {
  QPSettings qp;
  /// On infeasibility, run the phase-1 problem (closest admissible nominal
  /// state) and report its distance in the error message.
  bool diagnose = true;
};

/// One slow-rate tube MPC step. Throws Error(InfeasibleHL).
HLSolution solve_hl(const HLDesign& design, const SlowModel& slow, const Vector& x_full, const Matrix& beta,
                    const HLOptions& options = {});
HLSolution solve_hl_projected(const HLDesign& design, const SlowModel& slow, const Vector& projected,
                              const HLOptions& options = {});

/// Smallest ||beta x - x_nominal_0|| over nominal trajectories meeting the
/// input and terminal constraints (tube constraint dropped).
double hl_phase1_distance(const HLDesign& design, const SlowModel& slow, const Vector& projected,
                          const QPSettings& qp = {});

}  // namespace hmpc
