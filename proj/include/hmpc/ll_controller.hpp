#pragma once

#include <vector>

#include "hmpc/lti_model.hpp"
#include "hmpc/qp_solver.hpp"

namespace hmpc {

/// Centralized open-loop prediction over one slow interval under held u_bar.
struct AuxiliaryState {
  std::vector<Vector> x_hat;  // N_L + 1 entries, x_hat[0] = measured state
  Vector u_bar;
};

AuxiliaryState simulate_auxiliary(const InterconnectedModel& model, const Vector& x_at_kNL, const Vector& u_bar,
                                  int N_L);

struct LLWeights {
  Matrix Q;
  Matrix R;
};

struct LLGain {
  std::vector<Matrix> K_i;
  Matrix K;    // block diagonal
  Matrix F_L;  // A_L + B_L K, coupled
  double rho_F_L = 0.0;
  int detune_rounds = 0;
};

/// Per-subsystem LQR gains; R is detuned by 4 (at most 12 rounds) until the
/// coupled closed loop is Schur. Throws DesignFailed.
LLGain design_ll_gain(const InterconnectedModel& model, const std::vector<LLWeights>& weights);

struct DeltaPlan {
  int subsystem = 0;
  std::vector<Vector> u_hat_seq;  // N_L entries
  std::vector<Vector> x_hat_seq;  // N_L + 1 entries, first is zero
  Matrix feedback_gain;
  Vector target;
  double objective = 0.0;
  double terminal_residual = 0.0;
  int iterations = 0;
};

struct LLProblem {
  int subsystem = 0;
  Vector x_bar_pred;      // reduced state predicted by the slow layer
  Vector x_hat_terminal;  // auxiliary prediction at the end of the interval
  Matrix beta_i;
  BallSet delta_u_hat;
  Matrix Q;
  Matrix R;
  int N_L = 1;
};

/// Decentralized correction QP with the terminal matching equality.
/// Throws Error(InfeasibleLL).
DeltaPlan solve_ll(const InterconnectedModel& model, const LLProblem& problem, const Matrix& k_i,
                   const QPSettings& qp = {});

/// delta_u_hat(j) + K_i (delta_x_i - delta_x_hat_i(j)).
Vector apply_correction(const DeltaPlan& plan, const Vector& delta_x_i, int j);

/// H_i(N) = beta_i [A^{N-1} B, ..., B] (maps the stacked plan to the terminal projection).
Matrix terminal_map(const SubsystemModel& s, const Matrix& beta_i, int N_L);

}  // namespace hmpc
