#pragma once

#include <cstdint>
#include <vector>

#include "hmpc/design.hpp"

namespace hmpc {

/// One fast step h = k N_L + j.
struct FastRecord {
  int k = 0;
  int j = 0;
  int h = 0;
  Vector x;
  Vector x_next;
  Vector u;
  Vector u_bar;
  Vector delta_u_hat;
  Vector delta_u;
  Vector x_hat;        // auxiliary prediction x_hat(j)
  Vector delta_x;      // x - x_hat(j)
  Vector delta_x_hat;  // decentralized plan state
  Vector input_margin;       // rho_u_i - ||u_i||
  Vector correction_margin;  // rho_du_i(j) - ||delta_u_i - delta_u_hat_i||
};

/// One slow step k.
struct SlowRecord {
  int k = 0;
  Vector projected;    // beta x(k N_L)
  Vector x_nominal;    // x_bar^o(k)
  Vector u_nominal;    // first nominal input
  Vector u_bar;        // applied slow input
  Vector x_bar_pred;   // slow prediction of beta x((k+1) N_L)
  Vector w_bar;        // beta x((k+1) N_L) - x_bar_pred
  double w_norm = 0.0;
  double tube_distance = 0.0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double x_norm = 0.0;  // ||x(k N_L)||
  std::vector<double> ll_residuals;
};

struct TraceArchive {
  std::vector<FastRecord> fast;
  std::vector<SlowRecord> slow;
  Vector x_final;  // x(steps N_L)
  int N_L = 0;
  int steps = 0;
};

/// Two-rate loop for `steps` slow steps starting at x0: slow tube MPC, the
/// auxiliary open-loop prediction, parallel low-level corrections and N_L
/// fast steps of u = u_bar + delta_u. Throws DesignIncomplete, or
/// InfeasibleHL / InfeasibleLL with the step index and a state snapshot.
TraceArchive run_closed_loop(const DesignArtifacts& design, const Vector& x0, int steps);

/// Uses the design's run config for x0 and the horizon.
TraceArchive run_closed_loop(const DesignArtifacts& design);

struct SoakRecord {
  int k = 0;
  Vector projected;
  Vector w;
  double tube_distance = 0.0;
  double nominal_norm = 0.0;
  double input_norm_max = 0.0;  // max_i ||u_i|| / rho_ubar_i
};

/// Slow layer alone on x_bar+ = A x_bar + B u + w with w drawn on the
/// boundary of W (seeded). Throws InfeasibleHL with the step index.
std::vector<SoakRecord> run_hl_soak(const DesignArtifacts& design, const Vector& x_bar0, int steps,
                                    std::uint64_t seed);

}  // namespace hmpc
