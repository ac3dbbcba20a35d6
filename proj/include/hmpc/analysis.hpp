#pragma once

#include <optional>
#include <vector>

#include "hmpc/hl_controller.hpp"
#include "hmpc/ll_controller.hpp"
#include "hmpc/lti_model.hpp"
#include "hmpc/reduction.hpp"
#include "hmpc/report.hpp"

namespace hmpc {

/// ||sum_j A_H^{N-j} B_H - beta sum_j A_L^{N-j} B_L||, the lifted input-response mismatch.
double kappa(const InterconnectedModel& model, const ReducedModel& r, int N_L);

/// ||A_H^N|| ||G_H(1)|| + ||A_L^N|| ||beta|| ||G_L(1)||, which decays geometrically in N.
double kappa_bound(const InterconnectedModel& model, const ReducedModel& r, int N_L);

/// A_H^N beta - beta A_L^N.
Matrix state_mismatch(const InterconnectedModel& model, const ReducedModel& r, int N_L);

/// sigma_min(beta_i [A_ii^{N-1} B_ii, ..., B_ii]). Throws Error(RankDeficient) at or below 1e-12.
double reachability_projection_sigma(const InterconnectedModel& model, const Matrix& beta_i, int N_L, int i);

/// Per-step growth of the decentralized prediction: s_i(j) = sum_{r=1}^{j} ||A_ii^{j-r} B_ii||,
/// so that rho_dxhat_i(j) = rho_dhat_i s_i(j). Rows are subsystems, columns j = 0..N_L.
Matrix prediction_growth(const InterconnectedModel& model, int N_L);

/// Everything the radius LP needs that does not depend on the radii.
struct StructuralConstants {
  int N_L = 0;
  double kappa = 0.0;
  double kappa_bound = 0.0;
  double A_norm = 0.0;     // ||A_H^N beta - beta A_L^N||
  double R_norm = 0.0;     // ||[B_L, A_L B_L, ..., A_L^{N-1} B_L]||
  double AL_N_norm = 0.0;  // ||A_L^N||
  Vector sigma_min;        // per subsystem
  Vector rho_u;            // per-subsystem input ball radii
  Matrix lambda_matrix;    // Lambda_ij
  Vector omega;            // rho_w <= sum_l omega_l rho_dhat_l
};

StructuralConstants structural_constants(const InterconnectedModel& model, const ReducedModel& r,
                                         const LLGain& ll, int N_L);

struct RadiusAllocation {
  Vector rho_delta_u_hat;
  Vector rho_u_bar;
  Matrix lambda_matrix;
  double objective = 0.0;
  bool certified = false;
  Vector kappa_slack;   // sqrt(N) sigma_i rho_dhat_i - kappa sum(rho_ubar), per subsystem
  Vector budget_slack;  // rho_u - (Lambda + I) rho_dhat - rho_ubar
};

/// Extra linear rows that make the allocation usable end to end: the start
/// bound lambda_i >= ||x0||, chi_i <= 1, and room in U_bar_i for K_H,i Z.
struct Certification {
  double x0_norm = 0.0;
  Vector kh_row_norms;      // ||K_H,i|| per subsystem
  double rpi_factor = 0.0;  // radius of Z per unit radius of W
  double margin = 1e-6;
};

struct TuningOptions {
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  double slack = 1e-9;
  std::optional<Certification> certify;
};

/// Radius allocation LP. Throws Error(InfeasibleTuning).
RadiusAllocation tune_radii(const InterconnectedModel& model, const ReducedModel& r, const LLGain& ll, int N_L,
                            const TuningOptions& options = {});

/// Both LP constraint families re-evaluated on a given allocation.
ValidationReport verify_allocation(const StructuralConstants& sc, const Vector& rho_delta_u_hat,
                                   const Vector& rho_u_bar, double slack);

struct CertificateReport {
  int N_L = 0;
  int nbar = 0;
  double kappa = 0.0;
  double kappa_bound = 0.0;
  double A_norm = 0.0;
  double R_norm = 0.0;
  double AL_N_norm = 0.0;
  Vector sigma_min;
  Vector chi;
  Vector lambda;
  double rho_u = 0.0;      // radius of the ball around the full input set
  double rho_u_bar = 0.0;  // radius of the ball around the product of U_bar_i
  Vector rho_u_i;
  Vector rho_delta_u_hat;
  Vector rho_u_bar_i;
  Matrix rho_delta_x_hat;        // M x (N+1), per subsystem
  Vector rho_delta_x_hat_total;  // N+1, Euclidean combination
  Matrix rho_delta_u;            // M x N, correction growth per fast offset
  Vector rho_delta_u_bar;        // M, closed form at N - 1
  double rho_w = 0.0;
  double kappa_du = 0.0;
  double rho_x = 0.0;
  double envelope = 0.0;  // sum_h ||(F_L^[N])^h|| rho_x
  double x0_norm = 0.0;
  bool x0_bound_ok = false;
  ValidationReport conditions;

  bool pass() const { return conditions.pass() && x0_bound_ok; }
};

/// Evaluates every feasibility and convergence constant for the given
/// radii. Failures are recorded in `conditions`, never thrown.
CertificateReport certificate_constants(const InterconnectedModel& model, const ReducedModel& r, const GainDesign& hl,
                                     const LLGain& ll, const Vector& rho_delta_u_hat, const Vector& rho_u_bar,
                                     int N_L, double x0_norm);

/// Ball of radius rho_w in the reduced state space.
BallSet build_disturbance_set(const CertificateReport& report);

/// ||B^C (I + diag(K) F diag(A^C) B_L)||: maps the stacked plan to the state
/// increment over one slow interval.
Matrix correction_response(const InterconnectedModel& model, const LLGain& ll, int N_L);

/// Sum of ||F^h|| until the terms drop below `tail`. Infinity if F is not Schur.
double power_norm_sum(const Matrix& f, double tail = 1e-12);

struct SweepRow {
  int N_L = 0;
  Vector lambda;
  Vector chi;
  double AL_N_norm = 0.0;
  double kappa = 0.0;
  double kappa_bound = 0.0;
};

/// lambda_i, chi_i, ||A_L^N|| and kappa over a grid of N_L at fixed radii.
std::vector<SweepRow> sweep_horizon(const InterconnectedModel& model, const ReducedModel& r,
                                    const Vector& rho_delta_u_hat, const Vector& rho_u_bar,
                                    const std::vector<int>& horizons);

/// Strict monotonicity of the sweep rows and kappa under its bound.
ValidationReport sweep_monotonicity(const std::vector<SweepRow>& rows);

}  // namespace hmpc
