#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hmpc/analysis.hpp"
#include "hmpc/hl_controller.hpp"
#include "hmpc/ll_controller.hpp"
#include "hmpc/reduction.hpp"

namespace hmpc {

/// Controller settings for one run. Weights are multiples of the identity.
struct RunConfig {
  int N_L = 20;
  int N_H = 10;
  double q_h = 1.0;   // Q_H = q_h I
  double r_h = 0.1;   // R_H = r_h I
  double q_ll = 1.0;  // Q_i = q_ll I
  double r_ll = 10.0; // R_i = r_ll I
  double x0_value = -2.0;  // x0 = x0_value * ones unless x0 is given
  std::optional<Vector> x0;
  int horizon = 100;  // slow steps
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  /// Add the start, chi and tube-room rows to the radius LP.
  bool certified = true;
  std::optional<Vector> rho_delta_u_hat;  // explicit radii skip the LP
  std::optional<Vector> rho_u_bar;
  std::vector<int> orders;  // reduced order per subsystem, default 1
  QPSettings qp;
  std::uint64_t seed = 1;
  int soak_steps = 200;

  /// Throws Error(ConfigInvalid).
  void validate() const;
  Vector initial_state(int n) const;
};

/// Result of one checklist item, in the order they are attempted.
struct ChecklistItem {
  std::string name;
  bool done = false;
  std::string detail;
};

/// Everything the on-line loop needs, produced by the off-line design.
struct DesignArtifacts {
  InterconnectedModel model;
  RunConfig run;
  ReducedModel reduced;
  SlowModel slow;
  GainDesign hl_gain;
  LLGain ll_gain;
  std::vector<LLWeights> ll_weights;
  RadiusAllocation radii;
  CertificateReport certificate;
  HLDesign hl;
  ValidationReport structure;  // model and reduction checks
  std::vector<ChecklistItem> checklist;
  double initial_phase1_distance = 0.0;
  double rpi_factor = 0.0;

  bool complete() const;
};

/// Runs the off-line checklist: reduction, slow gain, fast gains, radii,
/// certificate and disturbance set, tube and terminal ingredients, initial
/// feasibility. Throws Error(DesignIncomplete) naming the first unmet item,
/// with the checklist so far in the message.
DesignArtifacts run_design(const InterconnectedModel& model, const RunConfig& run);

/// Same as run_design, but records failures in the checklist instead of
/// throwing. Items after the first failure are left undone.
DesignArtifacts try_design(const InterconnectedModel& model, const RunConfig& run);

std::string format_checklist(const std::vector<ChecklistItem>& items);

}  // namespace hmpc
