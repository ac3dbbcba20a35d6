#pragma once

#include <vector>

#include "hmpc/lti_model.hpp"
#include "hmpc/report.hpp"

namespace hmpc {

/// Reduced collective model x_bar+ = A_H x_bar + B_H u with projection beta.
struct ReducedModel {
  Matrix A_H;
  Matrix B_H;
  Matrix beta;  // block diagonal, blocks beta_i (orders[i] x n_i)
  std::vector<int> orders;
  std::vector<IndexRange> blocks;  // row ranges of beta / A_H per subsystem

  int n() const { return static_cast<int>(A_H.rows()); }
  Matrix beta_block(const InterconnectedModel& model, int i) const;
};

struct ReductionOptions {
  /// Flip each beta_i row so its largest-magnitude entry is negative.
  bool negative_convention = false;
};

/// Modal truncation per subsystem: keep the orders[i] dominant real modes of
/// A_ii, take the matching left eigenvectors as beta_i rows, and set
/// B_H = (I - A_H) beta (I - A_L)^{-1} B_L so the DC gains match exactly.
ReducedModel reduce(const InterconnectedModel& model, const std::vector<int>& orders,
                    const ReductionOptions& options = {});

/// DC gain of the full model seen through beta: beta (I - A_L)^{-1} B_L.
Matrix projected_dc_gain(const ReducedModel& r, const InterconnectedModel& model);

/// Schur test of A_H, rank of each beta_i, DC-gain residual.
ValidationReport verify_reduction(const ReducedModel& r, const InterconnectedModel& model);

}  // namespace hmpc
