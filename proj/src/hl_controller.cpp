#include "hmpc/hl_controller.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

SlowModel lift(const ReducedModel& r, int N_L) {
  if (N_L < 1) throw Error(ErrorKind::DimensionMismatch, "lift: N_L must be at least 1");
  return {matrix_power(r.A_H, N_L), geometric_sum(r.A_H, r.B_H, N_L), N_L};
}

GainDesign design_gain(const SlowModel& slow, const InterconnectedModel& full, const ReducedModel& r,
                       const Matrix& q, const Matrix& rw) {
  GainDesign g;
  g.B_L_NL = geometric_sum(full.A, full.B, slow.N_L);
  const Matrix a_l_n = matrix_power(full.A, slow.N_L);
  Matrix r_cur = rw;
  for (int round = 0; round <= 12; ++round) {
    bool ok = true;
    try {
      g.K_H = dlqr_gain(slow.A_slow, slow.B_slow, q, r_cur);
    } catch (const Error&) {
      ok = false;
    }
    if (ok) {
      g.F_H = slow.A_slow + slow.B_slow * g.K_H;
      g.F_L_NL = a_l_n + g.B_L_NL * g.K_H * r.beta;
      g.rho_F_H = spectral_radius(g.F_H);
      g.rho_F_L_NL = spectral_radius(g.F_L_NL);
      if (is_schur(g.F_H) && is_schur(g.F_L_NL)) {
        g.R_used = r_cur;
        g.detune_rounds = round;
        return g;
      }
    }
    r_cur *= 4.0;
  }
  std::ostringstream msg;
  msg << "design_gain: no detuned gain makes both F_H and F_L^[N] Schur (last radii " << g.rho_F_H << ", "
      << g.rho_F_L_NL << ")";
  throw Error(ErrorKind::DesignFailed, msg.str());
}

Matrix terminal_cost(const Matrix& f_h, const Matrix& k_h, const Matrix& q_h, const Matrix& r_h) {
  const Matrix s = q_h + k_h.transpose() * r_h * k_h;
  Matrix p = solve_discrete_lyapunov(f_h, s);
  p = 0.5 * (p + p.transpose());
  const double residual = (f_h.transpose() * p * f_h - p + s).cwiseAbs().maxCoeff();
  if (residual > 1e-8 * std::max(1.0, p.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::NotSchur, "terminal_cost: Lyapunov residual too large");
  }
  return p;
}

HLDesign make_hl_design(const GainDesign& gain, const Matrix& q_h, const Matrix& r_h, int n_h,
                        const std::vector<IndexRange>& input_blocks, const Vector& u_bar_radii, const BallSet& w) {
  if (n_h < 1) throw Error(ErrorKind::DimensionMismatch, "make_hl_design: N_H must be positive");
  if (static_cast<Eigen::Index>(input_blocks.size()) != u_bar_radii.size()) {
    throw Error(ErrorKind::DimensionMismatch, "make_hl_design: one radius per subsystem");
  }
  HLDesign d;
  d.K_H = gain.K_H;
  d.F_H = gain.F_H;
  d.F_L_NL = gain.F_L_NL;
  d.Q_H = q_h;
  d.R_H = r_h;
  d.N_H = n_h;
  d.W = w;
  d.input_blocks = input_blocks;
  d.P_H = terminal_cost(gain.F_H, gain.K_H, q_h, r_h);
  d.Z_info = rpi_outer(gain.F_H, w);
  d.Z = d.Z_info.ball(d.nbar());

  double level = 1e12;
  bool degenerate = false;
  for (std::size_t i = 0; i < input_blocks.size(); ++i) {
    const auto& blk = input_blocks[i];
    d.U_bar.emplace_back(blk.size, u_bar_radii(static_cast<Eigen::Index>(i)));
    const Matrix k_i = gain.K_H.middleRows(blk.offset, blk.size);
    d.U_tight.push_back(minkowski_diff(d.U_bar.back(), linear_image_outer(k_i, d.Z)));
    const EllipsoidSet part = terminal_set(gain.F_H, d.P_H, k_i, d.U_tight.back());
    level = std::min(level, part.level);
    degenerate = degenerate || part.degenerate;
  }
  d.X_F.dim = d.nbar();
  d.X_F.shape = d.P_H;
  d.X_F.level = level;
  d.X_F.degenerate = degenerate;
  return d;
}

namespace {

struct HLLayout {
  int nbar, m, n_h;
  int x(int j) const { return j * nbar; }
  int u(int j) const { return (n_h + 1) * nbar + j * m; }
  int dim() const { return (n_h + 1) * nbar + n_h * m; }
};

QuadraticProgram build_hl_qp(const HLDesign& d, const SlowModel& slow, const Vector& projected, bool with_tube,
                             const HLLayout& lay) {
  QuadraticProgram p;
  const int dim = lay.dim();
  p.H = Matrix::Zero(dim, dim);
  p.g = Vector::Zero(dim);
  if (with_tube) {
    for (int j = 0; j < d.N_H; ++j) {
      p.H.block(lay.x(j), lay.x(j), lay.nbar, lay.nbar) = 2.0 * d.Q_H;
      p.H.block(lay.u(j), lay.u(j), lay.m, lay.m) = 2.0 * d.R_H;
    }
    p.H.block(lay.x(d.N_H), lay.x(d.N_H), lay.nbar, lay.nbar) = 2.0 * d.P_H;
  } else {
    // Phase 1: distance of the initial nominal state from the projection.
    p.H.block(0, 0, lay.nbar, lay.nbar) = 2.0 * Matrix::Identity(lay.nbar, lay.nbar);
    p.g.head(lay.nbar) = -2.0 * projected;
  }
  p.H += 1e-10 * Matrix::Identity(dim, dim);

  p.A_eq = Matrix::Zero(d.N_H * lay.nbar, dim);
  p.b_eq = Vector::Zero(d.N_H * lay.nbar);
  for (int j = 0; j < d.N_H; ++j) {
    const int row = j * lay.nbar;
    p.A_eq.block(row, lay.x(j + 1), lay.nbar, lay.nbar) = Matrix::Identity(lay.nbar, lay.nbar);
    p.A_eq.block(row, lay.x(j), lay.nbar, lay.nbar) = -slow.A_slow;
    p.A_eq.block(row, lay.u(j), lay.nbar, lay.m) = -slow.B_slow;
  }
  if (with_tube) p.sets.push_back(SetConstraint::ball(lay.x(0), lay.nbar, d.Z.radius, projected));
  for (int j = 0; j < d.N_H; ++j) {
    for (std::size_t i = 0; i < d.input_blocks.size(); ++i) {
      const auto& blk = d.input_blocks[i];
      p.sets.push_back(SetConstraint::ball(lay.u(j) + blk.offset, blk.size, d.U_tight[i].radius));
    }
  }
  p.sets.push_back(SetConstraint::ellipsoid(lay.x(d.N_H), d.P_H, d.X_F.level));
  return p;
}

}  // namespace

double hl_phase1_distance(const HLDesign& design, const SlowModel& slow, const Vector& projected,
                          const QPSettings& qp) {
  const HLLayout lay{design.nbar(), design.m(), design.N_H};
  const auto res = solve_qp(build_hl_qp(design, slow, projected, false, lay), qp);
  if (res.status != SolveStatus::Optimal) return std::numeric_limits<double>::infinity();
  return (res.x.head(lay.nbar) - projected).norm();
}

HLSolution solve_hl_projected(const HLDesign& design, const SlowModel& slow, const Vector& projected,
                              const HLOptions& options) {
  if (projected.size() != design.nbar()) throw Error(ErrorKind::DimensionMismatch, "solve_hl: projected state size");
  const HLLayout lay{design.nbar(), design.m(), design.N_H};
  const auto res = solve_qp(build_hl_qp(design, slow, projected, true, lay), options.qp);
  if (res.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "solve_hl: " << to_string(res.status) << " after " << res.iterations
        << " iterations (primal residual " << res.primal_residual << ", dual residual " << res.dual_residual << ")";
    if (options.diagnose) {
      msg << "; closest admissible nominal state is " << hl_phase1_distance(design, slow, projected, options.qp)
          << " away, tube radius " << design.Z.radius;
    }
    throw Error(ErrorKind::InfeasibleHL, msg.str());
  }
  HLSolution sol;
  sol.projected = projected;
  for (int j = 0; j <= design.N_H; ++j) sol.x_nominal_seq.push_back(res.x.segment(lay.x(j), lay.nbar));
  for (int j = 0; j < design.N_H; ++j) sol.u_nominal_seq.push_back(res.x.segment(lay.u(j), lay.m));
  sol.x_nominal_0 = sol.x_nominal_seq.front();
  sol.u_applied = sol.u_nominal_seq.front() + design.K_H * (projected - sol.x_nominal_0);
  sol.x_bar_pred = slow.A_slow * projected + slow.B_slow * sol.u_applied;
  // Report the cost without the regularization term.
  sol.objective = 0.0;
  for (int j = 0; j < design.N_H; ++j) {
    sol.objective += sol.x_nominal_seq[j].dot(design.Q_H * sol.x_nominal_seq[j]) +
                     sol.u_nominal_seq[j].dot(design.R_H * sol.u_nominal_seq[j]);
  }
  sol.objective += sol.x_nominal_seq.back().dot(design.P_H * sol.x_nominal_seq.back());
  sol.primal_residual = res.primal_residual;
  sol.dual_residual = res.dual_residual;
  sol.iterations = res.iterations;
  sol.tube_distance = (projected - sol.x_nominal_0).norm();
  return sol;
}

HLSolution solve_hl(const HLDesign& design, const SlowModel& slow, const Vector& x_full, const Matrix& beta,
                    const HLOptions& options) {
  if (beta.cols() != x_full.size()) throw Error(ErrorKind::DimensionMismatch, "solve_hl: beta and x differ");
  return solve_hl_projected(design, slow, beta * x_full, options);
}

}  // namespace hmpc
