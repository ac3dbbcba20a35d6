#include "hmpc/ll_controller.hpp"

#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

AuxiliaryState simulate_auxiliary(const InterconnectedModel& model, const Vector& x_at_kNL, const Vector& u_bar,
                                  int N_L) {
  AuxiliaryState aux;
  aux.u_bar = u_bar;
  aux.x_hat.reserve(N_L + 1);
  aux.x_hat.push_back(x_at_kNL);
  for (int j = 0; j < N_L; ++j) aux.x_hat.push_back(model.step(aux.x_hat.back(), u_bar));
  return aux;
}

LLGain design_ll_gain(const InterconnectedModel& model, const std::vector<LLWeights>& weights) {
  if (static_cast<int>(weights.size()) != model.count()) {
    throw Error(ErrorKind::DimensionMismatch, "design_ll_gain: one weight pair per subsystem");
  }
  LLGain g;
  std::vector<Matrix> r_cur;
  for (const auto& w : weights) r_cur.push_back(w.R);
  for (int round = 0; round <= 12; ++round) {
    g.K_i.clear();
    g.K = Matrix::Zero(model.m(), model.n());
    for (int i = 0; i < model.count(); ++i) {
      const auto& s = model.subsystems[i];
      g.K_i.push_back(dlqr_gain(s.A, s.B, weights[i].Q, r_cur[i]));
      g.K.block(model.input_blocks[i].offset, model.state_blocks[i].offset, s.m(), s.n()) = g.K_i.back();
    }
    g.F_L = model.A + model.B * g.K;
    g.rho_F_L = spectral_radius(g.F_L);
    if (is_schur(g.F_L)) {
      g.detune_rounds = round;
      return g;
    }
    for (auto& r : r_cur) r *= 4.0;
  }
  std::ostringstream msg;
  msg << "design_ll_gain: coupled closed loop not Schur after detuning (rho = " << g.rho_F_L << ")";
  throw Error(ErrorKind::DesignFailed, msg.str());
}

Matrix terminal_map(const SubsystemModel& s, const Matrix& beta_i, int N_L) {
  const int m = s.m();
  Matrix h(beta_i.rows(), N_L * m);
  Matrix p = s.B;  // A^{N-1-j} B for j = N-1 down to 0
  for (int j = N_L - 1; j >= 0; --j) {
    h.middleCols(j * m, m) = beta_i * p;
    p = s.A * p;
  }
  return h;
}

DeltaPlan solve_ll(const InterconnectedModel& model, const LLProblem& pb, const Matrix& k_i, const QPSettings& qp) {
  if (pb.subsystem < 0 || pb.subsystem >= model.count()) throw Error(ErrorKind::DimensionMismatch, "solve_ll: index");
  const auto& s = model.subsystems[pb.subsystem];
  const int n = s.n(), m = s.m(), N = pb.N_L;
  if (pb.beta_i.cols() != n || pb.x_hat_terminal.size() != n || pb.x_bar_pred.size() != pb.beta_i.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_ll: inconsistent sizes");
  }
  DeltaPlan plan;
  plan.subsystem = pb.subsystem;
  plan.feedback_gain = k_i;
  plan.target = pb.x_bar_pred - pb.beta_i * pb.x_hat_terminal;

  // Condensed prediction: delta_x_hat(j) = G_j u, u stacked over the interval.
  std::vector<Matrix> gam(N + 1, Matrix::Zero(n, N * m));
  for (int j = 0; j < N; ++j) {
    gam[j + 1] = s.A * gam[j];
    gam[j + 1].middleCols(j * m, m) += s.B;
  }
  QuadraticProgram p;
  p.H = Matrix::Zero(N * m, N * m);
  for (int j = 1; j < N; ++j) p.H += 2.0 * gam[j].transpose() * pb.Q * gam[j];
  for (int j = 0; j < N; ++j) p.H.block(j * m, j * m, m, m) += 2.0 * pb.R;
  p.H = 0.5 * (p.H + p.H.transpose());
  p.g = Vector::Zero(N * m);
  p.A_eq = pb.beta_i * gam[N];
  p.b_eq = plan.target;
  for (int j = 0; j < N; ++j) p.sets.push_back(SetConstraint::ball(j * m, m, pb.delta_u_hat.radius));

  const auto res = solve_qp(p, qp);
  if (res.status != SolveStatus::Optimal) {
    std::ostringstream msg;
    msg << "solve_ll: subsystem " << pb.subsystem + 1 << " " << to_string(res.status) << " (target norm "
        << plan.target.norm() << ", ball radius " << pb.delta_u_hat.radius << ", primal residual "
        << res.primal_residual << ")";
    throw Error(ErrorKind::InfeasibleLL, msg.str());
  }
  plan.iterations = res.iterations;
  plan.objective = res.objective;
  for (int j = 0; j < N; ++j) plan.u_hat_seq.push_back(res.x.segment(j * m, m));
  plan.x_hat_seq.push_back(Vector::Zero(n));
  for (int j = 0; j < N; ++j) plan.x_hat_seq.push_back(s.A * plan.x_hat_seq.back() + s.B * plan.u_hat_seq[j]);
  plan.terminal_residual = (pb.beta_i * plan.x_hat_seq.back() - plan.target).norm();
  return plan;
}

Vector apply_correction(const DeltaPlan& plan, const Vector& delta_x_i, int j) {
  if (j < 0 || j >= static_cast<int>(plan.u_hat_seq.size())) {
    throw Error(ErrorKind::DimensionMismatch, "apply_correction: fast offset outside the interval");
  }
  return plan.u_hat_seq[j] + plan.feedback_gain * (delta_x_i - plan.x_hat_seq[j]);
}

}  // namespace hmpc
