#include "hmpc/closed_loop.hpp"

#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "hmpc/error.hpp"

namespace hmpc {

namespace {

void require_complete(const DesignArtifacts& d) {
  if (!d.complete()) {
    throw Error(ErrorKind::DesignIncomplete, "closed loop needs a complete design\n" + format_checklist(d.checklist));
  }
}

[[noreturn]] void rethrow_at(const Error& e, int k, const Vector& x, const DesignArtifacts& d) {
  std::ostringstream msg;
  msg << "slow step " << k << ": " << e.what() << " [snapshot: ||x|| = " << x.norm()
      << ", ||beta x|| = " << (d.reduced.beta * x).norm() << ", min lambda_i = " << d.certificate.lambda.minCoeff()
      << ", rho_Z = " << d.hl.Z.radius << "]";
  throw Error(e.kind(), msg.str());
}

Vector segment(const Vector& v, const IndexRange& r) { return v.segment(r.offset, r.size); }

}  // namespace

TraceArchive run_closed_loop(const DesignArtifacts& design, const Vector& x0, int steps) {
  require_complete(design);
  const auto& model = design.model;
  const auto& r = design.reduced;
  const int N = design.run.N_L;
  const int M = model.count();
  if (x0.size() != model.n()) throw Error(ErrorKind::DimensionMismatch, "run_closed_loop: x0 size");
  if (steps < 0) throw Error(ErrorKind::DimensionMismatch, "run_closed_loop: negative step count");

  HLOptions hl_opt;
  hl_opt.qp = design.run.qp;
  std::vector<Matrix> beta_i;
  for (int i = 0; i < M; ++i) beta_i.push_back(r.beta_block(model, i));

  TraceArchive out;
  out.N_L = N;
  out.steps = steps;
  out.fast.reserve(static_cast<std::size_t>(steps) * N);
  Vector x = x0;

  for (int k = 0; k < steps; ++k) {
    HLSolution hl;
    try {
      hl = solve_hl(design.hl, design.slow, x, r.beta, hl_opt);
    } catch (const Error& e) {
      rethrow_at(e, k, x, design);
    }
    const AuxiliaryState aux = simulate_auxiliary(model, x, hl.u_applied, N);

    // Low-level problems are independent given the slow decision.
    std::vector<std::future<DeltaPlan>> jobs;
    for (int i = 0; i < M; ++i) {
      LLProblem pb;
      pb.subsystem = i;
      pb.x_bar_pred = segment(hl.x_bar_pred, r.blocks[i]);
      pb.x_hat_terminal = segment(aux.x_hat.back(), model.state_blocks[i]);
      pb.beta_i = beta_i[i];
      pb.delta_u_hat = BallSet(model.subsystems[i].m(), design.radii.rho_delta_u_hat(i));
      pb.Q = design.ll_weights[i].Q;
      pb.R = design.ll_weights[i].R;
      pb.N_L = N;
      jobs.push_back(std::async(std::launch::async, [&model, &design, pb, i] {
        return solve_ll(model, pb, design.ll_gain.K_i[i], design.run.qp);
      }));
    }
    std::vector<DeltaPlan> plans;
    try {
      for (auto& job : jobs) plans.push_back(job.get());
    } catch (const Error& e) {
      rethrow_at(e, k, x, design);
    }

    SlowRecord slow;
    slow.k = k;
    slow.projected = hl.projected;
    slow.x_nominal = hl.x_nominal_0;
    slow.u_nominal = hl.u_nominal_seq.front();
    slow.u_bar = hl.u_applied;
    slow.x_bar_pred = hl.x_bar_pred;
    slow.tube_distance = hl.tube_distance;
    slow.objective = hl.objective;
    slow.primal_residual = hl.primal_residual;
    slow.dual_residual = hl.dual_residual;
    slow.x_norm = x.norm();
    for (const auto& p : plans) slow.ll_residuals.push_back(p.terminal_residual);

    for (int j = 0; j < N; ++j) {
      FastRecord f;
      f.k = k;
      f.j = j;
      f.h = k * N + j;
      f.x = x;
      f.u_bar = hl.u_applied;
      f.x_hat = aux.x_hat[j];
      f.delta_x = x - aux.x_hat[j];
      f.delta_u_hat.resize(model.m());
      f.delta_u.resize(model.m());
      f.delta_x_hat.resize(model.n());
      f.input_margin.resize(M);
      f.correction_margin.resize(M);
      for (int i = 0; i < M; ++i) {
        const auto& ib = model.input_blocks[i];
        const auto& sb = model.state_blocks[i];
        f.delta_u_hat.segment(ib.offset, ib.size) = plans[i].u_hat_seq[j];
        f.delta_x_hat.segment(sb.offset, sb.size) = plans[i].x_hat_seq[j];
        f.delta_u.segment(ib.offset, ib.size) = apply_correction(plans[i], segment(f.delta_x, sb), j);
      }
      f.u = hl.u_applied + f.delta_u;
      for (int i = 0; i < M; ++i) {
        const auto& ib = model.input_blocks[i];
        f.input_margin(i) = model.subsystems[i].input_set.radius - f.u.segment(ib.offset, ib.size).norm();
        const double corr = (f.delta_u - f.delta_u_hat).segment(ib.offset, ib.size).norm();
        f.correction_margin(i) = design.certificate.rho_delta_u(i, j) - corr;
      }
      f.x_next = model.step(x, f.u);
      x = f.x_next;
      out.fast.push_back(std::move(f));
    }
    slow.w_bar = r.beta * x - hl.x_bar_pred;
    slow.w_norm = slow.w_bar.norm();
    out.slow.push_back(std::move(slow));
  }
  out.x_final = x;
  return out;
}

TraceArchive run_closed_loop(const DesignArtifacts& design) {
  return run_closed_loop(design, design.run.initial_state(design.model.n()), design.run.horizon);
}

std::vector<SoakRecord> run_hl_soak(const DesignArtifacts& design, const Vector& x_bar0, int steps,
                                    std::uint64_t seed) {
  require_complete(design);
  const int nb = design.reduced.n();
  if (x_bar0.size() != nb) throw Error(ErrorKind::DimensionMismatch, "run_hl_soak: x_bar0 size");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  HLOptions opt;
  opt.qp = design.run.qp;

  std::vector<SoakRecord> out;
  Vector xb = x_bar0;
  for (int k = 0; k < steps; ++k) {
    HLSolution hl;
    try {
      hl = solve_hl_projected(design.hl, design.slow, xb, opt);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "soak step " << k << ": " << e.what() << " [||x_bar|| = " << xb.norm() << "]";
      throw Error(e.kind(), msg.str());
    }
    Vector w(nb);
    for (int q = 0; q < nb; ++q) w(q) = gauss(rng);
    if (w.norm() > 0.0) w *= design.hl.W.radius / w.norm();

    SoakRecord rec;
    rec.k = k;
    rec.projected = xb;
    rec.w = w;
    rec.tube_distance = hl.tube_distance;
    rec.nominal_norm = hl.x_nominal_0.norm();
    for (std::size_t i = 0; i < design.hl.input_blocks.size(); ++i) {
      const auto& ib = design.hl.input_blocks[i];
      const double cap = design.hl.U_bar[i].radius;
      const double used = hl.u_applied.segment(ib.offset, ib.size).norm();
      rec.input_norm_max = std::max(rec.input_norm_max, cap > 0.0 ? used / cap : (used > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
    }
    out.push_back(std::move(rec));
    xb = design.slow.A_slow * xb + design.slow.B_slow * hl.u_applied + w;
  }
  return out;
}

}  // namespace hmpc
